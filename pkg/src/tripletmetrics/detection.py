"""Box-level detection metrics: IoU, greedy matching, and detection AP.

A prediction counts as a true positive only when its identity equals the
groundtruth identity AND the instrument-box IoU clears the threshold (both
conditions together, optionally extended with the target box).  Matching is
greedy in confidence order; every groundtruth instance is claimable at most
once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .recognition import APResult, average_precision

_EPS = 1e-6

MATCH_KINDS = ("instrument", "triplet")


def _check_unit(name, value):
    if not -_EPS <= value <= 1 + _EPS:
        raise ValueError(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in frame-normalized (x, y, w, h) form, top-left origin."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            _check_unit(name, value)
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative box extent w={self.w}, h={self.h}")
        _check_unit("x+w", self.x + self.w)
        _check_unit("y+h", self.y + self.h)

    @property
    def area(self):
        return self.w * self.h


def iou(a, b):
    """Intersection over union of two boxes; 0 whenever the union has no area.

    Areas are taken from the same corner coordinates as the intersection so
    that identical boxes score exactly 1.0 (w*h and (x+w)-x can disagree in
    the last bit, which would break matching at theta=1).
    """
    ax2, ay2 = a.x + a.w, a.y + a.h
    bx2, by2 = b.x + b.w, b.y + b.h
    ix = min(ax2, bx2) - max(a.x, b.x)
    iy = min(ay2, by2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = (ax2 - a.x) * (ay2 - a.y) + (bx2 - b.x) * (by2 - b.y) - inter
    if union <= 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class Detection:
    """A scored triplet prediction, optionally localized."""

    triplet_id: int
    confidence: float
    instrument_box: BoundingBox | None = None
    target_box: BoundingBox | None = None

    def __post_init__(self):
        object.__setattr__(self, "triplet_id", int(self.triplet_id))
        object.__setattr__(self, "confidence", float(self.confidence))
        _check_unit("confidence", self.confidence)


@dataclass(frozen=True)
class GroundTruthBox:
    """An annotated triplet instance; the target box is absent in most datasets."""

    triplet_id: int
    instrument_box: BoundingBox
    target_box: BoundingBox | None = None

    def __post_init__(self):
        object.__setattr__(self, "triplet_id", int(self.triplet_id))
        if self.instrument_box is None:
            raise ValueError("groundtruth requires an instrument box")


@dataclass
class MatchResult:
    """Frame matching outcome: matched (pred, gt, iou) plus the leftovers."""

    matches: list
    unmatched_predictions: list
    unmatched_groundtruth: list

    @property
    def tp(self):
        return len(self.matches)

    @property
    def fp(self):
        return len(self.unmatched_predictions)

    @property
    def fn(self):
        return len(self.unmatched_groundtruth)


def _identity_fn(cmap, kind):
    if kind not in MATCH_KINDS:
        raise ValueError(f"kind must be one of {MATCH_KINDS}, got {kind!r}")

    def ident(triplet_id):
        if not 0 <= triplet_id < cmap.n_triplets:
            raise ValueError(f"triplet id {triplet_id} outside the map's 0..{cmap.n_triplets - 1}")
        if kind == "instrument":
            return int(cmap.instrument_ids[triplet_id])
        return int(triplet_id)

    return ident


def match_frame(cmap, predictions, groundtruth, kind="triplet", theta=0.5, require_target=False):
    """Greedily match one frame's predictions against its groundtruth.

    Predictions are visited in descending confidence (ties keep input order).
    Each claims the still-unclaimed groundtruth of equal identity with the
    highest instrument-box IoU, provided that IoU >= theta; with
    ``require_target`` the target-box IoU must clear theta as well.

    Args:
        cmap: component map used to resolve identities for kind="instrument".
        predictions: list of Detection.
        groundtruth: list of GroundTruthBox.
        kind: "instrument" matches by instrument identity, "triplet" by full triplet id.
        theta: IoU threshold in [0, 1].
        require_target: extend the TP criterion with the target boxes.

    Returns:
        MatchResult with matches as (prediction_index, groundtruth_index, iou).
    """
    if not 0 <= theta <= 1:
        raise ValueError(f"theta={theta} outside [0, 1]")
    ident = _identity_fn(cmap, kind)
    if require_target:
        for k, p in enumerate(predictions):
            if p.instrument_box is not None and p.target_box is None:
                raise ValueError(f"require_target: prediction {k} has no target box")
        for k, g in enumerate(groundtruth):
            if g.target_box is None:
                raise ValueError(f"require_target: groundtruth {k} has no target box")

    pred_ids = [ident(p.triplet_id) for p in predictions]
    gt_ids = [ident(g.triplet_id) for g in groundtruth]

    order = sorted(range(len(predictions)), key=lambda k: -predictions[k].confidence)
    claimed = [False] * len(groundtruth)
    matches = []
    matched_pred = [False] * len(predictions)
    for k in order:
        pred = predictions[k]
        if pred.instrument_box is None:
            continue
        best_j = None
        best_iou = -1.0
        for j, gt in enumerate(groundtruth):
            if claimed[j] or gt_ids[j] != pred_ids[k]:
                continue
            overlap = iou(pred.instrument_box, gt.instrument_box)
            if overlap < theta:
                continue
            if require_target and iou(pred.target_box, gt.target_box) < theta:
                continue
            if overlap > best_iou:
                best_iou = overlap
                best_j = j
        if best_j is not None:
            claimed[best_j] = True
            matched_pred[k] = True
            matches.append((k, best_j, best_iou))
    return MatchResult(
        matches=matches,
        unmatched_predictions=[k for k in range(len(predictions)) if not matched_pred[k]],
        unmatched_groundtruth=[j for j in range(len(groundtruth)) if not claimed[j]],
    )


@dataclass
class DetectionResult:
    """Detection AP plus the raw TP/FP/FN tallies it was ranked from."""

    ap: APResult
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    def precision(self):
        """Per-class TP/(TP+FP); NaN where the class was never predicted."""
        denom = self.tp + self.fp
        return np.where(denom > 0, self.tp / np.maximum(denom, 1), np.nan)

    def recall(self):
        """Per-class TP/(TP+FN); NaN where the class has no groundtruth."""
        denom = self.tp + self.fn
        return np.where(denom > 0, self.tp / np.maximum(denom, 1), np.nan)


def detection_ap(
    videos,
    cmap,
    kind="triplet",
    theta=0.5,
    require_target=False,
    class_mask=(),
    global_pool=False,
):
    """Detection AP over per-video frame sequences.

    Args:
        videos: one entry per video; each is a sequence of
            (predictions, groundtruth) frame pairs.
        cmap: component map (identity resolution and class-space sizes).
        kind: "instrument" or "triplet" — both the matching identity and the
            class space the AP is reported over.
        theta: IoU threshold.
        require_target: also gate matches on target-box IoU.
        class_mask: triplet ids excluded from the AP vector/mean
            (kind="triplet" only).  Count tallies stay unmasked.
        global_pool: rank each class across all videos in one pool instead of
            averaging per-video APs.

    Returns:
        DetectionResult.  A class is undefined in a video (skipped by the
        average) when that video has no groundtruth instance of it.
    """
    ident = _identity_fn(cmap, kind)
    n_classes = cmap.n_instruments if kind == "instrument" else cmap.n_triplets

    tp = np.zeros(n_classes, dtype=np.int64)
    fp = np.zeros(n_classes, dtype=np.int64)
    fn = np.zeros(n_classes, dtype=np.int64)

    per_video_ap = []
    pooled = [[] for _ in range(n_classes)]  # class -> [(confidence, is_tp)]
    pooled_npos = np.zeros(n_classes, dtype=np.int64)

    for frames in videos:
        ranked = [[] for _ in range(n_classes)]
        npos = np.zeros(n_classes, dtype=np.int64)
        for predictions, groundtruth in frames:
            result = match_frame(
                cmap, predictions, groundtruth, kind=kind, theta=theta, require_target=require_target
            )
            matched = {k for k, _, _ in result.matches}
            for k, pred in enumerate(predictions):
                cls = ident(pred.triplet_id)
                hit = k in matched
                ranked[cls].append((pred.confidence, hit))
                if hit:
                    tp[cls] += 1
                else:
                    fp[cls] += 1
            for gt in groundtruth:
                cls = ident(gt.triplet_id)
                npos[cls] += 1
            for j in result.unmatched_groundtruth:
                fn[ident(groundtruth[j].triplet_id)] += 1
        video_ap = np.full(n_classes, np.nan)
        for cls in range(n_classes):
            pooled[cls].extend(ranked[cls])
            pooled_npos[cls] += npos[cls]
            if npos[cls] > 0:
                scores = [conf for conf, _ in ranked[cls]]
                flags = [flag for _, flag in ranked[cls]]
                video_ap[cls] = average_precision(scores, flags, n_positive=int(npos[cls]))
        per_video_ap.append(video_ap)

    if global_pool:
        per_class = np.full(n_classes, np.nan)
        for cls in range(n_classes):
            if pooled_npos[cls] > 0:
                scores = [conf for conf, _ in pooled[cls]]
                flags = [flag for _, flag in pooled[cls]]
                per_class[cls] = average_precision(scores, flags, n_positive=int(pooled_npos[cls]))
    elif per_video_ap:
        stacked = np.stack(per_video_ap)
        defined = ~np.isnan(stacked)
        counts = defined.sum(axis=0)
        sums = np.where(defined, stacked, 0.0).sum(axis=0)
        per_class = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    else:
        per_class = np.full(n_classes, np.nan)

    if kind == "triplet" and class_mask:
        mask_ids = sorted(int(c) for c in class_mask)
        bad = [c for c in mask_ids if not 0 <= c < n_classes]
        if bad:
            raise ValueError(f"class_mask ids out of range: {bad}")
        per_class = per_class.copy()
        per_class[mask_ids] = np.nan

    return DetectionResult(ap=APResult(per_class), tp=tp, fp=fp, fn=fn)


def target_localization_supported(frames):
    """Whether target-box evaluation is possible for one video's groundtruth.

    ``frames`` is a sequence with one entry per frame: the frame's list of
    GroundTruthBox, or None for frames without box annotations.  The rule is
    conservative: every frame must be annotated, at least one box must exist,
    and every box must carry a target box.
    """
    saw_box = False
    for boxes in frames:
        if boxes is None:
            return False
        for box in boxes:
            saw_box = True
            if box.target_box is None:
                return False
    return saw_box
