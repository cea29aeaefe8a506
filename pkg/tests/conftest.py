"""Shared fixtures, synthetic data builders, and independent oracles.

The oracle implementations here are deliberately written from the metric
definitions (explicit precision/recall walks, per-class enumeration, corner
coordinates) rather than reusing the package's internals, so tests compare
two independent routes to the same numbers.
"""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from tripletmetrics import BoundingBox, ComponentMap


# --------------------------------------------------------------------------
# Maps.
# --------------------------------------------------------------------------

TOY_ROWS = [(0, 0, 0, 0), (1, 0, 1, 1), (2, 1, 0, 1)]


@pytest.fixture
def toy_map():
    """Three triplets over 2 instruments, 2 verbs, 2 targets."""
    return ComponentMap(TOY_ROWS, n_instruments=2, n_verbs=2, n_targets=2)


def random_map(rng, max_triplets=30):
    """A random decomposition table with random component space sizes."""
    n_i = int(rng.integers(1, 5))
    n_v = int(rng.integers(1, 6))
    n_t = int(rng.integers(1, 6))
    n_trip = int(rng.integers(1, max_triplets + 1))
    rows = [
        (tid, int(rng.integers(n_i)), int(rng.integers(n_v)), int(rng.integers(n_t)))
        for tid in range(n_trip)
    ]
    return ComponentMap(rows, n_instruments=n_i, n_verbs=n_v, n_targets=n_t)


def map_component_of(cmap, kind, triplet_id):
    """Oracle-side component lookup from the raw rows."""
    _, i, v, t = cmap.rows()[triplet_id]
    return {
        "i": i,
        "v": v,
        "t": t,
        "iv": i * cmap.n_verbs + v,
        "it": i * cmap.n_targets + t,
        "ivt": triplet_id,
    }[kind]


def brute_disentangle(cmap, vector, kind, binary=False):
    """Enumerate each component class's covering triplets; max (or OR) them."""
    size = cmap.component_size(kind)
    out = []
    for k in range(size):
        members = [v for tid, v in enumerate(vector) if map_component_of(cmap, kind, tid) == k]
        if not members:
            out.append(0)
        elif binary:
            out.append(1 if any(members) else 0)
        else:
            out.append(max(members))
    return np.asarray(out)


# --------------------------------------------------------------------------
# AP oracle: explicit precision/recall step walk.
# --------------------------------------------------------------------------


def pr_step_ap(scores, flags, n_positive=None):
    """AP as the area under the stepwise P-R curve, accumulated rank by rank."""
    scores = list(scores)
    flags = [bool(f) for f in flags]
    total = sum(flags) if n_positive is None else n_positive
    if total == 0:
        return math.nan
    order = sorted(range(len(scores)), key=lambda k: -scores[k])  # stable for ties
    tp = 0
    fp = 0
    prev_recall = 0.0
    area = 0.0
    for k in order:
        if flags[k]:
            tp += 1
        else:
            fp += 1
        precision = tp / (tp + fp)
        recall = tp / total
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


def undefined_mean(values):
    """Mean over non-NaN entries; NaN when nothing is defined."""
    defined = [v for v in values if not math.isnan(v)]
    return sum(defined) / len(defined) if defined else math.nan


# --------------------------------------------------------------------------
# Reference greedy matcher (corner-coordinate IoU).
# --------------------------------------------------------------------------


def corner_iou(a, b):
    ax1, ay1, ax2, ay2 = a.x, a.y, a.x + a.w, a.y + a.h
    bx1, by1, bx2, by2 = b.x, b.y, b.x + b.w, b.y + b.h
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union if union > 0 else 0.0


def reference_match(cmap, predictions, groundtruth, kind="triplet", theta=0.5, require_target=False):
    """Greedy matching transcribed directly from the matching protocol."""

    def ident(tid):
        return int(cmap.instrument_ids[tid]) if kind == "instrument" else tid

    order = sorted(range(len(predictions)), key=lambda k: -predictions[k].confidence)
    taken = set()
    matches = []
    for k in order:
        pred = predictions[k]
        if pred.instrument_box is None:
            continue
        best = None
        for j, gt in enumerate(groundtruth):
            if j in taken or ident(gt.triplet_id) != ident(pred.triplet_id):
                continue
            overlap = corner_iou(pred.instrument_box, gt.instrument_box)
            if overlap < theta:
                continue
            if require_target and corner_iou(pred.target_box, gt.target_box) < theta:
                continue
            if best is None or overlap > best[1]:
                best = (j, overlap)
        if best is not None:
            taken.add(best[0])
            matches.append((k, best[0], best[1]))
    matched_preds = {k for k, _, _ in matches}
    return (
        matches,
        [k for k in range(len(predictions)) if k not in matched_preds],
        [j for j in range(len(groundtruth)) if j not in taken],
    )


# --------------------------------------------------------------------------
# Synthetic datasets on disk (io / CLI / acceptance determinism).
# --------------------------------------------------------------------------

GRID_BOXES = [
    (0.0, 0.0, 0.3, 0.3),
    (0.1, 0.0, 0.3, 0.3),
    (0.5, 0.5, 0.3, 0.3),
    (0.2, 0.6, 0.4, 0.3),
    (0.6, 0.1, 0.3, 0.4),
]


def random_box(rng):
    return BoundingBox(*GRID_BOXES[int(rng.integers(len(GRID_BOXES)))])


def make_synthetic_dataset(
    root,
    videos=("VID01", "VID02", "VID03"),
    frames=(8, 10, 6),
    n_classes=100,
    seed=7,
    with_boxes=True,
    with_target_boxes=False,
):
    """Write per-video gt/pred documents plus a manifest; returns their paths.

    Scores are correlated with the labels so APs land strictly between 0 and
    1, and detections mix true boxes, jittered boxes, spurious boxes, and
    box-less entries.
    """
    rng = np.random.default_rng(seed)
    gt_dir = root / "gt"
    pred_dir = root / "pred"
    gt_dir.mkdir(parents=True, exist_ok=True)
    pred_dir.mkdir(parents=True, exist_ok=True)

    for vid, n_frames in zip(videos, frames):
        gt_frames = {}
        pred_frames = {}
        for f in range(n_frames):
            index = str(2 * f)  # sparse indices: alignment is by index, not position
            positives = sorted(rng.choice(n_classes, size=int(rng.integers(1, 4)), replace=False).tolist())
            scores = rng.uniform(0.0, 0.55, size=n_classes)
            for tid in positives:
                if rng.random() < 0.8:
                    scores[tid] = rng.uniform(0.45, 1.0)
            scores = np.round(scores, 4)

            gt_entry = {"triplets": positives}
            pred_entry = {"scores": scores.tolist()}
            if with_boxes:
                boxes = []
                detections = []
                for tid in positives:
                    box = random_box(rng)
                    record = {
                        "triplet": tid,
                        "instrument_bbox": [box.x, box.y, box.w, box.h],
                        "target_bbox": [box.x, box.y, box.w, box.h] if with_target_boxes else None,
                    }
                    boxes.append(record)
                    roll = rng.random()
                    if roll < 0.6:  # faithful localization
                        pred_box = [box.x, box.y, box.w, box.h]
                    elif roll < 0.8:  # jittered localization
                        pred_box = [min(box.x + 0.05, 0.7), box.y, box.w, box.h]
                    else:  # recognition-only prediction
                        pred_box = None
                    detections.append(
                        {
                            "triplet": tid,
                            "score": float(scores[tid]),
                            "instrument_bbox": pred_box,
                            "target_bbox": pred_box if with_target_boxes else None,
                        }
                    )
                if rng.random() < 0.4:  # spurious detection
                    box = random_box(rng)
                    fp_id = int(rng.integers(n_classes))
                    detections.append(
                        {
                            "triplet": fp_id,
                            "score": round(float(rng.uniform(0.1, 0.9)), 4),
                            "instrument_bbox": [box.x, box.y, box.w, box.h],
                            "target_bbox": [box.x, box.y, box.w, box.h] if with_target_boxes else None,
                        }
                    )
                gt_entry["boxes"] = boxes
                pred_entry["detections"] = detections
            gt_frames[index] = gt_entry
            pred_frames[index] = pred_entry

        (gt_dir / f"{vid}.json").write_text(
            json.dumps({"video": vid, "num_triplet_classes": n_classes, "frames": gt_frames})
        )
        (pred_dir / f"{vid}.json").write_text(
            json.dumps({"video": vid, "num_triplet_classes": n_classes, "frames": pred_frames})
        )

    manifest_path = root / "split.json"
    manifest_path.write_text(
        json.dumps({"name": "synthetic", "partitions": {"all": list(videos)}})
    )
    folds_path = root / "folds.json"
    folds_path.write_text(
        json.dumps(
            {
                "name": "synthetic-cv",
                "partitions": {"fold1": list(videos[:2]), "fold2": list(videos[2:])},
            }
        )
    )
    return gt_dir, pred_dir, manifest_path, folds_path
