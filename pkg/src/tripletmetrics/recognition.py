"""Average precision over ranked frame scores and its multi-video accumulator.

AP is the exact step-function integral of the precision-recall curve: with
items ranked by score (stable sort, ties keep input order),

    AP = sum_k (r_k - r_{k-1}) * p_k

which accumulates precision-at-k at every rank holding a positive.  No
interpolation and no fixed recall grid.  A class with zero positive samples
has no defined AP and is excluded from mean values rather than counted as 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .disentangle import disentangle_labels, disentangle_scores
from .labelspace import default_component_map, normalize_component


def average_precision(scores, positives, n_positive=None):
    """AP of one ranked list.

    Args:
        scores: per-item scores; ranked descending, ties broken by input order.
        positives: per-item 0/1 (or bool) relevance flags.
        n_positive: recall denominator override.  Detection uses this to count
            groundtruth instances that never appear in the ranking (misses).
            Defaults to the number of positive items in ``positives``.

    Returns:
        AP in [0, 1], or NaN when there are no positives (undefined).
    """
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives)
    if scores.ndim != 1 or scores.shape != positives.shape:
        raise ValueError(f"scores and positives must be 1-D and equal length, got {scores.shape} vs {positives.shape}")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    flags = positives.astype(bool)
    total = int(flags.sum()) if n_positive is None else int(n_positive)
    if total < int(flags.sum()):
        raise ValueError("n_positive cannot be smaller than the number of positive items")
    if total == 0:
        return float("nan")
    order = np.argsort(-scores, kind="stable")
    hits = flags[order]
    ranks = np.arange(1, scores.size + 1)
    precision = np.cumsum(hits) / ranks
    return float(precision[hits].sum() / total)


@dataclass
class APResult:
    """Per-class APs plus their mean over defined, unmasked classes.

    ``per_class`` holds NaN for classes whose AP is undefined (no positive
    samples in the evaluated pool) and for classes excluded by the mask;
    ``mean`` is therefore always reproducible as ``nanmean(per_class)``.
    """

    per_class: np.ndarray
    mean: float = field(init=False)
    defined_count: int = field(init=False)

    def __post_init__(self):
        per_class = np.asarray(self.per_class, dtype=np.float64)
        per_class.setflags(write=False)
        self.per_class = per_class
        defined = ~np.isnan(per_class)
        self.defined_count = int(defined.sum())
        self.mean = float(per_class[defined].mean()) if self.defined_count else float("nan")


def _per_class_ap(labels, scores):
    """Column-wise AP of pooled frames: labels and scores are (frames, classes)."""
    n_classes = labels.shape[1]
    out = np.full(n_classes, np.nan)
    for c in range(n_classes):
        out[c] = average_precision(scores[:, c], labels[:, c])
    return out


class RecognitionAccumulator:
    """Buffers frame labels/scores and computes AP at three aggregation levels.

    Lifecycle: ``update`` appends frames to the current video, ``video_end``
    seals the current video into the finished list.  ``compute_AP`` ranks the
    current video's frames, ``compute_video_AP`` averages per-video APs over
    finished videos, and ``compute_global_AP`` ranks all finished videos'
    frames in one pool.

    Resets are split by scope: ``reset`` clears only the in-progress video
    (start of a pass over the same video set), ``reset_video`` drops the
    finished-video list, ``reset_global`` clears everything.
    """

    def __init__(self, component_map=None, class_mask=()):
        self.map = component_map if component_map is not None else default_component_map()
        mask = frozenset(int(c) for c in class_mask)
        bad = [c for c in mask if not 0 <= c < self.map.n_triplets]
        if bad:
            raise ValueError(f"class_mask ids out of range: {sorted(bad)}")
        self.class_mask = mask
        self._current = []
        self._finished = []

    # -- lifecycle -----------------------------------------------------------

    def update(self, targets, predictions):
        """Append one frame or a (frames, n_triplets) batch of labels and scores."""
        targets = np.atleast_2d(np.asarray(targets))
        predictions = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
        if targets.shape != predictions.shape:
            raise ValueError(f"targets shape {targets.shape} != predictions shape {predictions.shape}")
        if targets.ndim != 2 or targets.shape[1] != self.map.n_triplets:
            raise ValueError(
                f"expected (frames, {self.map.n_triplets}) arrays, got {targets.shape}"
            )
        if not np.isin(targets, (0, 1)).all():
            raise ValueError("targets must be binary (0/1)")
        if not np.isfinite(predictions).all():
            raise ValueError("predictions must be finite")
        self._current.append((targets.astype(np.int8), predictions.copy()))

    def video_end(self):
        """Seal the current video.  A no-op when no frames are buffered."""
        if self._current:
            self._finished.append(self._pooled_current())
            self._current = []

    def reset(self):
        self._current = []

    def reset_video(self):
        self._finished = []

    def reset_global(self):
        self._current = []
        self._finished = []

    @classmethod
    def merge(cls, a, b):
        """Combine two accumulators' finished-video lists (e.g. parallel workers)."""
        if a.map != b.map:
            raise ValueError("cannot merge accumulators with different component maps")
        if a.class_mask != b.class_mask:
            raise ValueError("cannot merge accumulators with different class masks")
        merged = cls(a.map, a.class_mask)
        merged._finished = list(a._finished) + list(b._finished)
        return merged

    # -- internals -----------------------------------------------------------

    def _pooled_current(self):
        labels = np.concatenate([t for t, _ in self._current], axis=0)
        scores = np.concatenate([s for _, s in self._current], axis=0)
        return labels, scores

    def _project(self, labels, scores, kind):
        if kind == "ivt":
            return labels, scores
        return (
            disentangle_labels(self.map, labels, kind),
            disentangle_scores(self.map, scores, kind),
        )

    def _result(self, per_class, kind):
        if kind == "ivt" and self.class_mask:
            per_class = per_class.copy()
            per_class[sorted(self.class_mask)] = np.nan
        return APResult(per_class)

    def _empty_result(self, kind):
        return self._result(np.full(self.map.component_size(kind), np.nan), kind)

    # -- metrics -------------------------------------------------------------

    def compute_AP(self, kind="ivt"):
        """AP over the current (unsealed) video's pooled frames."""
        kind = normalize_component(kind)
        if not self._current:
            return self._empty_result(kind)
        labels, scores = self._project(*self._pooled_current(), kind)
        return self._result(_per_class_ap(labels, scores), kind)

    def compute_video_AP(self, kind="ivt"):
        """Mean per-video AP: each class averages over the videos where it is defined."""
        kind = normalize_component(kind)
        if not self._finished:
            return self._empty_result(kind)
        stacked = []
        for labels, scores in self._finished:
            labels, scores = self._project(labels, scores, kind)
            stacked.append(_per_class_ap(labels, scores))
        stacked = np.stack(stacked)
        defined = ~np.isnan(stacked)
        counts = defined.sum(axis=0)
        sums = np.where(defined, stacked, 0.0).sum(axis=0)
        per_class = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        return self._result(per_class, kind)

    def compute_global_AP(self, kind="ivt"):
        """AP over all finished videos' frames ranked in a single pool."""
        kind = normalize_component(kind)
        if not self._finished:
            return self._empty_result(kind)
        labels = np.concatenate([t for t, _ in self._finished], axis=0)
        scores = np.concatenate([s for _, s in self._finished], axis=0)
        labels, scores = self._project(labels, scores, kind)
        return self._result(_per_class_ap(labels, scores), kind)

    def topk(self, k):
        """Fraction of labelled frames whose top-k scored triplet ids hit a positive.

        Counted over every frame seen since ``reset_global`` (finished videos
        plus the current buffer); frames without positive labels are skipped.
        Score ties rank the lower class id first.  NaN when no frame has a
        positive label.
        """
        k = int(k)
        if k < 1:
            raise ValueError("k must be >= 1")
        pools = [self._pooled_current()] if self._current else []
        pools = self._finished + pools
        eligible = 0
        hits = 0
        for labels, scores in pools:
            for row_labels, row_scores in zip(labels, scores):
                positive = np.flatnonzero(row_labels)
                if positive.size == 0:
                    continue
                eligible += 1
                top = np.argsort(-row_scores, kind="stable")[:k]
                if np.isin(top, positive).any():
                    hits += 1
        if eligible == 0:
            return float("nan")
        return hits / eligible

    def topClass(self, k):
        """The k unmasked class ids with the highest video-level AP.

        Ordering follows ``compute_video_AP("ivt")``: undefined classes rank
        last and ties prefer the lower class id.
        """
        k = int(k)
        if k < 1:
            raise ValueError("k must be >= 1")
        candidates = [c for c in range(self.map.n_triplets) if c not in self.class_mask]
        if k > len(candidates):
            raise ValueError(f"k={k} exceeds the {len(candidates)} unmasked classes")
        per_class = self.compute_video_AP("ivt").per_class
        ranked = sorted(
            candidates,
            key=lambda c: (np.isnan(per_class[c]), -(per_class[c] if not np.isnan(per_class[c]) else 0.0), c),
        )
        return ranked[:k]
