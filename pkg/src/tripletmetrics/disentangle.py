"""Recover component scores/labels from triplet vectors with a max filter."""

from __future__ import annotations

import numpy as np

from .labelspace import FILTER_COMPONENTS, normalize_component


def _group_reduce(cmap, values, kind):
    kind = normalize_component(kind)
    if kind not in FILTER_COMPONENTS:
        raise ValueError(f"component filtering applies to {FILTER_COMPONENTS}, not {kind!r}")
    values = np.asarray(values)
    if values.ndim not in (1, 2) or values.shape[-1] != cmap.n_triplets:
        raise ValueError(
            f"expected a vector (or frame batch) of length {cmap.n_triplets}, got shape {values.shape}"
        )
    out = np.zeros(values.shape[:-1] + (cmap.component_size(kind),), dtype=values.dtype)
    for comp_id, members in enumerate(cmap.groups(kind)):
        if members.size:
            out[..., comp_id] = values[..., members].max(axis=-1)
    return out


def disentangle_scores(cmap, scores, kind):
    """Component score vector: each class takes the max over the triplets covering it.

    Accepts a single score vector or a 2-D batch with frames on the first axis.
    Component classes no triplet maps to score 0.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    return _group_reduce(cmap, scores, kind)


def disentangle_labels(cmap, labels, kind):
    """Component multi-hot labels: logical OR over the triplets covering each class."""
    labels = np.asarray(labels)
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary (0/1)")
    return _group_reduce(cmap, labels.astype(np.int64), kind)
