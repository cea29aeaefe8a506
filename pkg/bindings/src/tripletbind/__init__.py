"""Stateful evaluator objects keyed by a triplet class count.

``Recognition``, ``Detection``, and ``Disentangle`` wrap the tripletmetrics
library behind constructors that take the number of triplet classes.  With
the default 100 classes the bundled CholecT50 component map is loaded
automatically; any other class count needs an explicit ``ComponentMap`` for
the component views ("i", "v", "t", "iv", "it"), while plain triplet-level
("ivt") evaluation works regardless.

Results come back as plain dicts/lists (floats may be NaN where a value is
undefined), mirroring the JSON reports of the ``tripletmetrics`` CLI before
rounding.
"""

from __future__ import annotations

import numpy as np

from tripletmetrics import (
    ComponentMap,
    Detection as _DetectionRecord,
    GroundTruthBox,
    RecognitionAccumulator,
    classify_associations,
    default_component_map,
    detection_ap,
    detection_from_dict,
    disentangle_labels,
    disentangle_scores,
    groundtruth_box_from_dict,
    sum_association_counts,
    tas_percentages,
)

__version__ = "0.1.0"

__all__ = ["Recognition", "Detection", "Disentangle"]

_BUNDLED_CLASSES = 100

_DETECTION_KINDS = {
    "ivt": "triplet",
    "triplet": "triplet",
    "i": "instrument",
    "instrument": "instrument",
}


def _resolve_map(num_class, component_map):
    """Return (map, has_real_components) for a class count / optional map."""
    num_class = int(num_class)
    if num_class < 1:
        raise ValueError(f"num_class must be >= 1, got {num_class}")
    if component_map is not None:
        if component_map.n_triplets != num_class:
            raise ValueError(
                f"component map covers {component_map.n_triplets} classes, num_class says {num_class}"
            )
        return component_map, True
    if num_class == _BUNDLED_CLASSES:
        return default_component_map(), True
    # identity-only map: triplet-level metrics work, component views are gated
    flat = ComponentMap(
        [(t, 0, 0, 0) for t in range(num_class)],
        n_instruments=1,
        n_verbs=1,
        n_targets=1,
    )
    return flat, False


class Recognition:
    """Frame-level recognition AP over ``num_class`` triplet classes.

    Feed binary target matrices and score matrices with ``update``, close each
    video with ``video_end``, then query ``compute_AP`` (current video),
    ``compute_video_AP`` (mean of per-video APs), or ``compute_global_AP``
    (all frames pooled).
    """

    def __init__(self, num_class=_BUNDLED_CLASSES, component_map=None):
        self.num_class = int(num_class)
        self._map, self._has_components = _resolve_map(num_class, component_map)
        self._acc = RecognitionAccumulator(self._map)

    def _component(self, component):
        if not self._has_components and component != "ivt":
            raise ValueError(
                f"component {component!r} needs a component map; "
                f"only 'ivt' is available for a bare {self.num_class}-class instance"
            )
        return component

    @staticmethod
    def _as_dict(result):
        return {
            "AP": result.per_class.tolist(),
            "mAP": float(result.mean),
            "defined": int(result.defined_count),
        }

    def update(self, targets, predictions):
        self._acc.update(targets, predictions)

    def video_end(self):
        self._acc.video_end()

    def reset(self):
        self._acc.reset()

    def reset_video(self):
        self._acc.reset_video()

    def reset_global(self):
        self._acc.reset_global()

    def compute_AP(self, component="ivt"):
        return self._as_dict(self._acc.compute_AP(self._component(component)))

    def compute_video_AP(self, component="ivt"):
        return self._as_dict(self._acc.compute_video_AP(self._component(component)))

    def compute_global_AP(self, component="ivt"):
        return self._as_dict(self._acc.compute_global_AP(self._component(component)))

    def topk(self, k):
        return float(self._acc.topk(k))

    def topClass(self, k):
        return list(self._acc.topClass(k))


class Detection:
    """Box-level detection AP and association diagnostics.

    ``update`` takes one video's worth of frames at a time: ``targets`` is a
    per-frame list of groundtruth box records, ``predictions`` a per-frame
    list of detection records — either wire-format dicts (``{"triplet", ...,
    "instrument_bbox": [x, y, w, h]}``) or already-built GroundTruthBox /
    Detection objects.
    """

    def __init__(self, num_class=_BUNDLED_CLASSES, component_map=None, theta=0.5):
        self.num_class = int(num_class)
        self._map, self._has_components = _resolve_map(num_class, component_map)
        if not 0 <= theta <= 1:
            raise ValueError(f"theta={theta} outside [0, 1]")
        self.theta = float(theta)
        self._current = []
        self._videos = []

    def _kind(self, component):
        try:
            kind = _DETECTION_KINDS[component]
        except KeyError:
            raise ValueError(
                f"component {component!r} not supported for detection; "
                f"use one of {sorted(_DETECTION_KINDS)}"
            ) from None
        if kind == "instrument" and not self._has_components:
            raise ValueError(
                f"component {component!r} needs a component map; "
                f"only triplet-level detection works for a bare {self.num_class}-class instance"
            )
        return kind

    def _gt(self, entry):
        if isinstance(entry, GroundTruthBox):
            return entry
        return groundtruth_box_from_dict(entry, self.num_class)

    def _det(self, entry):
        if isinstance(entry, _DetectionRecord):
            return entry
        return detection_from_dict(entry, self.num_class)

    def update(self, targets, predictions):
        if len(targets) != len(predictions):
            raise ValueError(
                f"targets cover {len(targets)} frames, predictions {len(predictions)}"
            )
        for gt_list, det_list in zip(targets, predictions):
            gts = [self._gt(e) for e in gt_list]
            dets = [self._det(e) for e in det_list]
            self._current.append((dets, gts))

    def video_end(self):
        if self._current:
            self._videos.append(self._current)
            self._current = []

    def reset(self):
        self._current = []

    def reset_video(self):
        self._videos = []

    def reset_global(self):
        self._current = []
        self._videos = []

    def _result(self, videos, component, global_pool):
        res = detection_ap(
            videos, self._map, kind=self._kind(component), theta=self.theta, global_pool=global_pool
        )
        return {
            "AP": res.ap.per_class.tolist(),
            "mAP": float(res.ap.mean),
            "defined": int(res.ap.defined_count),
            "tp": res.tp.tolist(),
            "fp": res.fp.tolist(),
            "fn": res.fn.tolist(),
        }

    def compute_AP(self, component="ivt"):
        videos = [self._current] if self._current else []
        return self._result(videos, component, global_pool=False)

    def compute_video_AP(self, component="ivt"):
        return self._result(self._videos, component, global_pool=False)

    def compute_global_AP(self, component="ivt"):
        return self._result(self._videos, component, global_pool=True)

    def compute_association(self):
        """Association category counts and percentages over every frame seen."""
        pools = self._videos + ([self._current] if self._current else [])
        counts = []
        for frames in pools:
            for dets, gts in frames:
                counts.append(classify_associations(dets, gts, theta=self.theta).counts)
        report = tas_percentages(sum_association_counts(counts))
        return {"counts": report.counts, "percentages": report.percentages}


class Disentangle:
    """Project triplet-level vectors onto component class spaces."""

    def __init__(self, num_class=_BUNDLED_CLASSES, component_map=None):
        self.num_class = int(num_class)
        self._map, has_components = _resolve_map(num_class, component_map)
        if not has_components:
            raise ValueError(
                f"Disentangle needs a component map for {self.num_class} classes "
                f"(the bundled map only covers {_BUNDLED_CLASSES})"
            )

    def scores(self, values, component):
        return np.asarray(disentangle_scores(self._map, values, component)).tolist()

    def labels(self, values, component):
        return np.asarray(disentangle_labels(self._map, values, component)).tolist()
