"""Evaluation driver: pair documents, run the accumulator, assemble a report."""

from __future__ import annotations

import numpy as np

from . import __version__ as _version
from .association import classify_associations, sum_association_counts, tas_percentages
from .detection import detection_ap
from .io import round_floats
from .labelspace import COMPONENTS, default_component_map, normalize_component
from .recognition import RecognitionAccumulator


def _paired_frames(gt, pred):
    """Align prediction frames to groundtruth frames by explicit index."""
    gt_idx = gt.frame_indices
    pred_idx = pred.frame_indices
    if gt_idx != pred_idx:
        extra = sorted(set(pred_idx) ^ set(gt_idx))
        raise ValueError(
            f"video {gt.video}: prediction frame set does not match groundtruth "
            f"({len(pred_idx)} vs {len(gt_idx)} frames; unpaired indices {extra[:5]})"
        )
    return list(zip(gt.frames, pred.frames))


def evaluate(
    groundtruth,
    predictions,
    videos,
    components=COMPONENTS,
    component_map=None,
    class_mask=(),
    theta=0.5,
    include_detection=False,
    detection_kind="triplet",
    require_target=False,
    include_tas=False,
    global_pool=False,
    split_name=None,
    fold=None,
    partition=None,
):
    """Evaluate selected videos and return a JSON-ready report dict.

    Args:
        groundtruth / predictions: mappings video id -> VideoGroundTruth /
            VideoPredictions covering at least the selected videos.
        videos: video ids to evaluate (the split partition's content).
        components: recognition components to report.
        include_detection / include_tas: add box-level AP and association
            diagnostics (requires annotated boxes and detections).
        global_pool: rank frames of all videos in one pool instead of
            averaging per-video APs.

    The report's floats are rounded to 4 decimals with NaN as null, so a
    serialized report parses back to exactly this dict.
    """
    cmap = component_map if component_map is not None else default_component_map()
    components = [normalize_component(c) for c in components]
    videos = sorted(videos)
    if len(set(videos)) != len(videos):
        raise ValueError("duplicate video ids in selection")
    missing = [v for v in videos if v not in groundtruth]
    if missing:
        raise ValueError(f"groundtruth missing for video(s): {', '.join(missing)}")
    missing = [v for v in videos if v not in predictions]
    if missing:
        raise ValueError(f"predictions missing for video(s): {', '.join(missing)}")

    accumulator = RecognitionAccumulator(cmap, class_mask)
    detection_videos = []
    tas_counts = []

    for vid in videos:
        gt = groundtruth[vid]
        pred = predictions[vid]
        if gt.n_triplets != cmap.n_triplets or pred.n_triplets != cmap.n_triplets:
            raise ValueError(
                f"video {vid}: documents declare {gt.n_triplets}/{pred.n_triplets} classes, "
                f"map has {cmap.n_triplets}"
            )
        pairs = _paired_frames(gt, pred)

        labels = np.stack([g.labels for g, _ in pairs]) if pairs else np.zeros((0, cmap.n_triplets))
        score_rows = []
        for g, p in pairs:
            if p.scores is None:
                raise ValueError(f"video {vid} frame {p.index}: no scores (recognition needs them)")
            score_rows.append(p.scores)
        scores = np.stack(score_rows) if score_rows else np.zeros((0, cmap.n_triplets))
        accumulator.update(labels, scores)
        accumulator.video_end()

        if include_detection or include_tas:
            frames = []
            for g, p in pairs:
                if g.boxes is None:
                    raise ValueError(f"video {vid} frame {g.index}: groundtruth has no box annotations")
                if p.detections is None:
                    raise ValueError(f"video {vid} frame {p.index}: predictions have no detections")
                frames.append((p.detections, g.boxes))
            if include_detection and require_target:
                if not gt.supports_target_localization():
                    raise ValueError(
                        f"video {vid}: target localization unsupported (missing target boxes)"
                    )
            detection_videos.append(frames)

    report = {
        "tool": {"name": "tripletmetrics", "version": _version},
        "split": split_name,
        "fold": fold,
        "partition": partition,
        "videos": videos,
        "options": {
            "components": components,
            "mask": sorted(int(c) for c in class_mask),
            "theta": theta if (include_detection or include_tas) else None,
            "mode": "global" if global_pool else "video",
            "detection_kind": detection_kind if include_detection else None,
            "require_target": bool(require_target) if include_detection else None,
        },
    }

    recognition = {}
    for kind in components:
        result = (
            accumulator.compute_global_AP(kind) if global_pool else accumulator.compute_video_AP(kind)
        )
        recognition[kind] = {
            "AP": result.per_class,
            "mAP": result.mean,
            "defined": result.defined_count,
        }
    report["recognition"] = recognition

    if include_detection:
        result = detection_ap(
            detection_videos,
            cmap,
            kind=detection_kind,
            theta=theta,
            require_target=require_target,
            class_mask=class_mask,
            global_pool=global_pool,
        )
        report["detection"] = {
            "kind": detection_kind,
            "AP": result.ap.per_class,
            "mAP": result.ap.mean,
            "defined": result.ap.defined_count,
            "tp": result.tp,
            "fp": result.fp,
            "fn": result.fn,
            "precision": result.precision(),
            "recall": result.recall(),
        }

    if include_tas:
        for frames in detection_videos:
            for dets, boxes in frames:
                tas_counts.append(classify_associations(dets, boxes, theta=theta).counts)
        tas = tas_percentages(sum_association_counts(tas_counts))
        report["association"] = {"counts": tas.counts, "percentages": tas.percentages}

    return round_floats(report)
