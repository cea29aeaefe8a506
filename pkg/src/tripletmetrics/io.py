"""Per-video document formats, manifest exchange, and deterministic JSON output.

Groundtruth document::

    {"video": "VID01", "num_triplet_classes": 100,
     "frames": {"0": {"triplets": [2, 60],
                      "boxes": [{"triplet": 2,
                                 "instrument_bbox": [x, y, w, h],
                                 "target_bbox": [x, y, w, h] | null}, ...]},
                ...}}

Prediction document: same envelope with per-frame ``"scores"`` (length
num_triplet_classes, values in [0, 1]) and optional ``"detections"``
(``{"triplet", "score", "instrument_bbox" | null, "target_bbox" | null}``).
The ``boxes``/``detections`` keys may be omitted on recognition-only data;
frames are aligned between files by their explicit integer index, never by
list position.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .detection import BoundingBox, Detection, GroundTruthBox, target_localization_supported
from .splits import SplitManifest


@dataclass
class GroundTruthFrame:
    index: int
    labels: np.ndarray  # multi-hot, length n_triplets
    boxes: list | None  # list of GroundTruthBox, or None when unannotated


@dataclass
class PredictionFrame:
    index: int
    scores: np.ndarray | None  # length n_triplets, or None when absent
    detections: list | None  # list of Detection, or None when unannotated


@dataclass
class VideoGroundTruth:
    video: str
    n_triplets: int
    frames: list

    @property
    def frame_indices(self):
        return [f.index for f in self.frames]

    def supports_target_localization(self):
        return target_localization_supported([f.boxes for f in self.frames])


@dataclass
class VideoPredictions:
    video: str
    n_triplets: int
    frames: list

    @property
    def frame_indices(self):
        return [f.index for f in self.frames]


def _fail(path, message):
    raise ValueError(f"{path}: {message}")


def _load_document(path):
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            _fail(path, f"not valid JSON ({exc})")
    if not isinstance(doc, dict):
        _fail(path, "document must be a JSON object")
    video = doc.get("video")
    if not isinstance(video, str) or not video:
        _fail(path, '"video" must be a non-empty string')
    n = doc.get("num_triplet_classes")
    if not isinstance(n, int) or n < 1:
        _fail(path, '"num_triplet_classes" must be a positive integer')
    frames = doc.get("frames")
    if not isinstance(frames, dict):
        _fail(path, '"frames" must be an object keyed by frame index')
    indices = []
    for key in frames:
        try:
            indices.append(int(key))
        except (TypeError, ValueError):
            _fail(path, f"frame key {key!r} is not an integer")
    for prev, cur in zip(indices, indices[1:]):
        if cur <= prev:
            _fail(path, f"frame indices must be strictly increasing, got {prev} then {cur}")
    return doc, video, n, frames, indices


def bounding_box_from_list(values, path="<box>", what="bbox"):
    """Build a BoundingBox from a 4-number [x, y, w, h] list."""
    if not isinstance(values, (list, tuple)) or len(values) != 4:
        _fail(path, f"{what} must be a list of 4 numbers, got {values!r}")
    try:
        box = BoundingBox(*(float(v) for v in values))
    except (TypeError, ValueError) as exc:
        _fail(path, f"invalid {what}: {exc}")
    return box


def groundtruth_box_from_dict(entry, n_triplets, path="<boxes>"):
    """Parse one groundtruth ``boxes`` record."""
    if not isinstance(entry, dict):
        _fail(path, f"box entry must be an object, got {entry!r}")
    triplet = entry.get("triplet")
    if not isinstance(triplet, int) or not 0 <= triplet < n_triplets:
        _fail(path, f"box triplet id {triplet!r} outside 0..{n_triplets - 1}")
    if entry.get("instrument_bbox") is None:
        _fail(path, "groundtruth box requires an instrument_bbox")
    instrument = bounding_box_from_list(entry["instrument_bbox"], path, "instrument_bbox")
    target = entry.get("target_bbox")
    target_box = None if target is None else bounding_box_from_list(target, path, "target_bbox")
    return GroundTruthBox(triplet, instrument, target_box)


def detection_from_dict(entry, n_triplets, path="<detections>"):
    """Parse one prediction ``detections`` record; instrument_bbox may be null."""
    if not isinstance(entry, dict):
        _fail(path, f"detection entry must be an object, got {entry!r}")
    triplet = entry.get("triplet")
    if not isinstance(triplet, int) or not 0 <= triplet < n_triplets:
        _fail(path, f"detection triplet id {triplet!r} outside 0..{n_triplets - 1}")
    score = entry.get("score")
    if not isinstance(score, (int, float)) or not 0 <= float(score) <= 1:
        _fail(path, f"detection score {score!r} outside [0, 1]")
    instrument = entry.get("instrument_bbox")
    instrument_box = (
        None if instrument is None else bounding_box_from_list(instrument, path, "instrument_bbox")
    )
    target = entry.get("target_bbox")
    target_box = None if target is None else bounding_box_from_list(target, path, "target_bbox")
    return Detection(triplet, float(score), instrument_box, target_box)


def read_groundtruth(path):
    """Read and validate one per-video groundtruth document."""
    _, video, n, frames, indices = _load_document(path)
    parsed = []
    for key, index in zip(frames, indices):
        frame = frames[key]
        if not isinstance(frame, dict):
            _fail(path, f"frame {key}: must be an object")
        triplets = frame.get("triplets", [])
        if not isinstance(triplets, list):
            _fail(path, f"frame {key}: \"triplets\" must be a list of class ids")
        labels = np.zeros(n, dtype=np.int8)
        for tid in triplets:
            if not isinstance(tid, int) or not 0 <= tid < n:
                _fail(path, f"frame {key}: triplet id {tid!r} outside 0..{n - 1}")
            labels[tid] = 1
        boxes = None
        if "boxes" in frame:
            raw = frame["boxes"]
            if not isinstance(raw, list):
                _fail(path, f"frame {key}: \"boxes\" must be a list")
            boxes = [groundtruth_box_from_dict(b, n, f"{path}: frame {key}") for b in raw]
        parsed.append(GroundTruthFrame(index, labels, boxes))
    return VideoGroundTruth(video, n, parsed)


def read_predictions(path):
    """Read and validate one per-video prediction document."""
    _, video, n, frames, indices = _load_document(path)
    parsed = []
    for key, index in zip(frames, indices):
        frame = frames[key]
        if not isinstance(frame, dict):
            _fail(path, f"frame {key}: must be an object")
        scores = None
        if "scores" in frame:
            raw = frame["scores"]
            if not isinstance(raw, list) or len(raw) != n:
                _fail(path, f"frame {key}: \"scores\" must be a list of {n} numbers")
            scores = np.asarray(raw, dtype=np.float64)
            if not np.isfinite(scores).all() or (scores < 0).any() or (scores > 1).any():
                _fail(path, f"frame {key}: scores must be finite and within [0, 1]")
        detections = None
        if "detections" in frame:
            raw = frame["detections"]
            if not isinstance(raw, list):
                _fail(path, f"frame {key}: \"detections\" must be a list")
            detections = [detection_from_dict(d, n, f"{path}: frame {key}") for d in raw]
        parsed.append(PredictionFrame(index, scores, detections))
    return VideoPredictions(video, n, parsed)


def read_video_dir(directory, videos, reader):
    """Read ``<video>.json`` for each requested video id from a directory."""
    directory = os.fspath(directory)
    missing = [v for v in videos if not os.path.isfile(os.path.join(directory, f"{v}.json"))]
    if missing:
        raise ValueError(f"{directory}: missing document(s) for {', '.join(missing)}")
    out = {}
    for vid in videos:
        doc = reader(os.path.join(directory, f"{vid}.json"))
        if doc.video != vid:
            raise ValueError(
                f"{directory}/{vid}.json: document names video {doc.video!r}, expected {vid!r}"
            )
        out[vid] = doc
    return out


# --------------------------------------------------------------------------
# Manifest exchange.
# --------------------------------------------------------------------------


def manifest_to_dict(manifest):
    return {"name": manifest.name, "partitions": {p: list(v) for p, v in manifest.partitions.items()}}


def manifest_from_dict(doc, path="<manifest>"):
    if not isinstance(doc, dict) or not isinstance(doc.get("name"), str):
        _fail(path, 'manifest must be an object with a string "name"')
    partitions = doc.get("partitions")
    if not isinstance(partitions, dict) or not partitions:
        _fail(path, 'manifest must have a non-empty "partitions" object')
    for part, vids in partitions.items():
        if not isinstance(vids, list) or not all(isinstance(v, str) for v in vids):
            _fail(path, f"partition {part!r} must be a list of video id strings")
    return SplitManifest(doc["name"], partitions)


def read_manifest(path):
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            _fail(path, f"not valid JSON ({exc})")
    return manifest_from_dict(doc, path)


def write_manifest(manifest, path):
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(dumps(manifest_to_dict(manifest)))


# --------------------------------------------------------------------------
# Deterministic report serialization.
# --------------------------------------------------------------------------


def round_floats(obj, ndigits=4):
    """Recursively round floats (NaN -> None) and coerce numpy scalars/arrays."""
    if isinstance(obj, dict):
        return {k: round_floats(v, ndigits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, ndigits) for v in obj]
    if isinstance(obj, np.ndarray):
        return [round_floats(v, ndigits) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return None if math.isnan(value) else round(value, ndigits)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def dumps(obj):
    """Serialize a report deterministically (stable key order, trailing newline)."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_text(text, path=None):
    """Write to a file, or stdout when path is None."""
    if path is None:
        import sys

        sys.stdout.write(text)
    else:
        with open(os.fspath(path), "w", encoding="utf-8") as fh:
            fh.write(text)
