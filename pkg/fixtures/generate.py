#!/usr/bin/env python3
"""Regenerate the committed synthetic corpus under fixtures/synthetic/.

Three short videos with 100 triplet classes, written in the per-video
document format: sparse frame indices, label-correlated scores, and a mix of
faithful, jittered, box-less, and spurious detections.  The output is fully
determined by SEED, so reruns reproduce the committed files byte for byte.
"""

import json
from pathlib import Path

import numpy as np

SEED = 2024
N_CLASSES = 100
VIDEOS = {"S01": 10, "S02": 8, "S03": 12}
FRAME_STRIDE = 25

BOX_POOL = [
    (0.05, 0.05, 0.3, 0.3),
    (0.15, 0.05, 0.3, 0.3),
    (0.55, 0.55, 0.3, 0.3),
    (0.25, 0.6, 0.4, 0.3),
    (0.6, 0.1, 0.3, 0.4),
    (0.4, 0.35, 0.25, 0.25),
]


def build_frame(rng):
    positives = sorted(rng.choice(N_CLASSES, size=int(rng.integers(1, 4)), replace=False).tolist())
    scores = rng.uniform(0.0, 0.55, size=N_CLASSES)
    for tid in positives:
        if rng.random() < 0.85:
            scores[tid] = rng.uniform(0.5, 1.0)
    scores = np.round(scores, 4)

    boxes = []
    detections = []
    for tid in positives:
        box = BOX_POOL[int(rng.integers(len(BOX_POOL)))]
        boxes.append({"triplet": tid, "instrument_bbox": list(box), "target_bbox": None})
        roll = rng.random()
        if roll < 0.5:  # faithful box
            pred_box = list(box)
        elif roll < 0.65:  # nudged, still above a 0.5 IoU
            pred_box = [round(min(box[0] + 0.06, 0.65), 4), box[1], box[2], box[3]]
        elif roll < 0.8:  # pushed below a 0.5 IoU
            pred_box = [round(min(box[0] + 0.12, 0.65), 4), box[1], box[2], box[3]]
        elif roll < 0.9:  # recognition-only entry
            pred_box = None
        else:  # detector missed this instance entirely
            continue
        detections.append(
            {"triplet": tid, "score": float(scores[tid]),
             "instrument_bbox": pred_box, "target_bbox": None}
        )
    if rng.random() < 0.5:
        box = BOX_POOL[int(rng.integers(len(BOX_POOL)))]
        detections.append(
            {"triplet": int(rng.integers(N_CLASSES)),
             "score": round(float(rng.uniform(0.1, 0.9)), 4),
             "instrument_bbox": list(box), "target_bbox": None}
        )
    gt = {"triplets": positives, "boxes": boxes}
    pred = {"scores": scores.tolist(), "detections": detections}
    return gt, pred


def main():
    root = Path(__file__).resolve().parent / "synthetic"
    gt_dir = root / "gt"
    pred_dir = root / "pred"
    gt_dir.mkdir(parents=True, exist_ok=True)
    pred_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(SEED)
    for vid, n_frames in VIDEOS.items():
        gt_frames = {}
        pred_frames = {}
        for f in range(n_frames):
            key = str(f * FRAME_STRIDE)
            gt_frames[key], pred_frames[key] = build_frame(rng)
        (gt_dir / f"{vid}.json").write_text(
            json.dumps({"video": vid, "num_triplet_classes": N_CLASSES, "frames": gt_frames},
                       indent=2) + "\n"
        )
        (pred_dir / f"{vid}.json").write_text(
            json.dumps({"video": vid, "num_triplet_classes": N_CLASSES, "frames": pred_frames},
                       indent=2) + "\n"
        )

    (root / "split.json").write_text(
        json.dumps({"name": "synthetic-fixture",
                    "partitions": {"all": sorted(VIDEOS)}}, indent=2) + "\n"
    )
    print(f"wrote {len(VIDEOS)} videos under {root}")


if __name__ == "__main__":
    main()
