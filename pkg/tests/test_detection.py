import math

import numpy as np
import pytest

from tripletmetrics import (
    BoundingBox,
    Detection,
    GroundTruthBox,
    detection_ap,
    iou,
    match_frame,
    target_localization_supported,
)
from tripletmetrics.detection import DetectionResult
from tripletmetrics.recognition import APResult

from conftest import GRID_BOXES, corner_iou, pr_step_ap, random_box, reference_match

A = BoundingBox(0.0, 0.0, 0.5, 0.5)
C = BoundingBox(0.25, 0.0, 0.5, 0.5)  # IoU(A, C) = 1/3
FAR = BoundingBox(0.6, 0.6, 0.3, 0.3)


# --------------------------------------------------------------------------
# Boxes and IoU
# --------------------------------------------------------------------------


def test_bounding_box_validation():
    with pytest.raises(ValueError):
        BoundingBox(-0.2, 0.0, 0.3, 0.3)
    with pytest.raises(ValueError):
        BoundingBox(0.8, 0.0, 0.3, 0.3)  # spills past the right edge
    with pytest.raises(ValueError):
        BoundingBox(0.0, 0.0, 1.2, 0.5)
    assert BoundingBox(0.25, 0.25, 0.5, 0.5).area == pytest.approx(0.25)


def test_iou_fixtures():
    assert iou(A, A) == 1.0
    assert iou(A, FAR) == 0.0
    assert iou(A, C) == pytest.approx(1 / 3, abs=1e-12)
    assert iou(C, A) == iou(A, C)
    # shared edge only: zero-area intersection
    assert iou(A, BoundingBox(0.5, 0.0, 0.5, 0.5)) == 0.0


def test_iou_containment():
    outer = BoundingBox(0.0, 0.0, 1.0, 1.0)
    inner = BoundingBox(0.25, 0.25, 0.5, 0.5)
    assert iou(outer, inner) == pytest.approx(0.25)


def test_iou_degenerate_boxes():
    line = BoundingBox(0.2, 0.2, 0.0, 0.4)
    assert iou(line, line) == 0.0  # no union area at all
    assert iou(line, A) == 0.0


def test_iou_matches_corner_oracle():
    rng = np.random.default_rng(10)
    for _ in range(500):
        x, y = rng.uniform(0, 0.6, size=2)
        w, h = rng.uniform(0.05, 0.4, size=2)
        a = BoundingBox(x, y, w, h)
        x, y = rng.uniform(0, 0.6, size=2)
        w, h = rng.uniform(0.05, 0.4, size=2)
        b = BoundingBox(x, y, w, h)
        assert iou(a, b) == pytest.approx(corner_iou(a, b), abs=1e-12)


def test_record_validation():
    with pytest.raises(ValueError):
        Detection(0, 1.5, A)
    with pytest.raises(ValueError):
        GroundTruthBox(0, None)


# --------------------------------------------------------------------------
# Frame matching
# --------------------------------------------------------------------------


def test_match_threshold_boundary(toy_map):
    preds = [Detection(0, 0.9, A)]
    gts = [GroundTruthBox(0, C)]
    low = match_frame(toy_map, preds, gts, theta=0.25)
    assert low.matches == [(0, 0, pytest.approx(1 / 3))]
    high = match_frame(toy_map, preds, gts, theta=0.5)
    assert high.matches == []
    assert high.unmatched_predictions == [0]
    assert high.unmatched_groundtruth == [0]
    # the threshold is inclusive
    edge = match_frame(toy_map, preds, gts, theta=1 / 3)
    assert edge.tp == 1


def test_match_identity_gating(toy_map):
    # same location, different triplet id: no triplet-level match
    preds = [Detection(0, 0.9, A)]
    gts = [GroundTruthBox(1, A)]
    assert match_frame(toy_map, preds, gts, kind="triplet").tp == 0
    # ...but triplets 0 and 1 share instrument 0, so instrument matching succeeds
    assert match_frame(toy_map, preds, gts, kind="instrument").tp == 1
    # triplet 2 uses the other instrument
    assert match_frame(toy_map, [Detection(2, 0.9, A)], gts, kind="instrument").tp == 0


def test_match_greedy_confidence_order(toy_map):
    # both predictions overlap the single groundtruth; the confident one wins
    preds = [Detection(0, 0.4, A), Detection(0, 0.8, A)]
    gts = [GroundTruthBox(0, A)]
    result = match_frame(toy_map, preds, gts)
    assert result.matches == [(1, 0, 1.0)]
    assert result.unmatched_predictions == [0]


def test_match_confidence_tie_keeps_input_order(toy_map):
    preds = [Detection(0, 0.7, A), Detection(0, 0.7, A)]
    gts = [GroundTruthBox(0, A)]
    result = match_frame(toy_map, preds, gts)
    assert result.matches[0][0] == 0


def test_match_prefers_highest_iou(toy_map):
    preds = [Detection(0, 0.9, A)]
    gts = [GroundTruthBox(0, C), GroundTruthBox(0, A)]
    result = match_frame(toy_map, preds, gts, theta=0.25)
    assert result.matches == [(0, 1, 1.0)]
    assert result.unmatched_groundtruth == [0]


def test_match_iou_tie_takes_first_groundtruth(toy_map):
    preds = [Detection(0, 0.9, A)]
    gts = [GroundTruthBox(0, A), GroundTruthBox(0, A)]
    result = match_frame(toy_map, preds, gts)
    assert result.matches[0][1] == 0


def test_match_skips_boxless_predictions(toy_map):
    preds = [Detection(0, 0.99, None), Detection(0, 0.5, A)]
    gts = [GroundTruthBox(0, A)]
    result = match_frame(toy_map, preds, gts)
    assert result.matches == [(1, 0, 1.0)]
    assert result.unmatched_predictions == [0]


def test_match_each_groundtruth_claimed_once(toy_map):
    preds = [Detection(0, 0.9, A), Detection(0, 0.8, A)]
    gts = [GroundTruthBox(0, A)]
    result = match_frame(toy_map, preds, gts)
    assert result.tp == 1 and result.fp == 1


def test_match_argument_validation(toy_map):
    with pytest.raises(ValueError):
        match_frame(toy_map, [], [], theta=1.5)
    with pytest.raises(ValueError):
        match_frame(toy_map, [Detection(7, 0.9, A)], [])  # id 7 not in the 3-class map
    with pytest.raises(ValueError):
        match_frame(toy_map, [], [], kind="verb")


def test_require_target_box_presence_checked_upfront(toy_map):
    with pytest.raises(ValueError, match="prediction"):
        match_frame(toy_map, [Detection(0, 0.9, A)], [GroundTruthBox(0, A, A)], require_target=True)
    with pytest.raises(ValueError, match="groundtruth"):
        match_frame(toy_map, [Detection(0, 0.9, A, A)], [GroundTruthBox(0, A)], require_target=True)
    # box-less predictions carry no localization to check
    result = match_frame(toy_map, [Detection(0, 0.9, None)], [GroundTruthBox(0, A, A)], require_target=True)
    assert result.fp == 1


def test_require_target_gates_on_both_overlaps(toy_map):
    pred = Detection(0, 0.9, A, FAR)
    gt = GroundTruthBox(0, A, A)
    assert match_frame(toy_map, [pred], [gt], require_target=False).tp == 1
    assert match_frame(toy_map, [pred], [gt], require_target=True).tp == 0
    good = Detection(0, 0.9, A, A)
    assert match_frame(toy_map, [good], [gt], require_target=True).tp == 1


def _random_frame(rng, n_classes=3, allow_boxless=True):
    preds = []
    for _ in range(int(rng.integers(0, 5))):
        box = None if allow_boxless and rng.random() < 0.2 else random_box(rng)
        preds.append(Detection(int(rng.integers(n_classes)), round(float(rng.uniform(0, 1)), 2), box))
    gts = [
        GroundTruthBox(int(rng.integers(n_classes)), random_box(rng))
        for _ in range(int(rng.integers(0, 4)))
    ]
    return preds, gts


def test_match_conservation_and_determinism(toy_map):
    rng = np.random.default_rng(11)
    for _ in range(300):
        preds, gts = _random_frame(rng)
        theta = float(rng.choice([0.25, 0.5, 0.75]))
        kind = str(rng.choice(["triplet", "instrument"]))
        result = match_frame(toy_map, preds, gts, kind=kind, theta=theta)
        assert result.tp + result.fp == len(preds)
        assert result.tp + result.fn == len(gts)
        again = match_frame(toy_map, preds, gts, kind=kind, theta=theta)
        assert again.matches == result.matches


def test_match_agrees_with_reference(toy_map):
    rng = np.random.default_rng(12)
    for _ in range(400):
        preds, gts = _random_frame(rng)
        theta = float(rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]))
        kind = str(rng.choice(["triplet", "instrument"]))
        result = match_frame(toy_map, preds, gts, kind=kind, theta=theta)
        ref_matches, ref_fp, ref_fn = reference_match(toy_map, preds, gts, kind=kind, theta=theta)
        assert [(k, j) for k, j, _ in result.matches] == [(k, j) for k, j, _ in ref_matches]
        for (_, _, got), (_, _, want) in zip(result.matches, ref_matches):
            assert got == pytest.approx(want, abs=1e-12)
        assert result.unmatched_predictions == ref_fp
        assert result.unmatched_groundtruth == ref_fn


def test_match_monotone_in_theta(toy_map):
    rng = np.random.default_rng(13)
    for _ in range(200):
        preds, gts = _random_frame(rng)
        tps = [match_frame(toy_map, preds, gts, theta=t).tp for t in (0.1, 0.4, 0.7, 1.0)]
        assert tps == sorted(tps, reverse=True)


# --------------------------------------------------------------------------
# Detection AP
# --------------------------------------------------------------------------


def test_detection_ap_perfect(toy_map):
    video = [
        ([Detection(0, 0.9, A)], [GroundTruthBox(0, A)]),
        ([Detection(1, 0.8, C)], [GroundTruthBox(1, C)]),
    ]
    result = detection_ap([video], toy_map)
    assert result.ap.per_class[0] == 1.0
    assert result.ap.per_class[1] == 1.0
    assert math.isnan(result.ap.per_class[2])
    assert result.ap.mean == 1.0
    assert result.tp.tolist() == [1, 1, 0]
    assert result.fp.tolist() == [0, 0, 0]
    assert result.fn.tolist() == [0, 0, 0]


def test_detection_ap_zero_when_localization_misses(toy_map):
    video = [([Detection(0, 0.9, C)], [GroundTruthBox(0, A)])]
    result = detection_ap([video], toy_map, theta=0.5)
    assert result.ap.per_class[0] == 0.0  # defined (one positive), just never hit
    assert result.tp[0] == 0 and result.fp[0] == 1 and result.fn[0] == 1


def test_detection_ap_counts_missed_groundtruth_in_recall(toy_map):
    # two instances, one detected: AP caps at 0.5
    video = [
        ([Detection(0, 0.9, A)], [GroundTruthBox(0, A)]),
        ([], [GroundTruthBox(0, A)]),
    ]
    result = detection_ap([video], toy_map)
    assert result.ap.per_class[0] == pytest.approx(0.5)
    assert result.fn[0] == 1


def test_detection_ap_false_positive_above_hit(toy_map):
    video = [
        (
            [Detection(0, 0.9, FAR), Detection(0, 0.8, A)],
            [GroundTruthBox(0, A)],
        )
    ]
    result = detection_ap([video], toy_map)
    assert result.ap.per_class[0] == pytest.approx(0.5)
    assert result.ap.per_class[0] == pytest.approx(pr_step_ap([0.9, 0.8], [0, 1]))


def test_detection_ap_video_average_vs_global_pool(toy_map):
    video1 = [([Detection(0, 0.9, A)], [GroundTruthBox(0, A)])]
    video2 = [
        (
            [Detection(0, 0.8, FAR), Detection(0, 0.7, A)],
            [GroundTruthBox(0, A)],
        )
    ]
    averaged = detection_ap([video1, video2], toy_map)
    assert averaged.ap.per_class[0] == pytest.approx((1.0 + 0.5) / 2)
    pooled = detection_ap([video1, video2], toy_map, global_pool=True)
    assert pooled.ap.per_class[0] == pytest.approx(pr_step_ap([0.9, 0.8, 0.7], [1, 0, 1], n_positive=2))
    # counts are aggregation-independent
    assert averaged.tp.tolist() == pooled.tp.tolist()
    assert averaged.fp.tolist() == pooled.fp.tolist()
    assert averaged.fn.tolist() == pooled.fn.tolist()


def test_detection_ap_video_average_skips_absent_classes(toy_map):
    video1 = [([Detection(0, 0.9, A)], [GroundTruthBox(0, A)])]
    video2 = [([Detection(1, 0.9, A)], [GroundTruthBox(1, A)])]  # class 0 absent here
    result = detection_ap([video1, video2], toy_map)
    assert result.ap.per_class[0] == 1.0
    assert result.fp.tolist() == [0, 0, 0]


def test_detection_ap_instrument_kind(toy_map):
    # triplets 0 and 1 share instrument 0: a cross-triplet match at instrument level
    video = [([Detection(0, 0.9, A)], [GroundTruthBox(1, A)])]
    result = detection_ap([video], toy_map, kind="instrument")
    assert result.ap.per_class.shape == (2,)
    assert result.ap.per_class[0] == 1.0
    assert math.isnan(result.ap.per_class[1])
    assert result.tp.tolist() == [1, 0]


def test_detection_ap_mask_hides_classes_not_counts(toy_map):
    video = [
        ([Detection(0, 0.9, A)], [GroundTruthBox(0, A)]),
        ([Detection(1, 0.8, C)], [GroundTruthBox(1, C)]),
    ]
    result = detection_ap([video], toy_map, class_mask={1})
    assert math.isnan(result.ap.per_class[1])
    assert result.ap.mean == 1.0
    assert result.tp.tolist() == [1, 1, 0]  # tallies ignore the mask
    with pytest.raises(ValueError):
        detection_ap([video], toy_map, class_mask={9})


def test_detection_ap_empty_inputs(toy_map):
    result = detection_ap([], toy_map)
    assert all(math.isnan(v) for v in result.ap.per_class)
    assert result.tp.tolist() == [0, 0, 0]
    result = detection_ap([[([], [])]], toy_map)
    assert math.isnan(result.ap.mean)


def test_detection_result_precision_recall():
    result = DetectionResult(
        ap=APResult(np.array([1.0, np.nan, np.nan])),
        tp=np.array([3, 0, 0]),
        fp=np.array([1, 2, 0]),
        fn=np.array([1, 0, 0]),
    )
    precision = result.precision()
    recall = result.recall()
    assert precision[0] == pytest.approx(0.75)
    assert precision[1] == 0.0
    assert math.isnan(precision[2])  # class never predicted
    assert recall[0] == pytest.approx(0.75)
    assert math.isnan(recall[1])  # class has no groundtruth
    assert math.isnan(recall[2])


def test_detection_counts_reconcile_with_matcher(toy_map):
    rng = np.random.default_rng(14)
    frames = [_random_frame(rng) for _ in range(40)]
    result = detection_ap([frames], toy_map, theta=0.5)
    tp = np.zeros(3, dtype=int)
    fp = np.zeros(3, dtype=int)
    fn = np.zeros(3, dtype=int)
    ident = lambda tid: tid
    for preds, gts in frames:
        m = match_frame(toy_map, preds, gts, theta=0.5)
        hit = {k for k, _, _ in m.matches}
        for k, p in enumerate(preds):
            (tp if k in hit else fp)[ident(p.triplet_id)] += 1
        for j in m.unmatched_groundtruth:
            fn[gts[j].triplet_id] += 1
    assert result.tp.tolist() == tp.tolist()
    assert result.fp.tolist() == fp.tolist()
    assert result.fn.tolist() == fn.tolist()


# --------------------------------------------------------------------------
# Target-localization capability probe
# --------------------------------------------------------------------------


def test_target_localization_supported_cases():
    with_target = [GroundTruthBox(0, A, A)]
    without_target = [GroundTruthBox(0, A)]
    assert target_localization_supported([with_target, with_target])
    assert not target_localization_supported([with_target, without_target])
    assert not target_localization_supported([without_target])
    assert not target_localization_supported([with_target, None])  # unannotated frame
    assert not target_localization_supported([])  # no boxes anywhere
    assert not target_localization_supported([[], []])
    assert target_localization_supported([[], with_target])
