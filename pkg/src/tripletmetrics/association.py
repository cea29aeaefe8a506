"""Triplet-association diagnostics: a seven-way partition of match quality.

Every prediction and every groundtruth instance in a frame receives exactly
one label, assigned by stages that each consume items left over by the
previous ones:

    LM   localized-and-matched: same triplet, instrument-box IoU >= theta.
    pLM  partially localized: same triplet, some overlap but IoU < theta.
    IDS  identity switch: box overlaps a different triplet whose own identity
         appears elsewhere in the frame's groundtruth.
    IDM  identity miss: box overlaps a different triplet and the predicted
         identity appears nowhere in the frame's groundtruth.
    MIL  missed localization: a box-less prediction whose triplet is present.
    RFP  residual false positive (prediction consumed by nothing above).
    RFN  residual false negative (groundtruth consumed by nothing above).

The first five categories consume prediction/groundtruth pairs, so

    LM + pLM + IDS + IDM + MIL + RFP == #predictions
    LM + pLM + IDS + IDM + MIL + RFN == #groundtruth
"""

from __future__ import annotations

from dataclasses import dataclass

from .detection import iou

CATEGORIES = ("LM", "pLM", "IDS", "IDM", "MIL", "RFP", "RFN")

_PAIR_CATEGORIES = ("LM", "pLM", "IDS", "IDM", "MIL")


@dataclass
class TASReport:
    """Category counts and the percentage share of each in their grand total."""

    counts: dict
    percentages: dict


@dataclass
class AssociationResult:
    """Per-item category labels for one frame, plus the frame's counts."""

    prediction_labels: list
    groundtruth_labels: list
    counts: dict


def classify_associations(predictions, groundtruth, theta=0.5):
    """Partition one frame's predictions and groundtruth into the seven categories.

    Predictions are processed in descending confidence (ties keep input
    order) within each stage.  Identity is the full triplet id; overlap is
    measured between instrument boxes.
    """
    if not 0 <= theta <= 1:
        raise ValueError(f"theta={theta} outside [0, 1]")

    n_pred = len(predictions)
    n_gt = len(groundtruth)
    pred_labels = [None] * n_pred
    gt_labels = [None] * n_gt
    order = sorted(range(n_pred), key=lambda k: -predictions[k].confidence)
    gt_identities = {g.triplet_id for g in groundtruth}

    overlap = [
        [
            iou(p.instrument_box, g.instrument_box) if p.instrument_box is not None else 0.0
            for g in groundtruth
        ]
        for p in predictions
    ]

    def claim(category, eligible):
        """Run one stage: each unconsumed prediction claims its best eligible groundtruth."""
        for k in order:
            if pred_labels[k] is not None or predictions[k].instrument_box is None:
                continue
            best_j = None
            best_iou = -1.0
            for j in range(n_gt):
                if gt_labels[j] is not None:
                    continue
                if not eligible(k, j):
                    continue
                if overlap[k][j] > best_iou:
                    best_iou = overlap[k][j]
                    best_j = j
            if best_j is not None:
                pred_labels[k] = category
                gt_labels[best_j] = category

    same = lambda k, j: predictions[k].triplet_id == groundtruth[j].triplet_id
    claim("LM", lambda k, j: same(k, j) and overlap[k][j] >= theta)
    claim("pLM", lambda k, j: same(k, j) and 0.0 < overlap[k][j] < theta)
    claim(
        "IDS",
        lambda k, j: not same(k, j)
        and overlap[k][j] >= theta
        and predictions[k].triplet_id in gt_identities,
    )
    claim(
        "IDM",
        lambda k, j: not same(k, j)
        and overlap[k][j] >= theta
        and predictions[k].triplet_id not in gt_identities,
    )

    # MIL: box-less predictions paired with a leftover groundtruth of the same triplet.
    for k in order:
        if pred_labels[k] is not None or predictions[k].instrument_box is not None:
            continue
        for j in range(n_gt):
            if gt_labels[j] is None and groundtruth[j].triplet_id == predictions[k].triplet_id:
                pred_labels[k] = "MIL"
                gt_labels[j] = "MIL"
                break

    for k in range(n_pred):
        if pred_labels[k] is None:
            pred_labels[k] = "RFP"
    for j in range(n_gt):
        if gt_labels[j] is None:
            gt_labels[j] = "RFN"

    counts = dict.fromkeys(CATEGORIES, 0)
    for label in pred_labels:
        if label != "RFP":
            counts[label] += 1
    counts["RFP"] = pred_labels.count("RFP")
    counts["RFN"] = gt_labels.count("RFN")
    return AssociationResult(pred_labels, gt_labels, counts)


def sum_association_counts(counts_iterable):
    """Add per-frame category counts together (order-independent)."""
    total = dict.fromkeys(CATEGORIES, 0)
    for counts in counts_iterable:
        for category in CATEGORIES:
            total[category] += counts.get(category, 0)
    return total


def tas_percentages(counts):
    """Express counts as percentages of the grand total across all categories.

    All-zero counts yield all-zero percentages; otherwise the percentages sum
    to exactly 100.
    """
    clean = {}
    for category in CATEGORIES:
        value = int(counts.get(category, 0))
        if value < 0:
            raise ValueError(f"negative count for {category}")
        clean[category] = value
    denom = sum(clean.values())
    if denom == 0:
        percentages = dict.fromkeys(CATEGORIES, 0.0)
    else:
        percentages = {category: 100.0 * value / denom for category, value in clean.items()}
    return TASReport(counts=clean, percentages=percentages)
