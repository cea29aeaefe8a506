"""Evaluation metrics for surgical action triplet recognition and detection.

The package covers the full evaluation protocol for <instrument, verb,
target> action triplets: average precision at three aggregation levels
(per-video pools, cross-video means, and one global pool), component APs
recovered from triplet scores by a max filter, box-level detection AP with
greedy IoU matching, association diagnostics that explain detector failure
modes, and the official dataset split manifests with k-fold aggregation.
"""

__version__ = "0.1.0"

from .labelspace import (
    COMPONENTS,
    ComponentMap,
    component_size,
    default_component_map,
    load_component_map,
    parse_component_map,
)
from .disentangle import disentangle_labels, disentangle_scores
from .recognition import APResult, RecognitionAccumulator, average_precision
from .detection import (
    BoundingBox,
    Detection,
    DetectionResult,
    GroundTruthBox,
    MatchResult,
    detection_ap,
    iou,
    match_frame,
    target_localization_supported,
)
from .association import (
    CATEGORIES,
    AssociationResult,
    TASReport,
    classify_associations,
    sum_association_counts,
    tas_percentages,
)
from .splits import (
    BUILTIN_SPLIT_NAMES,
    CHOLECT45,
    CHOLECT50,
    DatasetStats,
    FoldResult,
    SplitManifest,
    aggregate_folds,
    builtin_split,
    format_mean_std,
    generate_cv_folds,
    validate_manifest,
)
from .io import (
    VideoGroundTruth,
    VideoPredictions,
    detection_from_dict,
    dumps,
    groundtruth_box_from_dict,
    read_groundtruth,
    read_manifest,
    read_predictions,
    read_video_dir,
    round_floats,
    write_manifest,
)
from .evaluate import evaluate

__all__ = [
    "APResult",
    "AssociationResult",
    "BUILTIN_SPLIT_NAMES",
    "BoundingBox",
    "CATEGORIES",
    "CHOLECT45",
    "CHOLECT50",
    "COMPONENTS",
    "ComponentMap",
    "DatasetStats",
    "Detection",
    "DetectionResult",
    "FoldResult",
    "GroundTruthBox",
    "MatchResult",
    "RecognitionAccumulator",
    "SplitManifest",
    "TASReport",
    "VideoGroundTruth",
    "VideoPredictions",
    "aggregate_folds",
    "average_precision",
    "builtin_split",
    "classify_associations",
    "component_size",
    "default_component_map",
    "detection_ap",
    "detection_from_dict",
    "disentangle_labels",
    "disentangle_scores",
    "dumps",
    "evaluate",
    "format_mean_std",
    "generate_cv_folds",
    "groundtruth_box_from_dict",
    "iou",
    "load_component_map",
    "match_frame",
    "parse_component_map",
    "read_groundtruth",
    "read_manifest",
    "read_predictions",
    "read_video_dir",
    "round_floats",
    "sum_association_counts",
    "target_localization_supported",
    "tas_percentages",
    "validate_manifest",
    "write_manifest",
    "__version__",
]
