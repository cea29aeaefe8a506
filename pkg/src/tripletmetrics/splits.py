"""Official dataset split manifests, fold generation, and k-fold aggregation."""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

#: Canonical dataset statistics used for manifest validation.
@dataclass(frozen=True)
class DatasetStats:
    videos: int
    frames: int | None = None
    instances: int | None = None
    bboxes: int | None = None
    n_triplets: int = 100
    n_instruments: int = 6
    n_verbs: int = 10
    n_targets: int = 15
    n_phases: int = 7


CHOLECT45 = DatasetStats(videos=45, frames=90_500, instances=137_900)
CHOLECT50 = DatasetStats(videos=50, frames=100_900, instances=151_000, bboxes=13_000)


@dataclass(frozen=True)
class SplitManifest:
    """Named partitioning of a video set; a video id appears in at most one partition."""

    name: str
    partitions: dict

    def __post_init__(self):
        partitions = {str(k): tuple(str(v) for v in vids) for k, vids in self.partitions.items()}
        object.__setattr__(self, "partitions", partitions)
        seen = {}
        for part, vids in partitions.items():
            for vid in vids:
                if vid in seen:
                    raise ValueError(f"video {vid} appears in partitions {seen[vid]!r} and {part!r}")
                seen[vid] = part

    def videos(self):
        """All video ids in the manifest, in partition order."""
        return tuple(vid for vids in self.partitions.values() for vid in vids)

    def partition(self, name):
        if name not in self.partitions:
            raise KeyError(f"manifest {self.name!r} has no partition {name!r}; has {tuple(self.partitions)}")
        return self.partitions[name]


# --------------------------------------------------------------------------
# Builtin manifests.  These are frozen fixtures: the five-fold tables are the
# published cross-validation assignment and are never regenerated.
# --------------------------------------------------------------------------

_CV_FOLDS = (
    ("VID79", "VID02", "VID51", "VID06", "VID25", "VID14", "VID66", "VID23", "VID50", "VID111"),
    ("VID80", "VID32", "VID05", "VID15", "VID40", "VID47", "VID26", "VID48", "VID70", "VID96"),
    ("VID31", "VID57", "VID36", "VID18", "VID52", "VID68", "VID10", "VID08", "VID73", "VID103"),
    ("VID42", "VID29", "VID60", "VID27", "VID65", "VID75", "VID22", "VID49", "VID12", "VID110"),
    ("VID78", "VID43", "VID62", "VID35", "VID74", "VID01", "VID56", "VID04", "VID13", "VID92"),
)

_RDV_TRAIN = (
    "VID01", "VID02", "VID04", "VID05", "VID13",
    "VID15", "VID18", "VID22", "VID23", "VID25",
    "VID26", "VID27", "VID31", "VID35", "VID36",
    "VID40", "VID43", "VID47", "VID48", "VID49",
    "VID52", "VID56", "VID57", "VID60", "VID62",
    "VID65", "VID66", "VID68", "VID70", "VID75",
    "VID79", "VID92", "VID96", "VID103", "VID110",
)
_RDV_VAL = ("VID08", "VID12", "VID29", "VID50", "VID78")
_RDV_TEST = (
    "VID06", "VID10", "VID14", "VID32", "VID42",
    "VID51", "VID73", "VID74", "VID80", "VID111",
)

_CHALLENGE_TRAINVAL = (
    "VID01", "VID02", "VID04", "VID06", "VID08",
    "VID10", "VID12", "VID13", "VID14", "VID15",
    "VID22", "VID23", "VID25", "VID26", "VID27",
    "VID29", "VID31", "VID32", "VID35", "VID40",
    "VID42", "VID43", "VID47", "VID48", "VID49",
    "VID50", "VID51", "VID52", "VID56", "VID57",
    "VID60", "VID62", "VID66", "VID68", "VID70",
    "VID73", "VID75", "VID78", "VID79", "VID80",
    "VID05", "VID18", "VID36", "VID65", "VID74",
)
_CHALLENGE_TEST = ("VID92", "VID96", "VID103", "VID110", "VID111")


def _build_builtins():
    builtins = {
        "rdv": SplitManifest(
            "rdv", {"train": _RDV_TRAIN, "val": _RDV_VAL, "test": _RDV_TEST}
        ),
        "challenge": SplitManifest(
            "challenge", {"trainval": _CHALLENGE_TRAINVAL, "test": _CHALLENGE_TEST}
        ),
        "cholect45-cv": SplitManifest(
            "cholect45-cv",
            {f"fold{k + 1}": fold[:9] for k, fold in enumerate(_CV_FOLDS)},
        ),
        "cholect50-cv": SplitManifest(
            "cholect50-cv",
            {f"fold{k + 1}": fold for k, fold in enumerate(_CV_FOLDS)},
        ),
    }
    return builtins


_BUILTINS = _build_builtins()

BUILTIN_SPLIT_NAMES = tuple(_BUILTINS)


def builtin_split(name):
    """One of the frozen official manifests: rdv, challenge, cholect45-cv, cholect50-cv."""
    try:
        return _BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown split {name!r}; builtin splits are {BUILTIN_SPLIT_NAMES}") from None


def generate_cv_folds(videos, k, cluster_size=None, seed=0, name="generated-cv"):
    """Duration-balanced k-fold assignment for a new dataset.

    Videos are sorted by duration descending (ties by video id) and cut into
    consecutive clusters of k; a seeded Fisher-Yates shuffle
    (``random.Random(seed)``, Mersenne Twister) then deals each cluster's
    videos out one per fold.  Every fold therefore holds exactly one video
    from every duration cluster.

    Args:
        videos: iterable of (video_id, duration) pairs.
        k: number of folds.
        cluster_size: must equal k when given (one video per fold per cluster).
        seed: PRNG seed; fixed seed -> identical manifest.
        name: manifest name.
    """
    videos = [(str(vid), float(duration)) for vid, duration in videos]
    k = int(k)
    if k < 2:
        raise ValueError("k must be >= 2")
    if cluster_size is None:
        cluster_size = k
    if cluster_size != k:
        raise ValueError(f"cluster_size must equal k (one video per fold per cluster), got {cluster_size}")
    ids = [vid for vid, _ in videos]
    if len(set(ids)) != len(ids):
        dup = sorted({v for v in ids if ids.count(v) > 1})
        raise ValueError(f"duplicate video id(s): {dup}")
    if not videos or len(videos) % k != 0:
        raise ValueError(f"{len(videos)} videos cannot be divided into clusters of {k}")

    ranked = sorted(videos, key=lambda item: (-item[1], item[0]))
    rng = random.Random(seed)
    folds = [[] for _ in range(k)]
    for start in range(0, len(ranked), k):
        cluster = ranked[start : start + k]
        assignment = list(range(k))
        rng.shuffle(assignment)
        for offset, (vid, _) in enumerate(cluster):
            folds[assignment[offset]].append(vid)
    return SplitManifest(name, {f"fold{j + 1}": tuple(fold) for j, fold in enumerate(folds)})


@dataclass
class ValidationCheck:
    name: str
    passed: bool
    detail: str


@dataclass
class ManifestValidation:
    checks: list

    @property
    def passed(self):
        return all(check.passed for check in self.checks)


def validate_manifest(manifest, expected):
    """Check a manifest against expected dataset statistics.

    Verifies the total video count, partition disjointness (by construction
    for SplitManifest, re-checked for manifests read from files), and — when
    every partition is a ``fold<N>`` — equal fold sizes.  Failures are
    reported, not raised.
    """
    checks = []
    all_videos = manifest.videos()
    unique = set(all_videos)

    checks.append(
        ValidationCheck(
            "video-count",
            len(unique) == expected.videos,
            f"{len(unique)} unique videos, expected {expected.videos}",
        )
    )
    checks.append(
        ValidationCheck(
            "disjoint-partitions",
            len(unique) == len(all_videos),
            f"{len(all_videos)} listed vs {len(unique)} unique",
        )
    )
    if manifest.partitions and all(re.fullmatch(r"fold\d+", p) for p in manifest.partitions):
        sizes = sorted({len(v) for v in manifest.partitions.values()})
        checks.append(
            ValidationCheck(
                "equal-fold-sizes",
                len(sizes) == 1,
                f"fold sizes {[len(v) for v in manifest.partitions.values()]}",
            )
        )
    return ManifestValidation(checks)


# --------------------------------------------------------------------------
# Cross-fold aggregation.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldResult:
    """One fold's scalar metrics, keyed by metric name."""

    fold_index: int
    metrics: dict


def aggregate_folds(results):
    """Mean and population standard deviation of each metric across folds.

    Args:
        results: at least two FoldResult with identical metric-name sets.

    Returns:
        dict metric name -> (mean, std), metric order following the first fold.
    """
    results = list(results)
    if len(results) < 2:
        raise ValueError("aggregation needs at least two folds")
    names = list(results[0].metrics)
    for res in results[1:]:
        if set(res.metrics) != set(names):
            raise ValueError(
                f"fold {res.fold_index} metrics {sorted(res.metrics)} != {sorted(names)}"
            )
    ordered = sorted(results, key=lambda r: r.fold_index)
    out = {}
    for name in names:
        values = [float(r.metrics[name]) for r in ordered]
        mean = sum(values) / len(values)
        variance = sum((v - mean) ** 2 for v in values) / len(values)
        out[name] = (mean, math.sqrt(variance))
    return out


def format_mean_std(mean, std):
    """Render an aggregated cell as ``M.m±S.s`` with one decimal place."""
    return f"{mean:.1f}±{std:.1f}"
