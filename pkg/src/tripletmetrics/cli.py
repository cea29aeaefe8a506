"""Command-line interface.

Subcommands: ``recognize``, ``detect``, ``splits show|dump|make``, ``aggregate``.
Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .evaluate import evaluate
from .io import (
    dumps,
    manifest_to_dict,
    read_groundtruth,
    read_manifest,
    read_predictions,
    read_video_dir,
    write_text,
)
from .labelspace import COMPONENTS, default_component_map, load_component_map
from .splits import (
    BUILTIN_SPLIT_NAMES,
    FoldResult,
    aggregate_folds,
    builtin_split,
    format_mean_std,
    generate_cv_folds,
)

log = logging.getLogger("tripletmetrics")


def parse_mask(spec):
    """Parse ``--mask`` values like ``94-99`` or ``3,7,94-99`` into a set of ids."""
    mask = set()
    if not spec:
        return mask
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" in chunk:
            lo, _, hi = chunk.partition("-")
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise ValueError(f"bad mask range {chunk!r}") from None
            if hi < lo:
                raise ValueError(f"bad mask range {chunk!r}")
            mask.update(range(lo, hi + 1))
        else:
            try:
                mask.add(int(chunk))
            except ValueError:
                raise ValueError(f"bad mask entry {chunk!r}") from None
    return mask


def _resolve_split(parser, name):
    if name in BUILTIN_SPLIT_NAMES:
        return builtin_split(name)
    if os.path.exists(name):
        return read_manifest(name)
    parser.error(f"unknown split {name!r}: not a builtin ({', '.join(BUILTIN_SPLIT_NAMES)}) or a manifest file")


def _resolve_partition(parser, manifest, args):
    if args.partition and args.fold is not None:
        parser.error("--fold and --partition are mutually exclusive")
    if args.partition:
        name = args.partition
    elif args.fold is not None:
        name = f"fold{args.fold}"
    else:
        parser.error("select videos with --fold N or --partition NAME")
    if name not in manifest.partitions:
        parser.error(f"split {manifest.name!r} has no partition {name!r} (has {', '.join(manifest.partitions)})")
    return name


def _load_map(args):
    if getattr(args, "map", None):
        return load_component_map(args.map)
    return default_component_map()


def _add_eval_arguments(sub, detection):
    sub.add_argument("--gt", required=True, help="directory of per-video groundtruth documents")
    sub.add_argument("--pred", required=True, help="directory of per-video prediction documents")
    sub.add_argument("--split", required=True, help="builtin split name or manifest file path")
    sub.add_argument("--fold", type=int, help="fold number for cross-validation splits")
    sub.add_argument("--partition", help="partition name (e.g. test)")
    sub.add_argument("--mask", help="triplet ids to exclude, e.g. 94-99 or 3,7,94-99")
    sub.add_argument("--map", help="component map document (default: bundled CholecT50 map)")
    sub.add_argument("--global", dest="global_pool", action="store_true",
                     help="pool all videos' frames instead of averaging per-video APs")
    sub.add_argument("--out", help="write the report here instead of stdout")
    if detection:
        sub.add_argument("--theta", type=float, default=0.5, help="IoU threshold (default 0.5)")
        sub.add_argument("--kind", choices=("instrument", "triplet"), default="triplet",
                         help="matching identity and class space (default triplet)")
        sub.add_argument("--require-target", action="store_true",
                         help="matches must also clear the target-box IoU threshold")
    else:
        sub.add_argument("--components", default=",".join(COMPONENTS),
                         help="comma list out of i,v,t,iv,it,ivt (default all)")


def _run_eval(parser, args, detection):
    manifest = _resolve_split(parser, args.split)
    part = _resolve_partition(parser, manifest, args)
    videos = list(manifest.partition(part))
    cmap = _load_map(args)
    mask = parse_mask(args.mask)
    groundtruth = read_video_dir(args.gt, videos, read_groundtruth)
    predictions = read_video_dir(args.pred, videos, read_predictions)
    if detection:
        components = ()
        report = evaluate(
            groundtruth,
            predictions,
            videos,
            components=components,
            component_map=cmap,
            class_mask=mask,
            theta=args.theta,
            include_detection=True,
            detection_kind=args.kind,
            require_target=args.require_target,
            include_tas=True,
            global_pool=args.global_pool,
            split_name=manifest.name,
            fold=args.fold,
            partition=part,
        )
    else:
        components = [c for c in args.components.split(",") if c]
        report = evaluate(
            groundtruth,
            predictions,
            videos,
            components=components,
            component_map=cmap,
            class_mask=mask,
            global_pool=args.global_pool,
            split_name=manifest.name,
            fold=args.fold,
            partition=part,
        )
    write_text(dumps(report), args.out)
    return 0


def _cmd_recognize(parser, args):
    return _run_eval(parser, args, detection=False)


def _cmd_detect(parser, args):
    return _run_eval(parser, args, detection=True)


def _cmd_splits_show(parser, args):
    manifest = _resolve_split(parser, args.name)
    lines = [f"split: {manifest.name}"]
    for part, vids in manifest.partitions.items():
        lines.append(f"{part} ({len(vids)}): {' '.join(vids)}")
    write_text("\n".join(lines) + "\n", None)
    return 0


def _cmd_splits_dump(parser, args):
    manifest = _resolve_split(parser, args.name)
    write_text(dumps(manifest_to_dict(manifest)), args.out)
    return 0


def _cmd_splits_make(parser, args):
    videos = []
    with open(args.videos, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ValueError(f"{args.videos}:{lineno}: expected 'video_id,duration'")
            videos.append((fields[0].strip(), float(fields[1])))
    manifest = generate_cv_folds(videos, args.folds, seed=args.seed, name=args.name)
    write_text(dumps(manifest_to_dict(manifest)), args.out)
    return 0


def _metric_values(path, report):
    """Flatten one report into aggregatable scalar metrics on the % scale."""
    metrics = {}
    for kind, entry in report.get("recognition", {}).items():
        if entry.get("mAP") is None:
            raise ValueError(f"{path}: recognition {kind} mAP is undefined; cannot aggregate")
        metrics[f"AP_{kind}"] = 100.0 * entry["mAP"]
    detection = report.get("detection")
    if detection:
        if detection.get("mAP") is None:
            raise ValueError(f"{path}: detection mAP is undefined; cannot aggregate")
        metrics[f"AP_detection_{detection['kind']}"] = 100.0 * detection["mAP"]
    if not metrics:
        raise ValueError(f"{path}: no aggregatable metrics in report")
    return metrics


def _cmd_aggregate(parser, args):
    import json

    results = []
    for index, path in enumerate(args.reports, start=1):
        with open(path, "r", encoding="utf-8") as fh:
            report = json.load(fh)
        fold = report.get("fold")
        results.append(FoldResult(fold if isinstance(fold, int) else index, _metric_values(path, report)))
    aggregated = aggregate_folds(results)
    out = {
        "tool": {"name": "tripletmetrics", "version": __version__},
        "folds": [r.fold_index for r in sorted(results, key=lambda r: r.fold_index)],
        "metrics": {
            name: {
                "mean": round(mean, 4),
                "std": round(std, 4),
                "cell": format_mean_std(mean, std),
                "values": [round(r.metrics[name], 4) for r in sorted(results, key=lambda r: r.fold_index)],
            }
            for name, (mean, std) in aggregated.items()
        },
    }
    write_text(dumps(out), args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tripletmetrics",
        description="Evaluation metrics for surgical action triplet recognition and detection.",
    )
    parser.add_argument("--version", action="version", version=f"tripletmetrics {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    recognize = commands.add_parser("recognize", help="compute recognition APs for a split partition")
    _add_eval_arguments(recognize, detection=False)
    recognize.set_defaults(handler=_cmd_recognize)

    detect = commands.add_parser("detect", help="compute detection AP and association diagnostics")
    _add_eval_arguments(detect, detection=True)
    detect.set_defaults(handler=_cmd_detect)

    splits = commands.add_parser("splits", help="inspect, export, or generate split manifests")
    actions = splits.add_subparsers(dest="action", required=True)

    show = actions.add_parser("show", help="print a split's partitions")
    show.add_argument("name", help="builtin split name or manifest file path")
    show.set_defaults(handler=_cmd_splits_show)

    dump = actions.add_parser("dump", help="export a split as a manifest document")
    dump.add_argument("name", help="builtin split name or manifest file path")
    dump.add_argument("--out", help="write the manifest here instead of stdout")
    dump.set_defaults(handler=_cmd_splits_dump)

    make = actions.add_parser("make", help="generate duration-balanced folds for a new dataset")
    make.add_argument("--videos", required=True, help="CSV of video_id,duration lines")
    make.add_argument("--folds", type=int, default=5, help="number of folds (default 5)")
    make.add_argument("--seed", type=int, default=0, help="shuffle seed (default 0)")
    make.add_argument("--name", default="generated-cv", help="manifest name")
    make.add_argument("--out", help="write the manifest here instead of stdout")
    make.set_defaults(handler=_cmd_splits_make)

    aggregate = commands.add_parser("aggregate", help="mean±std of metrics across fold reports")
    aggregate.add_argument("reports", nargs="+", help="fold report files")
    aggregate.add_argument("--out", help="write the aggregate here instead of stdout")
    aggregate.set_defaults(handler=_cmd_aggregate)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles usage errors and --help itself
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(parser, args)
    except SystemExit as exc:  # parser.error() inside handlers
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
