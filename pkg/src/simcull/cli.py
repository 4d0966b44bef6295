"""Command-line pipeline: fingerprint, match, group, curate, verify,
sweep, interclass, report, sample.

Exit codes: 0 success, 1 operational failure, 2 usage error,
3 verification FAIL.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, curation, grouping, matcher
from .dataset_index import (JoinReport, ScanReport, SetTag, attach_labels,
                            build_index, load_labels, merge_indexes)
from .errors import SimcullError
from .fingerprint import FingerprintCache, fingerprint_all

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_VERIFY_FAIL = 3


def _parse_thresholds(text: str) -> list[int]:
    return [matcher.validate_threshold(t) for t in text.split(",") if t]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simcull",
        description="Near-duplicate image detection and dataset curation")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, train=True, test=False, labels=False, cache=True):
        if train:
            p.add_argument("--train", required=True, help="training image root")
        if test:
            p.add_argument("--test", help="test image root")
        if labels:
            p.add_argument("--labels", help="ground-truth label CSV")
        if cache:
            p.add_argument("--cache", help="fingerprint cache file")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--dry-run", action="store_true")

    p = sub.add_parser("fingerprint", help="compute/cache fingerprints")
    add_common(p, test=True)

    p = sub.add_parser("match", help="pairwise matches at one threshold")
    add_common(p, test=True, labels=True)
    p.add_argument("--threshold", type=int, required=True)
    p.add_argument("--scope", choices=[s.value for s in matcher.Scope],
                   default="all")
    p.add_argument("--out", required=True, help="match CSV path")

    p = sub.add_parser("group", help="group matches into components")
    add_common(p, labels=True)
    p.add_argument("--matches", required=True, help="match CSV from `match`")
    p.add_argument("--out", required=True, help="group CSV path")

    p = sub.add_parser("curate", help="match, group, plan, apply, verify")
    add_common(p, labels=True)
    p.add_argument("--threshold", type=int, required=True)
    p.add_argument("--dest", required=True, help="curated output directory")
    p.add_argument("--out", help="directory for manifest/group CSVs "
                                 "(default: alongside dest)")
    p.add_argument("--mode", choices=["copy", "link"], default="copy")

    p = sub.add_parser("verify", help="check a curated dest vs its manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--dest", required=True)
    p.add_argument("--labels")
    p.add_argument("--dry-run", action="store_true")

    p = sub.add_parser("sweep", help="threshold sweep summary tables")
    add_common(p, test=True)
    p.add_argument("--thresholds", default=",".join(
        map(str, matcher.DEFAULT_THRESHOLDS)))
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--format", choices=["csv", "markdown", "both"],
                   default="both")

    p = sub.add_parser("interclass", help="cross-class similarity tables")
    add_common(p, labels=True)
    p.add_argument("--thresholds", default=",".join(
        map(str, matcher.DEFAULT_THRESHOLDS)))
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "markdown", "both"],
                   default="both")

    p = sub.add_parser("report", help="re-render markdown from report CSVs")
    p.add_argument("--sweep", help="sweep CSV")
    p.add_argument("--removal", help="removal CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--dry-run", action="store_true")

    p = sub.add_parser("sample", help="deterministic spot-check sample")
    p.add_argument("--dest", required=True)
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dry-run", action="store_true")

    return parser


def _load_indexed(args, need_test=False):
    """Build (index, fingerprints) honoring --labels and --cache."""
    scan = ScanReport()
    train = build_index(args.train, SetTag.TRAIN, scan)
    index = train
    if need_test and getattr(args, "test", None):
        test = build_index(args.test, SetTag.TEST, scan)
        index = merge_indexes(train, test)
    if getattr(args, "labels", None):
        join = JoinReport()
        index = attach_labels(index, load_labels(args.labels),
                              args.labels, join)
        if join.unmatched_labels:
            print(f"simcull: {len(join.unmatched_labels)} label rows "
                  f"matched no file", file=sys.stderr)
    if scan.skipped:
        print(f"simcull: skipped {scan.skipped} non-image files",
              file=sys.stderr)
    if not index.entries:
        print("simcull: warning: no images found", file=sys.stderr)
    cache = FingerprintCache(args.cache) if getattr(args, "cache", None) else None
    fps, stats = fingerprint_all(index, cache, args.jobs)
    if stats.decode_failures:
        print(f"simcull: {stats.decode_failures} files failed to decode",
              file=sys.stderr)
    return index, fps, stats


def _cmd_fingerprint(args):
    _index, fps, stats = _load_indexed(args, need_test=True)
    print(f"fingerprinted {len(fps)} images "
          f"(hits={stats.hits} misses={stats.misses} "
          f"failures={stats.decode_failures})")
    return EXIT_OK


def _cmd_match(args):
    index, fps, _ = _load_indexed(args, need_test=True)
    records = matcher.match_pairs(fps, args.threshold, index,
                                  matcher.Scope(args.scope))
    if args.dry_run:
        print(f"{len(records)} matches at threshold {args.threshold} "
              f"(dry run, nothing written)")
        return EXIT_OK
    matcher.write_match_csv(records, args.out)
    print(f"{len(records)} matches at threshold {args.threshold} "
          f"-> {args.out}")
    return EXIT_OK


def _cmd_group(args):
    index, _fps, _ = _load_indexed(args)
    records = matcher.read_match_csv(args.matches)
    groups = grouping.build_groups(records)
    stats = grouping.group_stats(groups)
    if args.dry_run:
        print(f"{stats.group_count} groups, "
              f"{stats.similar_image_count} similar images (dry run)")
        return EXIT_OK
    grouping.write_group_csv(groups, index, args.out, root=args.train)
    print(f"{stats.group_count} groups, "
          f"{stats.similar_image_count} similar images -> {args.out}")
    return EXIT_OK


def _cmd_curate(args):
    index, fps, _ = _load_indexed(args)
    records = matcher.match_pairs(fps, args.threshold, index)
    groups = grouping.build_groups(records)
    manifest = curation.plan_curation(groups, index, args.threshold,
                                      args.train)
    if args.dry_run:
        print(f"would keep {manifest.remaining} of {manifest.total_images} "
              f"images at threshold {args.threshold} (dry run)")
        return EXIT_OK

    out_dir = Path(args.out) if args.out else Path(args.dest).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / f"manifest_t{args.threshold}.csv"
    group_path = out_dir / f"groups_t{args.threshold}.csv"
    curation.write_manifest_csv(manifest, manifest_path)
    grouping.write_group_csv(groups, index, group_path, root=args.train)
    labels = load_labels(args.labels) if args.labels else {}
    if labels:
        curation.merge_labels_csv(
            group_path, labels, out_dir / f"groups_labeled_t{args.threshold}.csv")

    curation.apply_curation(manifest, args.train, args.dest, args.mode)
    report = curation.verify_curation(manifest, args.dest, labels or None)
    print(report.summary_line())
    if not report.passed:
        for v in report.violations:
            print(f"  {v.category}: {v.detail}", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    print(f"curated {manifest.remaining} images -> {args.dest} "
          f"(manifest: {manifest_path})")
    return EXIT_OK


def _cmd_verify(args):
    dest_total = len(curation.scan_images(args.dest, report=ScanReport())) \
        if Path(args.dest).is_dir() else 0
    manifest = curation.read_manifest_csv(args.manifest)
    # reconstruct totals from the dest plus the manifest's removals
    manifest.total_images = dest_total + manifest.removed
    manifest.remaining = dest_total
    labels = load_labels(args.labels) if args.labels else None
    report = curation.verify_curation(manifest, args.dest, labels)
    print(report.summary_line())
    for v in report.violations:
        print(f"  {v.category}: {v.detail}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def _cmd_sweep(args):
    scan = ScanReport()
    train = build_index(args.train, SetTag.TRAIN, scan)
    test = build_index(args.test, SetTag.TEST, scan) if args.test else \
        type(train)(entries=[])
    thresholds = _parse_thresholds(args.thresholds)
    if args.dry_run:
        print(f"would sweep {len(thresholds)} thresholds over "
              f"{len(train)} train / {len(test)} test images (dry run)")
        return EXIT_OK
    cache = FingerprintCache(args.cache) if args.cache else None
    sweep = analysis.threshold_sweep(train, test, thresholds, cache,
                                     args.jobs)
    removal = analysis.removal_table(sweep, len(train))
    formats = ("csv", "markdown") if args.format == "both" else (args.format,)
    written = analysis.render_report(args.out, sweep=sweep, removal=removal,
                                     formats=formats)
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_interclass(args):
    index, fps, _ = _load_indexed(args)
    thresholds = _parse_thresholds(args.thresholds)
    if args.dry_run:
        print(f"would analyse {len(thresholds)} thresholds over "
              f"{len(index)} images (dry run)")
        return EXIT_OK
    summary = analysis.interclass_analysis(index, fps, thresholds)
    formats = ("csv", "markdown") if args.format == "both" else (args.format,)
    written = analysis.render_report(args.out, interclass=summary,
                                     formats=formats)
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_report(args):
    import csv as _csv
    sweep = removal = None
    if args.sweep:
        with open(args.sweep, newline="") as fh:
            sweep = analysis.SweepSummary(rows=[
                analysis.SweepRow(int(r["threshold"]), int(r["train"]),
                                  int(r["test"]), int(r["combined"]))
                for r in _csv.DictReader(fh)])
    if args.removal:
        with open(args.removal, newline="") as fh:
            removal = [analysis.RemovalRow(int(r["threshold"]),
                                           int(r["removed"]),
                                           int(r["remaining"]))
                       for r in _csv.DictReader(fh)]
    if args.dry_run:
        print("would render markdown reports (dry run)")
        return EXIT_OK
    written = analysis.render_report(args.out, sweep=sweep, removal=removal,
                                     formats=("markdown",))
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_sample(args):
    names = curation.sample_spotcheck(args.dest, args.count, args.seed)
    for name in names:
        print(name)
    return EXIT_OK


_DISPATCH = {
    "fingerprint": _cmd_fingerprint,
    "match": _cmd_match,
    "group": _cmd_group,
    "curate": _cmd_curate,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
    "interclass": _cmd_interclass,
    "report": _cmd_report,
    "sample": _cmd_sample,
}


def run(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except SimcullError as exc:
        print(f"simcull: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
