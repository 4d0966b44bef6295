"""Threshold sweeps and summary tables.

Counts use the "duplicates beyond first" semantics: for each threshold
the reported number is the sum over similarity groups of (size - 1),
which is exactly how many images a keep-first curation pass removes.
The combined column is an independent pass over the union of train and
test, so it need not equal the per-set sum when cross-set matches merge
groups.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .dataset_index import ClassLabel, DatasetIndex, merge_indexes
from .errors import UnknownClass, WriteFailure
from .fingerprint import FingerprintCache, ImageFingerprint, fingerprint_all
from .grouping import build_groups, group_stats
from .matcher import DEFAULT_THRESHOLDS, Scope, match_pairs_multi


@dataclass(frozen=True)
class SweepRow:
    threshold: int
    train_count: int
    test_count: int
    combined_count: int


@dataclass
class SweepSummary:
    rows: list[SweepRow] = field(default_factory=list)


@dataclass(frozen=True)
class InterClassRow:
    class_a: str
    class_b: str
    threshold: int
    pair_count: int
    images_involved: int
    similar_image_count: int


@dataclass
class InterClassSummary:
    rows: list[InterClassRow] = field(default_factory=list)


def _remap(fps: list[ImageFingerprint], src: DatasetIndex,
           dst: DatasetIndex) -> list[ImageFingerprint]:
    """Reuse fingerprints under a merged index's fresh entry ids."""
    by_path = {src.by_id(fp.entry_id).path: fp for fp in fps}
    out = []
    for e in dst.entries:
        fp = by_path.get(e.path)
        if fp is not None:
            out.append(ImageFingerprint(entry_id=e.id, width=fp.width,
                                        height=fp.height, tiles=fp.tiles,
                                        digest=fp.digest))
    return out


def _counts_per_threshold(fps, thresholds, index) -> dict[int, int]:
    by_t = match_pairs_multi(fps, thresholds, index, Scope.ALL)
    return {t: group_stats(build_groups(ms)).similar_image_count
            for t, ms in by_t.items()}


def threshold_sweep(train_index: DatasetIndex, test_index: DatasetIndex,
                    thresholds=DEFAULT_THRESHOLDS,
                    cache: FingerprintCache | None = None,
                    jobs: int = 1) -> SweepSummary:
    """Per-threshold similar-image counts for train, test, and the union.

    Fingerprints are computed once per set and reused across every
    threshold and the combined pass.  Rows come back ordered from the
    highest threshold down.
    """
    fps_train, _ = fingerprint_all(train_index, cache, jobs)
    fps_test, _ = fingerprint_all(test_index, cache, jobs)
    combined = merge_indexes(train_index, test_index)
    fps_combined = (_remap(fps_train, train_index, combined)
                    + _remap(fps_test, test_index, combined))
    fps_combined.sort(key=lambda fp: fp.entry_id)

    thresholds = sorted(set(int(t) for t in thresholds), reverse=True)
    train_counts = _counts_per_threshold(fps_train, thresholds, train_index)
    test_counts = _counts_per_threshold(fps_test, thresholds, test_index)
    combined_counts = _counts_per_threshold(fps_combined, thresholds, combined)

    return SweepSummary(rows=[
        SweepRow(threshold=t, train_count=train_counts[t],
                 test_count=test_counts[t], combined_count=combined_counts[t])
        for t in thresholds])


@dataclass(frozen=True)
class RemovalRow:
    threshold: int
    removed: int
    remaining: int


def removal_table(sweep: SweepSummary, total_train: int) -> list[RemovalRow]:
    """Removed/remaining per threshold; removed + remaining = total."""
    return [RemovalRow(threshold=r.threshold, removed=r.train_count,
                       remaining=total_train - r.train_count)
            for r in sweep.rows]


def interclass_analysis(index: DatasetIndex, fps: list[ImageFingerprint],
                        thresholds=DEFAULT_THRESHOLDS,
                        class_pairs=None) -> InterClassSummary:
    """Cross-class match statistics per class pair and threshold.

    Reports pair counts, images involved, and removable-image counts
    side by side since the paper-style "(N images)" unit is ambiguous.
    """
    real_classes = [c for c in ClassLabel if c is not ClassLabel.UNLABELLED]
    if class_pairs is None:
        class_pairs = [(a, b) for i, a in enumerate(real_classes)
                       for b in real_classes[i + 1:]]
    for a, b in class_pairs:
        if a not in real_classes or b not in real_classes:
            raise UnknownClass(f"bad class pair: {a}, {b}")
        if a is b:
            raise UnknownClass(f"class pair members must differ: {a}")

    thresholds = sorted(set(int(t) for t in thresholds), reverse=True)
    by_t = match_pairs_multi(fps, thresholds, index, Scope.CROSS_CLASS_ONLY)

    rows = []
    for a, b in class_pairs:
        if a.value > b.value:
            a, b = b, a
        wanted = {a, b}
        for t in thresholds:
            restricted = [
                m for m in by_t[t]
                if {index.by_id(m.first).class_label,
                    index.by_id(m.second).class_label} == wanted]
            stats = group_stats(build_groups(restricted))
            rows.append(InterClassRow(
                class_a=a.value, class_b=b.value, threshold=t,
                pair_count=len(restricted),
                images_involved=stats.images_involved,
                similar_image_count=stats.similar_image_count))
    return InterClassSummary(rows=rows)


def _write_table(path, header, rows, fmt):
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
        else:
            with open(path, "w") as fh:
                fh.write("| " + " | ".join(header) + " |\n")
                fh.write("|" + "|".join(["---"] * len(header)) + "|\n")
                for row in rows:
                    fh.write("| " + " | ".join(str(c) for c in row) + " |\n")
    except OSError as exc:
        raise WriteFailure(f"cannot write {path}: {exc}") from exc


def render_report(out_dir, sweep: SweepSummary | None = None,
                  removal: list[RemovalRow] | None = None,
                  interclass: InterClassSummary | None = None,
                  formats=("csv", "markdown")) -> list[str]:
    """Write the summary tables; byte-deterministic for equal inputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    ext = {"csv": "csv", "markdown": "md"}
    for fmt in formats:
        if sweep is not None:
            path = out_dir / f"sweep.{ext[fmt]}"
            _write_table(path, ["threshold", "train", "test", "combined"],
                         [(r.threshold, r.train_count, r.test_count,
                           r.combined_count) for r in sweep.rows], fmt)
            written.append(str(path))
        if removal is not None:
            path = out_dir / f"removal.{ext[fmt]}"
            _write_table(path, ["threshold", "removed", "remaining"],
                         [(r.threshold, r.removed, r.remaining)
                          for r in removal], fmt)
            written.append(str(path))
        if interclass is not None:
            path = out_dir / f"interclass.{ext[fmt]}"
            _write_table(path, ["class_a", "class_b", "threshold",
                                "pair_count", "images_involved",
                                "similar_images"],
                         [(r.class_a, r.class_b, r.threshold, r.pair_count,
                           r.images_involved, r.similar_image_count)
                          for r in interclass.rows], fmt)
            written.append(str(path))
    return written
