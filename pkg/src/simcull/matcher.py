"""Pairwise similarity scoring and threshold matching.

The difference score D for a pair is the mean over the 225 tile
positions of |dR|+|dG|+|dB|, so D lies in [0, 765].  The user-facing
similarity is S = max(0, 100 - D) and a pair matches a threshold T
when S >= T, equivalently when the raw tile-difference sum is at most
225 * (100 - T).  At T = 100 an extra constraint applies: the two
files must be byte-identical (equal content digests).

The inner loop runs in the compiled extension when available; set
SIMCULL_NO_EXT=1 to force the pure-Python kernels.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset_index import ClassLabel, DatasetIndex, SetTag
from .errors import MalformedFingerprint
from .fingerprint import ImageFingerprint, TILES

if os.environ.get("SIMCULL_NO_EXT"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _kernels_py as kernels

KERNEL_IMPLEMENTATION = kernels.IMPLEMENTATION

DEFAULT_THRESHOLDS = (60, 65, 70, 75, 80, 85, 90, 95, 100)

MAX_SUM = 765 * TILES  # all-black vs all-white


class Scope(Enum):
    ALL = "all"
    CROSS_SET_ONLY = "cross-set"
    CROSS_CLASS_ONLY = "cross-class"


@dataclass(frozen=True)
class MatchRecord:
    first: int
    second: int
    score: float
    cross_set: bool
    cross_class: bool


def validate_threshold(value: int) -> int:
    value = int(value)
    if not 1 <= value <= 100:
        raise ValueError(f"threshold must be in [1, 100], got {value}")
    return value


def sum_budget(threshold: int) -> int:
    """Largest raw tile-difference sum that still matches ``threshold``."""
    return TILES * (100 - validate_threshold(threshold))


def _flat(fp: ImageFingerprint) -> np.ndarray:
    if fp.tiles.shape != (TILES, 3):
        raise MalformedFingerprint(
            f"entry {fp.entry_id}: expected {TILES} tiles, "
            f"got shape {fp.tiles.shape}")
    return np.ascontiguousarray(fp.tiles.reshape(-1), dtype=np.int16)


def tiles_matrix(fps: list[ImageFingerprint]) -> np.ndarray:
    return np.stack([_flat(fp) for fp in fps])


def score_from_sum(total: int) -> float:
    return max(0.0, 100.0 - total / TILES)


def tile_score(a: ImageFingerprint, b: ImageFingerprint) -> float:
    """Similarity S in [0, 100]; S(a,a) = 100 and S(a,b) = S(b,a) exactly."""
    return score_from_sum(kernels.pair_sum(_flat(a), _flat(b)))


def early_bail_score(a: ImageFingerprint, b: ImageFingerprint,
                     threshold: int) -> float | None:
    """Score if the pair matches at ``threshold``, else None.

    Accumulation stops as soon as the running sum exceeds the budget,
    so non-matching pairs cost only a prefix of the 225 tiles.
    """
    budget = sum_budget(threshold)
    total, _seen, bailed = kernels.bounded_pair_sum(_flat(a), _flat(b), budget)
    if bailed:
        return None
    return score_from_sum(total)


def _pair_flags(index: DatasetIndex, i: int, j: int) -> tuple[bool, bool]:
    a, b = index.by_id(i), index.by_id(j)
    cross_set = (a.set_tag is not SetTag.UNTAGGED
                 and b.set_tag is not SetTag.UNTAGGED
                 and a.set_tag is not b.set_tag)
    cross_class = (a.class_label is not ClassLabel.UNLABELLED
                   and b.class_label is not ClassLabel.UNLABELLED
                   and a.class_label is not b.class_label)
    return cross_set, cross_class


def match_pairs_multi(fps: list[ImageFingerprint], thresholds,
                      index: DatasetIndex,
                      scope: Scope = Scope.ALL) -> dict[int, list[MatchRecord]]:
    """Match sets for several thresholds from one pass over the pairs.

    The kernel scans at the loosest budget; tighter thresholds are exact
    subsets by their sums, which is the same result as scanning each
    threshold separately.
    """
    thresholds = [validate_threshold(t) for t in thresholds]
    if not fps:
        return {t: [] for t in thresholds}
    matrix = tiles_matrix(fps)
    budget = max(sum_budget(t) for t in thresholds)
    firsts, seconds, sums = kernels.scan_pairs(matrix, budget)

    ids = [fp.entry_id for fp in fps]
    digests = [fp.digest for fp in fps]
    out: dict[int, list[MatchRecord]] = {t: [] for t in thresholds}
    candidates = []
    for i, j, total in zip(firsts.tolist(), seconds.tolist(), sums.tolist()):
        a, b = ids[i], ids[j]
        if a > b:
            a, b = b, a
        cross_set, cross_class = _pair_flags(index, a, b)
        if scope is Scope.CROSS_SET_ONLY and not cross_set:
            continue
        if scope is Scope.CROSS_CLASS_ONLY and not cross_class:
            continue
        candidates.append((a, b, total, digests[i] == digests[j],
                           cross_set, cross_class))
    candidates.sort(key=lambda c: (c[0], c[1]))

    for t in thresholds:
        limit = sum_budget(t)
        for a, b, total, same_digest, cross_set, cross_class in candidates:
            if total > limit:
                continue
            if t == 100 and not same_digest:
                continue
            out[t].append(MatchRecord(first=a, second=b,
                                      score=score_from_sum(total),
                                      cross_set=cross_set,
                                      cross_class=cross_class))
    return out


def match_pairs(fps: list[ImageFingerprint], threshold: int,
                index: DatasetIndex,
                scope: Scope = Scope.ALL) -> list[MatchRecord]:
    """Canonical (first < second) matches at one threshold, sorted."""
    return match_pairs_multi(fps, [threshold], index, scope)[threshold]


def write_match_csv(records: list[MatchRecord], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["first", "second", "score", "cross_set", "cross_class"])
        for r in records:
            writer.writerow([r.first, r.second, f"{r.score:.3f}",
                             str(r.cross_set).lower(), str(r.cross_class).lower()])


def read_match_csv(path) -> list[MatchRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(MatchRecord(
                first=int(row["first"]), second=int(row["second"]),
                score=float(row["score"]),
                cross_set=row["cross_set"] == "true",
                cross_class=row["cross_class"] == "true"))
    return records
