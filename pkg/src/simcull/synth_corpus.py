"""Synthetic corpora with planted near-duplicates at known distances.

Base images are random binary block patterns rendered on the same
15x15 floor partition the fingerprinter uses, so every fingerprint tile
is constant and tile means are exact.  A planted duplicate shifts each
tile's channels toward the interior of [0, 255] by controlled offsets,
giving a closed-form difference score D that the matcher must hit
exactly.  Non-planted pairs are checked to exceed D = 300 at
generation time.

Plant kinds:
  offset   - per-channel offsets realizing an arbitrary target D
  copy     - byte-identical file copy (matches at threshold 100)
  reencode - same pixels, different bytes (never matches at 100)
"""

from __future__ import annotations

import csv
import math
import shutil
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image, PngImagePlugin

from .dataset_index import ClassLabel, SetTag
from .errors import SimcullError, UnachievableTarget
from .fingerprint import GRID, TILES, tile_bounds
from .matcher import kernels

MIN_BASE_DISTANCE = 300  # non-planted pairs must exceed this D


class PlantKind(Enum):
    OFFSET = "offset"
    COPY = "copy"
    REENCODE = "reencode"


@dataclass(frozen=True)
class DupSpec:
    base_index: int
    target_d: float = 0.0
    set_tag: SetTag = SetTag.TRAIN
    class_label: ClassLabel = ClassLabel.UNLABELLED
    kind: PlantKind = PlantKind.OFFSET


@dataclass
class PlantSpec:
    base_count: int
    dup_specs: list[DupSpec] = field(default_factory=list)
    image_size: tuple[int, int] = (75, 75)  # (W, H)
    seed: int = 0
    base_set_tag: SetTag = SetTag.TRAIN
    base_class: ClassLabel = ClassLabel.UNLABELLED
    base_overrides: dict = field(default_factory=dict)  # index -> (set, class)


@dataclass(frozen=True)
class TruthRow:
    first: str
    second: str
    analytic_d: float
    match_min_t: int
    match_max_t: int


@dataclass
class GeneratedCorpus:
    out_dir: str
    image_paths: list[str]  # relative to out_dir
    truth: list[TruthRow]
    truth_path: str


def _tile_offsets(target_d: float) -> np.ndarray:
    """(225, 3) per-channel offset magnitudes whose mean tile sum is as
    close to ``target_d`` as 1/225 granularity allows."""
    if not 0.0 <= target_d <= 765.0:
        raise UnachievableTarget(f"target D {target_d} outside [0, 765]")
    total = round(TILES * target_d)
    q, r = divmod(total, TILES)
    offsets = np.empty((TILES, 3), dtype=np.int64)
    for t in range(TILES):
        d = q + 1 if t < r else q
        c, rem = divmod(d, 3)
        offsets[t] = [c + (1 if k < rem else 0) for k in range(3)]
    if offsets.max() > 255:
        raise UnachievableTarget(f"target D {target_d} needs an offset > 255")
    return offsets


def _render(tiles: np.ndarray, width: int, height: int) -> np.ndarray:
    img = np.empty((height, width, 3), dtype=np.uint8)
    rows = tile_bounds(height)
    cols = tile_bounds(width)
    for j, (y0, y1) in enumerate(rows):
        for i, (x0, x1) in enumerate(cols):
            img[y0:y1, x0:x1] = tiles[j * GRID + i]
    return img


def _pair_d(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a.astype(np.int64) - b).sum()) / TILES


def _dest_dir(out_dir: Path, set_tag: SetTag, label: ClassLabel) -> Path:
    d = out_dir / set_tag.value
    if label is not ClassLabel.UNLABELLED:
        d = d / label.value
    return d


def generate(spec: PlantSpec, out_dir) -> GeneratedCorpus:
    """Write the corpus and its truth CSV; deterministic for a fixed seed."""
    width, height = spec.image_size
    if width < GRID or height < GRID:
        raise SimcullError(f"image size {width}x{height} below minimum {GRID}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    for dup in spec.dup_specs:
        if dup.kind is PlantKind.OFFSET:
            _tile_offsets(dup.target_d)  # validate range up front

    # only bases that host a plant need headroom beyond 300: their plant
    # sits at most target_d closer to every neighbor
    headroom: dict[int, float] = {}
    for dup in spec.dup_specs:
        headroom[dup.base_index] = max(headroom.get(dup.base_index, 0.0),
                                       dup.target_d)

    base_tiles = list(
        (rng.integers(0, 2, size=(spec.base_count, TILES, 3)) * 255)
        .astype(np.uint8))

    def fresh():
        return (rng.integers(0, 2, size=(TILES, 3)) * 255).astype(np.uint8)

    if spec.base_count >= 2:
        for _round in range(100):
            matrix = np.stack(base_tiles).reshape(spec.base_count, -1)
            dirty = set()
            _f, seconds, _s = kernels.scan_pairs(
                np.ascontiguousarray(matrix, np.int16),
                MIN_BASE_DISTANCE * TILES)
            dirty.update(seconds.tolist())
            wide = matrix.astype(np.int64)
            for parent, extra in headroom.items():
                limit = math.ceil((MIN_BASE_DISTANCE + extra) * TILES)
                diffs = np.abs(wide - wide[parent]).sum(axis=1)
                diffs[parent] = limit + 1
                for j in np.nonzero(diffs <= limit)[0].tolist():
                    dirty.add(j if j not in headroom else parent)
            if not dirty:
                break
            for j in sorted(dirty):
                base_tiles[j] = fresh()
        else:
            raise SimcullError("could not place base images far enough apart")

    image_paths = []
    base_paths = []
    for i, tiles in enumerate(base_tiles):
        set_tag, label = spec.base_overrides.get(
            i, (spec.base_set_tag, spec.base_class))
        d = _dest_dir(out_dir, set_tag, label)
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"base_{i:04d}.png"
        Image.fromarray(_render(tiles, width, height)).save(path)
        rel = str(path.relative_to(out_dir))
        base_paths.append(rel)
        image_paths.append(rel)

    truth = []
    dup_tiles_by_base: dict[int, list[tuple[str, np.ndarray]]] = {}
    for k, dup in enumerate(spec.dup_specs):
        if not 0 <= dup.base_index < spec.base_count:
            raise SimcullError(f"dup references unknown base {dup.base_index}")
        base = base_tiles[dup.base_index]
        d = _dest_dir(out_dir, dup.set_tag, dup.class_label)
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"dup_{k:03d}_b{dup.base_index:04d}.png"
        base_path = out_dir / base_paths[dup.base_index]

        if dup.kind is PlantKind.COPY:
            shutil.copyfile(base_path, path)
            tiles = base
            analytic_d = 0.0
            max_t = 100
        elif dup.kind is PlantKind.REENCODE:
            # identical pixels, different bytes: extra text chunk
            info = PngImagePlugin.PngInfo()
            info.add_text("comment", "reencoded plant")
            Image.fromarray(_render(base, width, height)).save(
                path, pnginfo=info)
            if path.read_bytes() == base_path.read_bytes():
                raise SimcullError("reencoded plant is byte-identical")
            tiles = base
            analytic_d = 0.0
            max_t = 99
        else:
            offsets = _tile_offsets(dup.target_d)
            direction = np.where(base < 128, 1, -1)
            tiles = (base.astype(np.int64) + direction * offsets).astype(np.uint8)
            Image.fromarray(_render(tiles, width, height)).save(path)
            analytic_d = float(np.abs(
                tiles.astype(np.int64) - base).sum()) / TILES
            max_t = min(99, math.floor(100 - analytic_d)) \
                if analytic_d <= 99 else 0

        rel = str(path.relative_to(out_dir))
        image_paths.append(rel)
        truth.append(TruthRow(
            first=base_paths[dup.base_index], second=rel,
            analytic_d=analytic_d,
            match_min_t=1 if max_t > 0 else 0, match_max_t=max_t))
        # a second plant on the same base forms an implied close pair
        for other_rel, other_tiles in dup_tiles_by_base.get(dup.base_index, []):
            implied_d = _pair_d(tiles, other_tiles)
            implied_max = 100 if implied_d == 0 else (
                min(99, math.floor(100 - implied_d)) if implied_d <= 99 else 0)
            truth.append(TruthRow(
                first=other_rel, second=rel, analytic_d=implied_d,
                match_min_t=1 if implied_max > 0 else 0,
                match_max_t=implied_max))
        dup_tiles_by_base.setdefault(dup.base_index, []).append((rel, tiles))

    _check_separation(base_tiles, dup_tiles_by_base, base_paths, spec)

    truth_path = out_dir / "truth.csv"
    with open(truth_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["first", "second", "analytic_D",
                         "match_min_T", "match_max_T"])
        for row in truth:
            writer.writerow([row.first, row.second, f"{row.analytic_d:.6f}",
                             row.match_min_t, row.match_max_t])

    return GeneratedCorpus(out_dir=str(out_dir), image_paths=image_paths,
                           truth=truth, truth_path=str(truth_path))


def _check_separation(base_tiles, dup_tiles_by_base, base_paths, spec):
    """Non-planted pairs must exceed the base separation distance."""
    families = list(range(len(base_tiles)))
    tiles = list(base_tiles)
    for bi, plants in dup_tiles_by_base.items():
        for _rel, t in plants:
            families.append(bi)
            tiles.append(t)
    if len(tiles) < 2:
        return
    matrix = np.ascontiguousarray(
        np.stack(tiles).reshape(len(tiles), -1), np.int16)
    firsts, seconds, _s = kernels.scan_pairs(matrix, MIN_BASE_DISTANCE * TILES)
    for i, j in zip(firsts.tolist(), seconds.tolist()):
        if families[i] != families[j]:  # planted pairs may be close
            raise SimcullError("generated corpus violates base separation; "
                               "regenerate with a new seed")


def read_truth_csv(path) -> list[TruthRow]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(TruthRow(
                first=row["first"], second=row["second"],
                analytic_d=float(row["analytic_D"]),
                match_min_t=int(row["match_min_T"]),
                match_max_t=int(row["match_max_T"])))
    return rows
