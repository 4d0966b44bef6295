"""Tile-average fingerprints and the on-disk fingerprint cache.

Each image is decoded to RGB and reduced to a 15x15 grid of per-tile
average colors plus a SHA-256 digest of the raw file bytes.  Tile
boundaries use the floor partition floor(k*N/15) so the 225 tiles cover
every pixel exactly once for any image at least 15 pixels on a side.
Channel means are rounded half-up to integers so fingerprints are
bit-stable in the cache.
"""

from __future__ import annotations

import hashlib
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset_index import DatasetIndex
from .errors import DecodeFailure, ImageTooSmall, ReadFailure

GRID = 15
TILES = GRID * GRID

CACHE_MAGIC = "simcull-cache v1"


@dataclass
class ImageFingerprint:
    entry_id: int
    width: int
    height: int
    tiles: np.ndarray  # (225, 3) uint8, row-major
    digest: str        # sha256 hex of raw file bytes

    def __eq__(self, other):
        return (isinstance(other, ImageFingerprint)
                and self.entry_id == other.entry_id
                and self.width == other.width
                and self.height == other.height
                and self.digest == other.digest
                and np.array_equal(self.tiles, other.tiles))


def tile_bounds(size: int) -> list[tuple[int, int]]:
    """Floor-partition of ``size`` pixels into 15 contiguous ranges."""
    return [(k * size // GRID, (k + 1) * size // GRID) for k in range(GRID)]


def compute_fingerprint(raster: np.ndarray) -> np.ndarray:
    """Reduce an (H, W, 3) uint8 raster to the (225, 3) tile-mean grid.

    Raises ImageTooSmall when either dimension is under 15 pixels.
    """
    h, w = raster.shape[:2]
    if h < GRID or w < GRID:
        raise ImageTooSmall(f"image is {w}x{h}; both sides must be >= {GRID}")
    rgb = np.ascontiguousarray(raster[:, :, :3], dtype=np.int64)

    # integral image gives exact integer tile sums in one pass
    acc = np.zeros((h + 1, w + 1, 3), dtype=np.int64)
    np.cumsum(np.cumsum(rgb, axis=0), axis=1, out=acc[1:, 1:])

    rows = tile_bounds(h)
    cols = tile_bounds(w)
    tiles = np.empty((TILES, 3), dtype=np.uint8)
    for j, (y0, y1) in enumerate(rows):
        for i, (x0, x1) in enumerate(cols):
            total = acc[y1, x1] - acc[y0, x1] - acc[y1, x0] + acc[y0, x0]
            count = (y1 - y0) * (x1 - x0)
            # integer half-up rounding of total/count
            tiles[j * GRID + i] = (2 * total + count) // (2 * count)
    return tiles


def content_digest(path) -> str:
    """SHA-256 of the raw file bytes (not the decoded pixels)."""
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    except OSError as exc:
        raise ReadFailure(f"cannot read {path}: {exc}") from exc


def fingerprint_file(path, entry_id: int = -1) -> ImageFingerprint:
    digest = content_digest(path)
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            raster = np.asarray(rgb, dtype=np.uint8)
    except ImageTooSmall:
        raise
    except Exception as exc:
        raise DecodeFailure(f"cannot decode {path}: {exc}") from exc
    tiles = compute_fingerprint(raster)
    return ImageFingerprint(entry_id=entry_id, width=raster.shape[1],
                            height=raster.shape[0], tiles=tiles, digest=digest)


class FingerprintCache:
    """Versioned text cache keyed by (path, byte_size, mtime).

    One record per line: path TAB size TAB mtime TAB width TAB height
    TAB digest TAB 675 space-separated channel integers.  Corrupt lines
    are dropped with a warning; an unknown version fails closed to a
    full recompute.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._records: dict[tuple[str, int, float], ImageFingerprint] = {}
        if self.path is not None and self.path.exists():
            self._load()

    def __len__(self):
        return len(self._records)

    def _load(self):
        with open(self.path, "r") as fh:
            header = fh.readline().rstrip("\n")
            if header != CACHE_MAGIC:
                print(f"simcull: ignoring cache with unknown version header "
                      f"{header!r}", file=sys.stderr)
                return
            for line in fh:
                try:
                    path, size, mtime, width, height, digest, blob = \
                        line.rstrip("\n").split("\t")
                    channels = np.array(blob.split(), dtype=np.int64)
                    if channels.shape != (TILES * 3,) or \
                            channels.min() < 0 or channels.max() > 255:
                        raise ValueError("bad tile payload")
                    fp = ImageFingerprint(
                        entry_id=-1, width=int(width), height=int(height),
                        tiles=channels.astype(np.uint8).reshape(TILES, 3),
                        digest=digest)
                    self._records[(path, int(size), float(mtime))] = fp
                except ValueError:
                    print("simcull: dropping corrupt cache line",
                          file=sys.stderr)

    def get(self, path: str, byte_size: int, mtime: float):
        return self._records.get((path, byte_size, mtime))

    def put(self, path: str, byte_size: int, mtime: float,
            fp: ImageFingerprint):
        self._records[(path, byte_size, mtime)] = fp

    def save(self):
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w") as fh:
            fh.write(CACHE_MAGIC + "\n")
            for (path, size, mtime), fp in sorted(self._records.items()):
                blob = " ".join(map(str, fp.tiles.reshape(-1).tolist()))
                fh.write(f"{path}\t{size}\t{mtime!r}\t{fp.width}\t"
                         f"{fp.height}\t{fp.digest}\t{blob}\n")


@dataclass
class FingerprintStats:
    hits: int = 0
    misses: int = 0
    decode_failures: int = 0
    failed_paths: list = field(default_factory=list)


def fingerprint_all(index: DatasetIndex, cache: FingerprintCache | None = None,
                    jobs: int = 1) -> tuple[list[ImageFingerprint], FingerprintStats]:
    """Fingerprint every index entry, serving unchanged files from cache.

    Results come back in canonical (index) order regardless of worker
    count.  Per-entry decode failures are collected into the stats and
    only fatal if nothing at all could be fingerprinted.
    """
    stats = FingerprintStats()

    def one(entry):
        if cache is not None:
            hit = cache.get(entry.path, entry.byte_size, entry.mtime)
            if hit is not None:
                return entry, hit, True, None
        try:
            fp = fingerprint_file(entry.path, entry.id)
        except (DecodeFailure, ImageTooSmall, ReadFailure) as exc:
            return entry, None, False, exc
        return entry, fp, False, None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, index.entries))
    else:
        results = [one(e) for e in index.entries]

    fps = []
    for entry, fp, was_hit, exc in results:
        if exc is not None:
            stats.decode_failures += 1
            stats.failed_paths.append(entry.path)
            continue
        fp = ImageFingerprint(entry_id=entry.id, width=fp.width,
                              height=fp.height, tiles=fp.tiles,
                              digest=fp.digest)
        if was_hit:
            stats.hits += 1
        else:
            stats.misses += 1
            if cache is not None:
                cache.put(entry.path, entry.byte_size, entry.mtime, fp)
        fps.append(fp)

    if index.entries and not fps:
        raise DecodeFailure("no entry could be fingerprinted")
    if cache is not None:
        cache.save()
    return fps, stats
