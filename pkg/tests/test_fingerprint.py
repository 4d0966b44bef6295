import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simcull.errors import DecodeFailure, ImageTooSmall
from simcull.fingerprint import (CACHE_MAGIC, FingerprintCache, GRID, TILES,
                                 compute_fingerprint, content_digest,
                                 fingerprint_all, fingerprint_file,
                                 tile_bounds)
from simcull.dataset_index import SetTag, build_index

from conftest import solid_image, write_image


def oracle_tiles(raster):
    """Brute-force per-pixel tile means, rounded half-up."""
    h, w = raster.shape[:2]
    out = np.empty((TILES, 3), dtype=np.int64)
    for j in range(GRID):
        y0, y1 = j * h // GRID, (j + 1) * h // GRID
        for i in range(GRID):
            x0, x1 = i * w // GRID, (i + 1) * w // GRID
            for c in range(3):
                total = 0
                count = 0
                for y in range(y0, y1):
                    for x in range(x0, x1):
                        total += int(raster[y, x, c])
                        count += 1
                # floor(mean + 0.5) in exact integer arithmetic
                out[j * GRID + i, c] = (2 * total + count) // (2 * count)
    return out


def oracle_tiles_fast(raster):
    """Same oracle, but with numpy means per tile (still per-rectangle)."""
    h, w = raster.shape[:2]
    out = np.empty((TILES, 3), dtype=np.int64)
    for j in range(GRID):
        y0, y1 = j * h // GRID, (j + 1) * h // GRID
        for i in range(GRID):
            x0, x1 = i * w // GRID, (i + 1) * w // GRID
            block = raster[y0:y1, x0:x1].astype(np.int64)
            sums = block.sum(axis=(0, 1))
            count = block.shape[0] * block.shape[1]
            out[j * GRID + i] = (2 * sums + count) // (2 * count)
    return out


def test_uniform_gray_tiles():
    arr = np.full((224, 224, 3), 128, dtype=np.uint8)
    tiles = compute_fingerprint(arr)
    assert tiles.shape == (TILES, 3)
    assert np.all(tiles == 128)


def test_minimal_15x15_black():
    arr = np.zeros((15, 15, 3), dtype=np.uint8)
    tiles = compute_fingerprint(arr)
    assert np.all(tiles == 0)


def test_half_black_half_white_straddle():
    arr = np.zeros((224, 224, 3), dtype=np.uint8)
    arr[:, 112:] = 255
    tiles = compute_fingerprint(arr).reshape(GRID, GRID, 3)
    cols = tile_bounds(224)
    for i, (x0, x1) in enumerate(cols):
        if x1 <= 112:
            assert np.all(tiles[:, i] == 0)
        elif x0 >= 112:
            assert np.all(tiles[:, i] == 255)
        else:
            white = x1 - 112
            count = x1 - x0
            expect = (2 * 255 * white + count) // (2 * count)
            assert np.all(tiles[:, i] == expect)


def test_matches_brute_force_oracle(rng):
    for _ in range(8):
        h = int(rng.integers(15, 60))
        w = int(rng.integers(15, 60))
        raster = rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)
        assert np.array_equal(compute_fingerprint(raster),
                              oracle_tiles(raster))


def test_matches_fast_oracle_many(rng):
    for _ in range(50):
        h = int(rng.integers(15, 200))
        w = int(rng.integers(15, 200))
        raster = rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)
        assert np.array_equal(compute_fingerprint(raster),
                              oracle_tiles_fast(raster))


@given(st.integers(min_value=15, max_value=2048))
def test_tile_partition_covers_everything(size):
    bounds = tile_bounds(size)
    assert bounds[0][0] == 0
    assert bounds[-1][1] == size
    for (a0, a1), (b0, b1) in zip(bounds, bounds[1:]):
        assert a1 == b0
        assert a1 > a0
    assert sum(b1 - b0 for b0, b1 in bounds) == size


@settings(max_examples=60)
@given(st.integers(min_value=15, max_value=512),
       st.integers(min_value=15, max_value=512))
def test_partition_pixel_count(width, height):
    total = sum((y1 - y0) * (x1 - x0)
                for y0, y1 in tile_bounds(height)
                for x0, x1 in tile_bounds(width))
    assert total == width * height


def test_too_small_rejected():
    with pytest.raises(ImageTooSmall):
        compute_fingerprint(np.zeros((14, 100, 3), dtype=np.uint8))
    with pytest.raises(ImageTooSmall):
        compute_fingerprint(np.zeros((100, 14, 3), dtype=np.uint8))


def test_content_digest(tmp_path):
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    a.write_bytes(b"hello")
    b.write_bytes(b"hello")
    assert content_digest(a) == content_digest(b)
    assert content_digest(a) == hashlib.sha256(b"hello").hexdigest()
    empty = tmp_path / "empty.bin"
    empty.write_bytes(b"")
    assert content_digest(empty) == hashlib.sha256(b"").hexdigest()


def test_digest_is_byte_level(tmp_path, rng):
    arr = rng.integers(0, 256, size=(30, 30, 3)).astype(np.uint8)
    from PIL import Image
    p1 = tmp_path / "one.png"
    p2 = tmp_path / "two.png"
    Image.fromarray(arr).save(p1, compress_level=1)
    Image.fromarray(arr).save(p2, compress_level=9)
    fp1 = fingerprint_file(p1)
    fp2 = fingerprint_file(p2)
    assert np.array_equal(fp1.tiles, fp2.tiles)
    if p1.read_bytes() != p2.read_bytes():
        assert fp1.digest != fp2.digest


def test_decode_failure(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"this is not a png")
    with pytest.raises(DecodeFailure):
        fingerprint_file(bad)


class TestCache:
    def _corpus(self, tmp_path, rng, n=10):
        root = tmp_path / "imgs"
        for i in range(n):
            arr = rng.integers(0, 256, size=(20, 20, 3)).astype(np.uint8)
            write_image(root / f"img_{i:02d}.png", arr)
        return build_index(root, SetTag.TRAIN)

    def test_cold_then_warm(self, tmp_path, rng):
        index = self._corpus(tmp_path, rng)
        cache_path = tmp_path / "cache.v1"
        cache = FingerprintCache(cache_path)
        fps1, stats1 = fingerprint_all(index, cache)
        assert (stats1.hits, stats1.misses) == (0, 10)
        assert cache_path.exists()

        cache2 = FingerprintCache(cache_path)
        assert len(cache2) == 10
        fps2, stats2 = fingerprint_all(index, cache2)
        assert (stats2.hits, stats2.misses) == (10, 0)
        assert fps1 == fps2

    def test_touched_file_recomputed(self, tmp_path, rng):
        import os
        index = self._corpus(tmp_path, rng)
        cache_path = tmp_path / "cache.v1"
        fingerprint_all(index, FingerprintCache(cache_path))

        victim = index.by_id(3).path
        os.utime(victim, (1e9, 1e9))
        index2 = build_index(tmp_path / "imgs", SetTag.TRAIN)
        fps2, stats2 = fingerprint_all(index2, FingerprintCache(cache_path))
        assert (stats2.hits, stats2.misses) == (9, 1)
        expect = fingerprint_file(victim)
        got = [fp for fp in fps2 if fp.entry_id == 3][0]
        assert np.array_equal(got.tiles, expect.tiles)

    def test_unknown_version_fails_closed(self, tmp_path, rng):
        index = self._corpus(tmp_path, rng, n=3)
        cache_path = tmp_path / "cache.v1"
        fingerprint_all(index, FingerprintCache(cache_path))
        body = cache_path.read_text().splitlines()
        body[0] = "simcull-cache v999"
        cache_path.write_text("\n".join(body) + "\n")
        cache = FingerprintCache(cache_path)
        assert len(cache) == 0
        _fps, stats = fingerprint_all(index, cache)
        assert stats.misses == 3

    def test_corrupt_line_dropped(self, tmp_path, rng):
        index = self._corpus(tmp_path, rng, n=3)
        cache_path = tmp_path / "cache.v1"
        fingerprint_all(index, FingerprintCache(cache_path))
        with open(cache_path, "a") as fh:
            fh.write("garbage line without tabs\n")
        cache = FingerprintCache(cache_path)
        assert len(cache) == 3

    def test_parallel_matches_serial(self, tmp_path, rng):
        index = self._corpus(tmp_path, rng, n=12)
        fps1, _ = fingerprint_all(index, None, jobs=1)
        fps4, _ = fingerprint_all(index, None, jobs=4)
        assert fps1 == fps4

    def test_cache_header(self, tmp_path, rng):
        index = self._corpus(tmp_path, rng, n=1)
        cache_path = tmp_path / "cache.v1"
        fingerprint_all(index, FingerprintCache(cache_path))
        first = cache_path.read_text().splitlines()[0]
        assert first == CACHE_MAGIC == "simcull-cache v1"


def test_byte_identical_copies_equal(tmp_path):
    import shutil
    p1 = solid_image(tmp_path / "a.png", 30, 30, (10, 200, 30))
    p2 = tmp_path / "b.png"
    shutil.copyfile(p1, p2)
    fp1 = fingerprint_file(p1)
    fp2 = fingerprint_file(p2)
    assert fp1.digest == fp2.digest
    assert np.array_equal(fp1.tiles, fp2.tiles)
