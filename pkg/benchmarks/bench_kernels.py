#!/usr/bin/env python3
"""Benchmark the compiled pair-scan kernel against the numpy fallback.

Times a full pairwise scan (with early bail) over random fingerprints at
several thresholds, for both implementations, and verifies they agree.

Usage: python benchmarks/bench_kernels.py [--images N] [--seed S]
"""

import argparse
import time

import numpy as np

from simcull import _kernels_py
from simcull.fingerprint import TILES
from simcull.matcher import sum_budget

try:
    from simcull import _kernels
except ImportError:
    _kernels = None


def make_corpus(n, seed):
    rng = np.random.default_rng(seed)
    tiles = (rng.integers(0, 2, size=(n, TILES * 3)) * 255).astype(np.int16)
    # plant some near-duplicates so matches exist
    for k in range(max(1, n // 50)):
        src = rng.integers(0, n)
        dst = rng.integers(0, n)
        offset = int(rng.integers(1, 15))
        tiles[dst] = np.clip(tiles[src].astype(np.int64) + offset,
                             0, 255).astype(np.int16)
    return np.ascontiguousarray(tiles)


def bench(kernel, tiles, threshold, repeats=3):
    budget = sum_budget(threshold)
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = kernel.scan_pairs(tiles, budget)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--images", type=int, default=1500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    tiles = make_corpus(args.images, args.seed)
    n_pairs = args.images * (args.images - 1) // 2
    print(f"{args.images} fingerprints, {n_pairs} pairs per scan\n")
    print(f"{'threshold':>9}  {'python':>10}  {'cython':>10}  "
          f"{'speedup':>8}  matches")

    for threshold in (60, 80, 95, 100):
        t_py, r_py = bench(_kernels_py, tiles, threshold)
        line = f"{threshold:>9}  {t_py:>9.3f}s"
        if _kernels is not None:
            t_cy, r_cy = bench(_kernels, tiles, threshold)
            assert np.array_equal(r_py[0], r_cy[0])
            assert np.array_equal(r_py[2], r_cy[2])
            line += f"  {t_cy:>9.3f}s  {t_py / t_cy:>7.1f}x"
        else:
            line += f"  {'n/a':>10}  {'n/a':>8}"
        line += f"  {len(r_py[0])}"
        print(line)

    if _kernels is None:
        print("\ncompiled extension not available; built fallback only")


if __name__ == "__main__":
    main()
