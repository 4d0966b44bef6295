"""Pure numpy fallback for the compiled pair-scoring kernels.

Kept result-identical to _kernels.pyx: scan_pairs returns exactly the
pairs whose full difference sum is within the limit, and
bounded_pair_sum reports the same tiles_seen as the compiled bail loop.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"

N_TILES = 225
N_CHANNELS = 675


def bounded_pair_sum(a, b, limit):
    """Accumulate |a-b| tile by tile, stopping once the running sum
    exceeds ``limit``.  Returns (sum_so_far, tiles_seen, bailed)."""
    per_tile = np.abs(a.astype(np.int64) - b).reshape(N_TILES, 3).sum(axis=1)
    running = np.cumsum(per_tile)
    over = np.nonzero(running > limit)[0]
    if over.size:
        stop = int(over[0])
        return int(running[stop]), stop + 1, True
    return int(running[-1]), N_TILES, False


def scan_pairs(tiles, limit):
    """All canonical pairs (i < j) whose full tile-difference sum is at
    most ``limit``, with their exact sums."""
    n = tiles.shape[0]
    wide = tiles.astype(np.int32)
    firsts, seconds, sums = [], [], []
    for i in range(n - 1):
        totals = np.abs(wide[i + 1:] - wide[i]).sum(axis=1, dtype=np.int64)
        hits = np.nonzero(totals <= limit)[0]
        for h in hits:
            firsts.append(i)
            seconds.append(i + 1 + int(h))
            sums.append(int(totals[h]))
    return (np.asarray(firsts, dtype=np.int64),
            np.asarray(seconds, dtype=np.int64),
            np.asarray(sums, dtype=np.int64))


def pair_sum(a, b):
    """Exact full tile-difference sum, no bail."""
    return int(np.abs(a.astype(np.int64) - b).sum())
