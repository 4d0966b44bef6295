# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: per-pair tile difference sums with early bail.

Semantics must stay in lockstep with _kernels_py; both are exercised by
the same equivalence tests.
"""

import numpy as np

cimport numpy as cnp

IMPLEMENTATION = "cython"

N_TILES = 225
N_CHANNELS = 675


def bounded_pair_sum(cnp.int16_t[::1] a, cnp.int16_t[::1] b, long long limit):
    """Accumulate |a-b| tile by tile, stopping once the running sum
    exceeds ``limit``.  Returns (sum_so_far, tiles_seen, bailed)."""
    cdef long long total = 0
    cdef int t, k, d
    cdef int tiles_seen = 0
    for t in range(225):
        for k in range(3):
            d = a[3 * t + k] - b[3 * t + k]
            if d < 0:
                d = -d
            total += d
        tiles_seen += 1
        if total > limit:
            return total, tiles_seen, True
    return total, tiles_seen, False


def scan_pairs(cnp.int16_t[:, ::1] tiles, long long limit):
    """All canonical pairs (i < j) whose full tile-difference sum is at
    most ``limit``, with their exact sums.  Early-bails per pair."""
    cdef Py_ssize_t n = tiles.shape[0]
    cdef list firsts = []
    cdef list seconds = []
    cdef list sums = []
    cdef Py_ssize_t i, j
    cdef long long total
    cdef int t, k, d
    cdef bint bailed
    for i in range(n):
        for j in range(i + 1, n):
            total = 0
            bailed = False
            for t in range(225):
                for k in range(3):
                    d = tiles[i, 3 * t + k] - tiles[j, 3 * t + k]
                    if d < 0:
                        d = -d
                    total += d
                if total > limit:
                    bailed = True
                    break
            if not bailed:
                firsts.append(i)
                seconds.append(j)
                sums.append(total)
    return (np.asarray(firsts, dtype=np.int64),
            np.asarray(seconds, dtype=np.int64),
            np.asarray(sums, dtype=np.int64))


def pair_sum(cnp.int16_t[::1] a, cnp.int16_t[::1] b):
    """Exact full tile-difference sum, no bail."""
    cdef long long total = 0
    cdef int k, d
    for k in range(675):
        d = a[k] - b[k]
        if d < 0:
            d = -d
        total += d
    return total
