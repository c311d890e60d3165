# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled nearest-neighbour search and divergence tracking.

The search sorts the reference points along the first coordinate and sweeps
outward from each point, stopping once the gap in that coordinate alone
exceeds the best distance found. Partial sums are abandoned as soon as they
exceed the current best.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, INFINITY

cnp.import_array()


def nearest_neighbours(emb, Py_ssize_t n_ref, Py_ssize_t theiler):
    cdef double[:, ::1] x = np.ascontiguousarray(emb[:n_ref], dtype=np.float64)
    cdef Py_ssize_t m = x.shape[1]
    cdef cnp.int64_t[::1] order = np.argsort(np.asarray(x[:, 0]), kind="stable").astype(np.int64)
    cdef double[::1] key = np.ascontiguousarray(np.asarray(x[:, 0])[np.asarray(order)])
    cdef cnp.int64_t[::1] out = np.full(n_ref, -1, dtype=np.int64)
    cdef Py_ssize_t s, t, i, j, c, best_j, direction
    cdef double best, acc, diff, gap

    for s in range(n_ref):
        i = order[s]
        best = INFINITY
        best_j = -1
        for direction in range(2):
            t = s + 1 if direction == 0 else s - 1
            while 0 <= t < n_ref:
                gap = key[t] - key[s]
                if gap * gap > best:
                    break
                j = order[t]
                if (i - j > theiler) or (j - i > theiler):
                    acc = 0.0
                    for c in range(m):
                        diff = x[i, c] - x[j, c]
                        acc += diff * diff
                        if acc > best:
                            break
                    if acc < best or (acc == best and j < best_j):
                        best = acc
                        best_j = j
                t = t + 1 if direction == 0 else t - 1
        out[i] = best_j
    return np.asarray(out)


def divergence_curve(emb, nn, Py_ssize_t horizon, double floor=0.0):
    cdef double[:, ::1] x = np.ascontiguousarray(emb, dtype=np.float64)
    cdef cnp.int64_t[::1] pair = np.ascontiguousarray(nn, dtype=np.int64)
    cdef Py_ssize_t n_ref = pair.shape[0]
    cdef Py_ssize_t m = x.shape[1]
    cdef double[::1] total = np.zeros(horizon)
    cdef cnp.int64_t[::1] count = np.zeros(horizon, dtype=np.int64)
    cdef Py_ssize_t i, j, k, c
    cdef double acc, diff, dist

    for k in range(horizon):
        for i in range(n_ref):
            j = pair[i]
            if j < 0:
                continue
            acc = 0.0
            for c in range(m):
                diff = x[i + k, c] - x[j + k, c]
                acc += diff * diff
            if acc > 0:
                dist = sqrt(acc)
                if dist < floor:
                    dist = floor
                total[k] += log(dist)
                count[k] += 1
    curve = np.full(horizon, np.nan)
    for k in range(horizon):
        if count[k] > 0:
            curve[k] = total[k] / count[k]
    return curve
