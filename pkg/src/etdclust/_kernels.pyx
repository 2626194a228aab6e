# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the pairwise distance and first-layer partition loops.

Every routine here has a numpy twin in :mod:`etdclust._kernels_py` that must
return bit-identical output. Keep the floating-point operation order in sync.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def etd_rows(const double[:, :, ::1] values, double[:, ::1] out,
             Py_ssize_t start, Py_ssize_t stop):
    """Fill rows ``start:stop`` of the upper triangle of ``out`` (and mirror)."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t T = values.shape[1]
    cdef Py_ssize_t p = values.shape[2]
    cdef Py_ssize_t i, j, k, d
    cdef double acc, best, diff
    with nogil:
        for i in range(start, stop):
            for j in range(i + 1, n):
                best = 0.0
                for k in range(T):
                    acc = 0.0
                    for d in range(p):
                        diff = values[i, k, d] - values[j, k, d]
                        acc = acc + diff * diff
                    if acc > best:
                        best = acc
                best = sqrt(best)
                out[i, j] = best
                out[j, i] = best


def first_layer_groups(const cnp.uint8_t[:, ::1] adjacency):
    """Greedy core/neighbour peeling.

    Returns ``(group_of, cores)`` where ``group_of[i]`` is the group index of
    point ``i`` and ``cores[g]`` the core that generated group ``g``.
    """
    cdef Py_ssize_t n = adjacency.shape[0]
    cdef cnp.int64_t[::1] counts = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] group_of = np.full(n, -1, dtype=np.int64)
    cdef cnp.uint8_t[::1] alive = np.ones(n, dtype=np.uint8)
    cdef Py_ssize_t[::1] members = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t i, j, m, n_members, core, remaining = n
    cdef cnp.int64_t best, g = 0
    cores = []

    with nogil:
        for i in range(n):
            for j in range(n):
                counts[i] += adjacency[i, j]

    while remaining > 0:
        with nogil:
            core = -1
            best = -1
            for i in range(n):
                if alive[i] and counts[i] > best:
                    best = counts[i]
                    core = i
            n_members = 0
            for j in range(n):
                if alive[j] and adjacency[core, j]:
                    members[n_members] = j
                    n_members += 1
            for m in range(n_members):
                alive[members[m]] = 0
                group_of[members[m]] = g
            remaining -= n_members
            for j in range(n):
                if alive[j]:
                    for m in range(n_members):
                        counts[j] -= adjacency[j, members[m]]
        cores.append(core)
        g += 1

    return np.asarray(group_of), cores
