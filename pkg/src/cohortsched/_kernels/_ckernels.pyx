# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: marginal-benefit tables and benefit matrices.

Must stay bit-identical to ``_pykernels``; see the note there about
summation order before touching any accumulation loop.
"""

from libc.math cimport ldexp

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "c"


def marginal_table(req_group, int d, bint geometric):
    """See ``_pykernels.marginal_table``."""
    req_arr = np.ascontiguousarray(req_group, dtype=np.int64)
    cdef Py_ssize_t g = req_arr.shape[0]
    cdef Py_ssize_t n_topics = req_arr.shape[1]
    if g == 0:
        raise ValueError("group must be non-empty")

    # numpy's sort beats hand-rolled qsort; sorting column by column keeps the
    # working set cache-resident.  The walk below stays in C.
    cols_arr = np.empty((n_topics, g), dtype=np.int64)
    for j in range(n_topics):
        cols_arr[j] = np.sort(req_arr[:, j])
    cdef const cnp.int64_t[:, ::1] cols = cols_arr

    lengths_arr = np.zeros(n_topics, dtype=np.int64)
    cdef cnp.int64_t[::1] lengths = lengths_arr
    cdef Py_ssize_t t
    cdef cnp.int64_t length, l_max = 0
    for t in range(n_topics):
        length = cols[t, g - 1] if cols[t, g - 1] < d else d
        lengths[t] = length
        if length > l_max:
            l_max = length

    table_arr = np.zeros((n_topics, l_max), dtype=np.float64)
    cdef double[:, ::1] table = table_arr
    cdef Py_ssize_t idx
    cdef cnp.int64_t i, v
    cdef double acc
    with nogil:
        for t in range(n_topics):
            length = lengths[t]
            if length == 0:
                continue
            if geometric:
                idx = 0
                i = length
                while i >= 1:
                    while idx < g and cols[t, g - 1 - idx] >= i:
                        idx += 1
                    table[t, i - 1] = idx * ldexp(1.0, -<int> i)
                    i -= 1
            else:
                # accumulate reciprocals largest-requirement-first, writing the
                # running sum at every occurrence index it covers
                idx = 0
                acc = 0.0
                i = length
                while i >= 1:
                    while idx < g and cols[t, g - 1 - idx] >= i:
                        v = cols[t, g - 1 - idx]
                        acc += 1.0 / v
                        idx += 1
                    table[t, i - 1] = acc
                    i -= 1
    return table_arr, lengths_arr


def uniform_benefit_matrix(req, inv_req, centers):
    """See ``_pykernels.uniform_benefit_matrix``."""
    cdef const cnp.int64_t[:, ::1] r = np.ascontiguousarray(req, dtype=np.int64)
    cdef const double[:, ::1] inv = np.ascontiguousarray(inv_req, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] c = np.ascontiguousarray(centers, dtype=np.int64)
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t n_topics = r.shape[1]
    cdef Py_ssize_t k = c.shape[0]
    out_arr = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t s, j, t
    cdef double acc
    cdef cnp.int64_t rv, cv, m
    with nogil:
        for s in range(n):
            for j in range(k):
                acc = 0.0
                for t in range(n_topics):
                    rv = r[s, t]
                    cv = c[j, t]
                    m = rv if rv < cv else cv
                    acc += m * inv[s, t]
                out[s, j] = acc
    return out_arr


def geometric_benefit_matrix(req, centers):
    """See ``_pykernels.geometric_benefit_matrix``."""
    cdef const cnp.int64_t[:, ::1] r = np.ascontiguousarray(req, dtype=np.int64)
    cdef const cnp.int64_t[:, ::1] c = np.ascontiguousarray(centers, dtype=np.int64)
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t n_topics = r.shape[1]
    cdef Py_ssize_t k = c.shape[0]
    cdef double[65] pow_half
    cdef int e
    for e in range(65):
        pow_half[e] = ldexp(1.0, -e)
    out_arr = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t s, j, t
    cdef double acc
    cdef cnp.int64_t rv, cv, m
    with nogil:
        for s in range(n):
            for j in range(k):
                acc = 0.0
                for t in range(n_topics):
                    rv = r[s, t]
                    cv = c[j, t]
                    m = rv if rv < cv else cv
                    if m > 64:
                        m = 64
                    acc += 1.0 - pow_half[m]
                out[s, j] = acc
    return out_arr
