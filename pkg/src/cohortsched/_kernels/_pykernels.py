"""Pure-numpy kernel implementations.

These mirror the compiled kernels in ``_ckernels`` operation for operation.
Both backends must produce bit-identical floats so that greedy tie-breaks
and argmax decisions never depend on which backend is loaded.  That pins
the summation order: every accumulated sum is a single left-to-right chain
(``np.cumsum``), never a pairwise reduction (``np.sum``).
"""

import numpy as np

BACKEND_NAME = "python"


def marginal_table(req_group: np.ndarray, d: int, geometric: bool):
    """Marginal group benefit of the i-th occurrence of each topic.

    Returns ``(table, lengths)`` where ``table[t, i-1]`` is the gain from
    the i-th occurrence of topic ``t`` for ``1 <= i <= lengths[t]`` and
    ``lengths[t] = min(max req over the group, d)``; occurrences beyond
    ``lengths[t]`` gain exactly 0.  For the uniform curve the gain is
    ``sum(1/req(s,t) for s with req(s,t) >= i)``, accumulated over members
    in descending requirement order; for the geometric curve it is
    ``count(req >= i) * 2**-i``.
    """
    req_group = np.ascontiguousarray(req_group, dtype=np.int64)
    g, n_topics = req_group.shape
    if g == 0:
        raise ValueError("group must be non-empty")
    col_max = req_group.max(axis=0)
    lengths = np.minimum(col_max, d).astype(np.int64)
    l_max = int(lengths.max()) if n_topics else 0
    table = np.zeros((n_topics, l_max), dtype=np.float64)
    for t in range(n_topics):
        length = int(lengths[t])
        if length == 0:
            continue
        col = np.sort(req_group[:, t])
        # prefix[c-1] == sum of reciprocals of the c largest requirements,
        # accumulated largest-first (the chain the compiled kernel uses)
        i = np.arange(1, length + 1)
        cnt_ge = g - np.searchsorted(col, i, side="left")
        if geometric:
            table[t, :length] = cnt_ge * np.ldexp(1.0, -i)
        else:
            prefix = np.cumsum(1.0 / col[::-1])
            table[t, :length] = prefix[cnt_ge - 1]
    return table, lengths


def uniform_benefit_matrix(req: np.ndarray, inv_req: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Benefit of each student under each center repetition vector.

    ``out[s, j] = sum_t min(req[s,t], centers[j,t]) * inv_req[s,t]`` with the
    sum taken left to right over topics.  Buffers are reused across centers
    to keep the hot loop allocation-free.
    """
    req = np.asarray(req, dtype=np.int64)
    centers = np.asarray(centers, dtype=np.int64)
    n = req.shape[0]
    k = centers.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    ibuf = np.empty_like(req)
    fbuf = np.empty(req.shape, dtype=np.float64)
    for j in range(k):
        np.minimum(req, centers[j], out=ibuf)
        np.multiply(ibuf, inv_req, out=fbuf)
        np.cumsum(fbuf, axis=1, out=fbuf)
        out[:, j] = fbuf[:, -1]
    return out


def geometric_benefit_matrix(req: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Geometric-curve analogue of ``uniform_benefit_matrix``.

    ``out[s, j] = sum_t (1 - 2**-min(req[s,t], centers[j,t]))``, exponent
    clamped at 64 (beyond which the term is exactly 1.0 in doubles).
    """
    req = np.asarray(req, dtype=np.int64)
    centers = np.asarray(centers, dtype=np.int64)
    pow_half = np.ldexp(1.0, -np.arange(65))
    n = req.shape[0]
    k = centers.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    ibuf = np.empty_like(req)
    fbuf = np.empty(req.shape, dtype=np.float64)
    for j in range(k):
        np.minimum(req, centers[j], out=ibuf)
        np.minimum(ibuf, 64, out=ibuf)
        np.subtract(1.0, pow_half[ibuf], out=fbuf)
        np.cumsum(fbuf, axis=1, out=fbuf)
        out[:, j] = fbuf[:, -1]
    return out
