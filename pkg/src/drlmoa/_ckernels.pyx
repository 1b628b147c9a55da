# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics must match ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.int64_t i64

cdef double IMPROVE_EPS = 1e-12


cdef inline void _reverse(i64[::1] t, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef i64 tmp
    while lo < hi:
        tmp = t[lo]
        t[lo] = t[hi]
        t[hi] = tmp
        lo += 1
        hi -= 1


def two_opt_matrix(const f64[:, ::1] D, tour, Py_ssize_t max_passes, bint first_improvement=False):
    """2-opt descent on a symmetric cost matrix.

    Returns ``(tour, passes)`` where ``passes`` counts neighbourhood scans
    that applied at least one move.
    """
    cdef cnp.ndarray[i64, ndim=1] arr = np.array(tour, dtype=np.int64)
    cdef i64[::1] t = arr
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t i, j, j_end, best_i, best_j, passes = 0
    cdef i64 a, b, c, d
    cdef double delta, best
    cdef bint moved
    if n < 4:
        return arr, 0
    with nogil:
        while passes < max_passes:
            moved = False
            best = -IMPROVE_EPS
            best_i = -1
            best_j = -1
            for i in range(n - 2):
                a = t[i]
                b = t[i + 1]
                j_end = n if i > 0 else n - 1
                for j in range(i + 2, j_end):
                    c = t[j]
                    d = t[(j + 1) % n]
                    delta = D[a, c] + D[b, d] - D[a, b] - D[c, d]
                    if first_improvement:
                        if delta < -IMPROVE_EPS:
                            _reverse(t, i + 1, j)
                            moved = True
                            b = t[i + 1]
                    elif delta < best:
                        best = delta
                        best_i = i
                        best_j = j
            if not first_improvement and best_i >= 0:
                _reverse(t, best_i + 1, best_j)
                moved = True
            if not moved:
                break
            passes += 1
    return arr, passes


def nondominated_mask(const f64[:, ::1] F):
    """True for rows not strictly dominated by any other row."""
    cdef Py_ssize_t n = F.shape[0], m = F.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.ones(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] keep = out
    cdef Py_ssize_t i, j, k
    cdef bint le, lt
    with nogil:
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                le = True
                lt = False
                for k in range(m):
                    if F[j, k] > F[i, k]:
                        le = False
                        break
                    if F[j, k] < F[i, k]:
                        lt = True
                if le and lt:
                    keep[i] = 0
                    break
    return out.astype(bool)


def nondominated_ranks(const f64[:, ::1] F):
    """Front index of every row (0 = non-dominated), Deb's counting scheme."""
    cdef Py_ssize_t n = F.shape[0], m = F.shape[1]
    cdef cnp.ndarray[i64, ndim=2] dom = np.zeros((n, n), dtype=np.int64)
    cdef i64[:, ::1] S = dom
    cdef cnp.ndarray[i64, ndim=1] cnt_arr = np.zeros(n, dtype=np.int64)
    cdef i64[::1] cnt = cnt_arr
    cdef cnp.ndarray[i64, ndim=1] rank_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] rank = rank_arr
    cdef cnp.ndarray[i64, ndim=1] nsz_arr = np.zeros(n, dtype=np.int64)
    cdef i64[::1] nsz = nsz_arr
    cdef cnp.ndarray[i64, ndim=1] cur_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[i64, ndim=1] nxt_arr = np.zeros(n, dtype=np.int64)
    cdef i64[::1] cur = cur_arr
    cdef i64[::1] nxt = nxt_arr
    cdef Py_ssize_t i, j, k, q, ncur, nnxt, level = 0
    cdef bint i_le, i_lt, j_le, j_lt
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                i_le = True
                j_le = True
                i_lt = False
                j_lt = False
                for k in range(m):
                    if F[i, k] < F[j, k]:
                        i_lt = True
                        j_le = False
                    elif F[i, k] > F[j, k]:
                        j_lt = True
                        i_le = False
                if i_le and i_lt:
                    S[i, nsz[i]] = j
                    nsz[i] += 1
                    cnt[j] += 1
                elif j_le and j_lt:
                    S[j, nsz[j]] = i
                    nsz[j] += 1
                    cnt[i] += 1
        ncur = 0
        for i in range(n):
            if cnt[i] == 0:
                rank[i] = 0
                cur[ncur] = i
                ncur += 1
        while ncur > 0:
            nnxt = 0
            for i in range(ncur):
                for k in range(nsz[cur[i]]):
                    q = S[cur[i], k]
                    cnt[q] -= 1
                    if cnt[q] == 0:
                        rank[q] = level + 1
                        nxt[nnxt] = q
                        nnxt += 1
            level += 1
            for i in range(nnxt):
                cur[i] = nxt[i]
            ncur = nnxt
    return rank_arr
