"""Pure numpy/Python versions of the compiled kernels in ``_ckernels.pyx``.

Both modules expose the same functions with the same tie-breaking, so the
results are identical whichever backend is loaded.
"""
from __future__ import annotations

import numpy as np

IMPROVE_EPS = 1e-12


def _pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    return i[keep], j[keep]


def two_opt_matrix(D, tour, max_passes, first_improvement=False):
    """2-opt descent on a symmetric cost matrix.

    Returns ``(tour, passes)`` where ``passes`` counts neighbourhood scans
    that applied at least one move.
    """
    D = np.ascontiguousarray(D, dtype=np.float64)
    t = np.array(tour, dtype=np.int64)
    n = t.shape[0]
    passes = 0
    if n < 4:
        return t, 0
    if first_improvement:
        while passes < max_passes:
            moved = False
            for i in range(n - 2):
                a = t[i]
                b = t[i + 1]
                j_end = n if i > 0 else n - 1
                for j in range(i + 2, j_end):
                    c = t[j]
                    d = t[(j + 1) % n]
                    if D[a, c] + D[b, d] - D[a, b] - D[c, d] < -IMPROVE_EPS:
                        t[i + 1 : j + 1] = t[i + 1 : j + 1][::-1]
                        moved = True
                        b = t[i + 1]
            if not moved:
                break
            passes += 1
        return t, passes

    I, J = _pair_index(n)
    J1 = (J + 1) % n
    while passes < max_passes:
        a, b, c, d = t[I], t[I + 1], t[J], t[J1]
        delta = D[a, c] + D[b, d] - D[a, b] - D[c, d]
        k = int(np.argmin(delta))
        if not delta[k] < -IMPROVE_EPS:
            break
        i, j = I[k], J[k]
        t[i + 1 : j + 1] = t[i + 1 : j + 1][::-1]
        passes += 1
    return t, passes


def _dominance_matrix(F: np.ndarray) -> np.ndarray:
    """``dom[i, j]`` is True when row i dominates row j."""
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


def nondominated_mask(F):
    """True for rows not strictly dominated by any other row."""
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    keep = np.ones(n, dtype=bool)
    chunk = max(1, 2_000_000 // max(1, n * F.shape[1]))
    for lo in range(0, n, chunk):
        block = F[lo : lo + chunk]
        le = np.all(F[:, None, :] <= block[None, :, :], axis=2)
        lt = np.any(F[:, None, :] < block[None, :, :], axis=2)
        keep[lo : lo + chunk] = ~np.any(le & lt, axis=0)
    return keep


def nondominated_ranks(F):
    """Front index of every row (0 = non-dominated)."""
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    dom = _dominance_matrix(F)
    count = dom.sum(axis=0)
    rank = np.full(n, -1, dtype=np.int64)
    current = np.flatnonzero(count == 0)
    level = 0
    while current.size:
        rank[current] = level
        count = count - dom[current].sum(axis=0)
        count[rank >= 0] = -1
        current = np.flatnonzero(count == 0)
        level += 1
    return rank
