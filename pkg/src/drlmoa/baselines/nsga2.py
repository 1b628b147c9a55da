"""NSGA-II on permutation-encoded MOTSP tours."""
from __future__ import annotations

import numpy as np

from ..core import ArchiveEntry, Instance, ParetoArchive, evaluate_tours, nondominated_filter
from ..errors import ConfigurationError
from ..kernels import nondominated_ranks
from .operators import variation


def fast_nondominated_sort(F) -> list[list[int]]:
    """Partition row indices of ``F`` into successive non-domination fronts."""
    F = np.ascontiguousarray(F, dtype=np.float64)
    if F.shape[0] == 0:
        return []
    rank = nondominated_ranks(F)
    return [np.flatnonzero(rank == r).tolist() for r in range(int(rank.max()) + 1)]


def crowding_distance(F) -> np.ndarray:
    """Crowding distance of each row of one front; boundary rows get +inf."""
    F = np.asarray(F, dtype=np.float64)
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        col = F[order, k]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def _rank_and_crowd(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rank = nondominated_ranks(np.ascontiguousarray(F))
    crowd = np.zeros(F.shape[0])
    for r in range(int(rank.max()) + 1):
        idx = np.flatnonzero(rank == r)
        crowd[idx] = crowding_distance(F[idx])
    return rank, crowd


def _tournament(rng, rank, crowd) -> int:
    i, j = rng.integers(0, rank.shape[0], size=2)
    if rank[i] != rank[j]:
        return int(i if rank[i] < rank[j] else j)
    return int(i if crowd[i] >= crowd[j] else j)


def _environmental_selection(F: np.ndarray, size: int) -> np.ndarray:
    chosen = []
    for front in fast_nondominated_sort(F):
        if len(chosen) + len(front) <= size:
            chosen.extend(front)
            continue
        front = np.asarray(front)
        crowd = crowding_distance(F[front])
        order = np.argsort(-crowd, kind="stable")
        chosen.extend(front[order[: size - len(chosen)]].tolist())
        break
    return np.asarray(chosen, dtype=np.int64)


def nsga2_run(instance: Instance, pop_size: int = 100, iterations: int = 500,
              rng: np.random.Generator | None = None, p_mut: float = 0.2) -> ParetoArchive:
    if pop_size < 4 or pop_size % 2:
        raise ConfigurationError("NSGA-II population size must be even and at least 4")
    rng = np.random.default_rng() if rng is None else rng
    n = instance.n
    pop = np.array([rng.permutation(n) for _ in range(pop_size)], dtype=np.int64)
    F = evaluate_tours(instance, pop)
    for _ in range(iterations):
        rank, crowd = _rank_and_crowd(F)
        kids = np.empty_like(pop)
        for c in range(pop_size):
            a = _tournament(rng, rank, crowd)
            b = _tournament(rng, rank, crowd)
            kids[c] = variation(rng, pop[a], pop[b], p_mut)
        union = np.vstack([pop, kids])
        FU = np.vstack([F, evaluate_tours(instance, kids)])
        keep = _environmental_selection(FU, pop_size)
        pop, F = union[keep], FU[keep]
    return nondominated_filter(ArchiveEntry(t, f) for t, f in zip(pop, F))
