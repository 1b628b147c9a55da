"""MOEA/D with Tchebycheff decomposition."""
from __future__ import annotations

import numpy as np

from ..core import ArchiveEntry, Instance, ParetoArchive, evaluate_tour, evaluate_tours, generate_weights, nondominated_filter
from ..errors import ConfigurationError
from .operators import variation


def neighborhoods(weights, T: int) -> np.ndarray:
    """Indices of the ``T`` closest weight vectors (self first), shape (N, T)."""
    W = np.asarray(weights, dtype=np.float64)
    T = min(T, W.shape[0])
    dist = np.linalg.norm(W[:, None, :] - W[None, :, :], axis=2)
    return np.argsort(dist, axis=1, kind="stable")[:, :T]


def _tch(W: np.ndarray, F: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.max(W * np.abs(F - z), axis=-1)


def moead_run(instance: Instance, N: int = 100, iterations: int = 500, T_nbr: int = 10,
              rng: np.random.Generator | None = None, p_mut: float = 0.2,
              ideal_trace: list | None = None) -> ParetoArchive:
    """Canonical MOEA/D loop; every improving neighbour is replaced.

    ``ideal_trace``, when given, receives a copy of the ideal point after
    initialization and after each generation.
    """
    if N < 2:
        raise ConfigurationError("MOEA/D needs N >= 2 subproblems")
    rng = np.random.default_rng() if rng is None else rng
    W = generate_weights(N, instance.M)
    B = neighborhoods(W, max(2, T_nbr))
    pop = np.array([rng.permutation(instance.n) for _ in range(N)], dtype=np.int64)
    F = evaluate_tours(instance, pop)
    z = F.min(axis=0)
    if ideal_trace is not None:
        ideal_trace.append(z.copy())
    for _ in range(iterations):
        for i in range(N):
            k, l = rng.choice(B[i], size=2, replace=False)
            child = variation(rng, pop[k], pop[l], p_mut)
            fc = evaluate_tour(instance, child)
            z = np.minimum(z, fc)
            nb = B[i]
            better = _tch(W[nb], fc, z) <= _tch(W[nb], F[nb], z)
            for j in nb[better]:
                pop[j] = child
                F[j] = fc
        if ideal_trace is not None:
            ideal_trace.append(z.copy())
    return nondominated_filter(ArchiveEntry(t, f) for t, f in zip(pop, F))
