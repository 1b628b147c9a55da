"""Scalarized 2-opt and the DRL+LS post-processor."""
from __future__ import annotations

from typing import Callable

import numpy as np

from ..core import ArchiveEntry, Instance, ParetoArchive, check_tour, evaluate_tour, nondominated_filter
from ..errors import DomainError
from ..kernels import two_opt_matrix

UNLIMITED = 2**62
_EPS = 1e-12


def combined_matrix(instance: Instance, weight) -> np.ndarray:
    w = np.asarray(weight, dtype=np.float64)
    if w.shape != (instance.M,):
        raise DomainError(f"weight has {w.shape} entries, instance has {instance.M} objectives")
    return np.ascontiguousarray(np.tensordot(w, instance.cost_matrices, axes=1))


def _two_opt_generic(instance: Instance, tour: np.ndarray, scalar: Callable, budget: int) -> np.ndarray:
    t = tour.copy()
    n = t.shape[0]
    if n < 4:
        return t
    C = instance.cost_matrices
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    I, J = i[keep], j[keep]
    J1 = (J + 1) % n
    z = evaluate_tour(instance, t)
    current = scalar(z)
    for _ in range(budget):
        a, b, c, d = t[I], t[I + 1], t[J], t[J1]
        delta = C[:, a, c] + C[:, b, d] - C[:, a, b] - C[:, c, d]
        costs = np.array([scalar(z + delta[:, k]) for k in range(I.size)])
        k = int(np.argmin(costs))
        if not costs[k] < current - _EPS:
            break
        t[I[k] + 1 : J[k] + 1] = t[I[k] + 1 : J[k] + 1][::-1]
        z = evaluate_tour(instance, t)
        current = scalar(z)
    return t


def two_opt(instance: Instance, tour, scalar, budget: int | None = None,
            first_improvement: bool = False) -> np.ndarray:
    """Improve ``tour`` by 2-edge exchanges under a scalarized cost.

    ``scalar`` is either a weight vector (weighted sum, compiled fast path)
    or any callable mapping an objective vector to a real. ``budget`` caps
    the number of improving neighbourhood scans; ``None`` runs to a local
    optimum. The default move rule is best-improving.
    """
    t = check_tour(tour, instance.n)
    if budget is not None and budget < 0:
        raise DomainError("budget must be non-negative")
    budget = UNLIMITED if budget is None else int(budget)
    if budget == 0:
        return t.copy()
    if callable(scalar):
        if first_improvement:
            raise DomainError("first-improvement moves need a weight vector")
        return _two_opt_generic(instance, t, scalar, budget)
    out, _ = two_opt_matrix(combined_matrix(instance, scalar), t, budget, first_improvement)
    return out


def ls_postprocess(instance: Instance, archive: ParetoArchive, bank_weights=None,
                   budget: int | None = None) -> ParetoArchive:
    """One 2-opt run per archive entry under its originating weight, then re-filter.

    Entries carry their weight when produced by ``infer_front``; otherwise
    ``bank_weights[i]`` is used for entry ``i``. The filter runs over the
    original and improved entries together, so the hypervolume cannot drop.
    """
    entries = list(archive)
    if not entries:
        return ParetoArchive()
    improved = []
    for i, e in enumerate(entries):
        w = e.weight
        if w is None:
            if bank_weights is None or i >= len(bank_weights):
                raise DomainError(f"archive entry {i} has no weight vector")
            w = np.asarray(bank_weights[i], dtype=np.float64)
        t = two_opt(instance, e.tour, w, budget)
        improved.append(ArchiveEntry(t, evaluate_tour(instance, t), w))
    return nondominated_filter(improved + entries)
