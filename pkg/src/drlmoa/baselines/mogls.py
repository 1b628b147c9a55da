"""Genetic local search with random weighted-sum scalarizations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ArchiveEntry, Instance, ParetoArchive, evaluate_tour
from ..errors import ConfigurationError
from .local_search import combined_matrix
from .operators import archive_insert, order_crossover
from ..kernels import two_opt_matrix


@dataclass
class MOGLSConfig:
    n_ls: int = 100  # 2-opt scans per local search
    temp_pop: int = 20
    initial_solutions: int = 50
    generations: int = 1000

    def __post_init__(self):
        for name in ("n_ls", "temp_pop", "initial_solutions", "generations"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"MOGLS {name} must be positive")

    @property
    def current_set_limit(self) -> int:
        return self.temp_pop * self.initial_solutions


def _local_search(instance, tour, w, n_ls):
    t, _ = two_opt_matrix(combined_matrix(instance, w), tour, n_ls)
    return t


def mogls_run(instance: Instance, config: MOGLSConfig | None = None,
              rng: np.random.Generator | None = None,
              callback: Callable[[int, ParetoArchive], None] | None = None) -> ParetoArchive:
    """Run MOGLS and return its non-dominated archive.

    Each generation draws a uniform random weight vector, takes the
    ``temp_pop`` best members of the current set under that weighted sum,
    recombines two of them, 2-opts the child under the same weights and
    offers it to both the current set and the archive.
    """
    config = MOGLSConfig() if config is None else config
    rng = np.random.default_rng() if rng is None else rng
    M = instance.M
    current: list[tuple[np.ndarray, np.ndarray]] = []
    archive: list[ArchiveEntry] = []
    for _ in range(config.initial_solutions):
        w = rng.dirichlet(np.ones(M))
        t = _local_search(instance, rng.permutation(instance.n), w, config.n_ls)
        f = evaluate_tour(instance, t)
        current.append((t, f))
        archive_insert(archive, ArchiveEntry(t, f))
    for gen in range(config.generations):
        w = rng.dirichlet(np.ones(M))
        F = np.array([f for _, f in current])
        scores = F @ w
        k = min(config.temp_pop, len(current))
        tp = np.argsort(scores, kind="stable")[:k]
        a, b = rng.choice(tp, size=2, replace=False) if k > 1 else (tp[0], tp[0])
        child = order_crossover(rng, current[a][0], current[b][0])
        child = _local_search(instance, child, w, config.n_ls)
        fc = evaluate_tour(instance, child)
        worst = scores[tp[-1]]
        novel = not any(np.array_equal(fc, F[i]) for i in tp)
        if fc @ w < worst and novel:
            current.append((child, fc))
            if len(current) > config.current_set_limit:
                current.pop(0)
        archive_insert(archive, ArchiveEntry(child, fc))
        if callback is not None:
            callback(gen, ParetoArchive(archive))
    return ParetoArchive(archive)
