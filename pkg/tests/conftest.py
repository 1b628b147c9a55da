import itertools
import math

import numpy as np
import pytest

from drlmoa.core import EUCLIDEAN, SCALAR_DIFF, Instance, ObjectiveSpec


def loop_length(coords_by_obj, kinds, tour):
    """Objective vector by explicit Python loops (independent of core's vectorized path)."""
    out = []
    n = len(tour)
    for block, kind in zip(coords_by_obj, kinds):
        total = 0.0
        for s in range(n):
            a, b = block[tour[s]], block[tour[(s + 1) % n]]
            total += math.hypot(a[0] - b[0], a[1] - b[1]) if kind == EUCLIDEAN else abs(a[0] - b[0])
        out.append(total)
    return np.array(out)


def distinct_tours(n):
    """Each undirected Hamiltonian cycle once: start at 0, second city < last city."""
    for rest in itertools.permutations(range(1, n)):
        if rest[0] < rest[-1]:
            yield (0,) + rest


def brute_pareto(F):
    """Indices of rows no other row dominates, by pairwise comparison."""
    F = np.asarray(F)
    keep = []
    for i in range(len(F)):
        if not any(np.all(F[j] <= F[i]) and np.any(F[j] < F[i]) for j in range(len(F)) if j != i):
            keep.append(i)
    return keep


def exhaustive_front(inst):
    """Set of non-dominated objective vectors (rounded keys) over all distinct tours."""
    from drlmoa.core import evaluate_tour

    F = np.array([evaluate_tour(inst, t) for t in distinct_tours(inst.n)])
    return {tuple(np.round(F[i], 9)) for i in brute_pareto(F)}


def square_instance():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    return Instance(np.hstack([sq, sq]), (ObjectiveSpec(EUCLIDEAN, 0), ObjectiveSpec(EUCLIDEAN, 2)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def mixed_specs():
    return (ObjectiveSpec(EUCLIDEAN, 0), ObjectiveSpec(SCALAR_DIFF, 2))
