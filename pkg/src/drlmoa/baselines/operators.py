"""Permutation variation operators and archive bookkeeping shared by the MOEAs."""
from __future__ import annotations

import numpy as np

from ..core import ArchiveEntry


def order_crossover(rng: np.random.Generator, parent_a, parent_b, cut: tuple[int, int] | None = None) -> np.ndarray:
    """Davis order crossover.

    The child keeps ``parent_a[lo:hi]`` in place; the remaining positions,
    starting at ``hi`` and wrapping around, take the missing cities in the
    order they appear in ``parent_b`` read from ``hi`` onwards.
    """
    a = np.asarray(parent_a, dtype=np.int64)
    b = np.asarray(parent_b, dtype=np.int64)
    n = a.shape[0]
    if cut is None:
        lo, hi = np.sort(rng.choice(n + 1, size=2, replace=False))
    else:
        lo, hi = cut
    child = np.empty(n, dtype=np.int64)
    child[lo:hi] = a[lo:hi]
    kept = np.zeros(n, dtype=bool)
    kept[a[lo:hi]] = True
    order = np.roll(b, -hi)
    fill = order[~kept[order]]
    slots = (np.arange(n - (hi - lo)) + hi) % n
    child[slots] = fill
    return child


def inversion_mutation(rng: np.random.Generator, tour, p_mut: float) -> np.ndarray:
    t = np.array(tour, dtype=np.int64)
    if rng.random() < p_mut:
        i, j = np.sort(rng.choice(t.shape[0], size=2, replace=False))
        t[i : j + 1] = t[i : j + 1][::-1]
    return t


def variation(rng: np.random.Generator, parent_a, parent_b, p_mut: float = 0.2) -> np.ndarray:
    """Order crossover followed by inversion mutation with probability ``p_mut``."""
    return inversion_mutation(rng, order_crossover(rng, parent_a, parent_b), p_mut)


def archive_insert(entries: list[ArchiveEntry], candidate: ArchiveEntry) -> bool:
    """Add ``candidate`` unless weakly dominated; drop entries it dominates."""
    f = candidate.objectives
    for e in entries:
        if np.all(e.objectives <= f):
            return False
    entries[:] = [e for e in entries if not (np.all(f <= e.objectives) and np.any(f < e.objectives))]
    entries.append(candidate)
    return True
