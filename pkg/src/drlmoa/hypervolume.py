"""Hypervolume of a minimization front with respect to a reference point."""
from __future__ import annotations

import numpy as np

from .errors import DomainError
from .kernels import nondominated_mask

EXACT_LIMIT = 200
MC_SAMPLES = 1_000_000


def _prepare(front, ref) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=np.float64)
    F = np.asarray(front, dtype=np.float64)
    if F.size == 0:
        return np.empty((0, ref.shape[0])), ref
    F = np.atleast_2d(F)
    if F.shape[1] != ref.shape[0]:
        raise DomainError(f"front has {F.shape[1]} objectives, reference point {ref.shape[0]}")
    F = F[np.all(F < ref, axis=1)]
    if F.shape[0] > 1:
        F = np.unique(F, axis=0)
        F = F[nondominated_mask(np.ascontiguousarray(F))]
    return F, ref


def _hv2d(F: np.ndarray, ref: np.ndarray) -> float:
    # non-dominated input: ascending f1 means descending f2
    F = F[np.argsort(F[:, 0], kind="stable")]
    widths = np.diff(np.append(F[:, 0], ref[0]))
    return float(np.sum(widths * (ref[1] - F[:, 1])))


def _hv_slice(F: np.ndarray, ref: np.ndarray) -> float:
    """Exact volume by slicing along the last objective."""
    m = F.shape[1]
    if F.shape[0] == 0:
        return 0.0
    if m == 2:
        return _hv2d(F, ref)
    if F.shape[0] == 1:
        return float(np.prod(ref - F[0]))
    F = F[np.argsort(F[:, -1], kind="stable")]
    bounds = np.append(F[1:, -1], ref[-1])
    total = 0.0
    for i in range(F.shape[0]):
        depth = bounds[i] - F[i, -1]
        if depth <= 0.0:
            continue
        proj = F[: i + 1, :-1]
        if proj.shape[0] > 1:
            proj = proj[nondominated_mask(np.ascontiguousarray(proj))]
        total += depth * _hv_slice(proj, ref[:-1])
    return total


def hypervolume_mc(front, ref, samples: int = MC_SAMPLES, seed: int = 0) -> float:
    """Monte Carlo estimate from ``samples`` uniform draws in the bounding box."""
    F, ref = _prepare(front, ref)
    if F.shape[0] == 0:
        return 0.0
    lo = F.min(axis=0)
    box = float(np.prod(ref - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = max(1, min(samples, 4_000_000 // max(1, F.shape[0] * F.shape[1])))
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        pts = lo + rng.random((k, F.shape[1])) * (ref - lo)
        dominated = np.zeros(k, dtype=bool)
        for p in F:
            dominated |= np.all(pts >= p, axis=1)
        hits += int(dominated.sum())
        done += k
    return box * hits / samples


def hypervolume_with_method(front, ref, *, exact_limit: int = EXACT_LIMIT, seed: int = 0) -> tuple[float, str]:
    """Return ``(value, method)``; method is ``"exact"`` or ``"monte-carlo"``."""
    F, ref = _prepare(front, ref)
    if F.shape[0] == 0:
        return 0.0, "exact"
    if F.shape[1] == 2 or F.shape[0] <= exact_limit:
        return _hv_slice(F, ref), "exact"
    return hypervolume_mc(F, ref, seed=seed), "monte-carlo"


def hypervolume(front, ref) -> float:
    """Dominated volume between ``front`` and ``ref`` (points beyond ``ref`` add nothing)."""
    return hypervolume_with_method(front, ref)[0]


def reference_point(*fronts, factor: float = 1.1) -> np.ndarray:
    """``factor`` times the componentwise maximum over the union of ``fronts``."""
    stacked = [np.atleast_2d(np.asarray(f, dtype=np.float64)) for f in fronts if np.size(f)]
    if not stacked:
        raise DomainError("cannot derive a reference point from empty fronts")
    return factor * np.max(np.vstack(stacked), axis=0)
