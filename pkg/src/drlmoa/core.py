"""MOTSP instances, objective evaluation, scalarization and Pareto utilities.

All objective math is float64. Tours are integer sequences holding a
permutation of ``0..n-1``; objective vectors and weight vectors are 1-D
float arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .kernels import nondominated_mask

EUCLIDEAN = "euclidean2d"
SCALAR_DIFF = "scalar-diff"
_WIDTH = {EUCLIDEAN: 2, SCALAR_DIFF: 1}


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str
    offset: int

    def __post_init__(self):
        if self.kind not in _WIDTH:
            raise DomainError(f"unknown objective kind {self.kind!r}")
        if self.offset < 0:
            raise DomainError("feature offset must be non-negative")

    @property
    def width(self) -> int:
        return _WIDTH[self.kind]

    @property
    def columns(self) -> slice:
        return slice(self.offset, self.offset + self.width)


@dataclass(frozen=True, eq=False)
class Instance:
    """A MOTSP instance: per-city feature rows plus one cost model per objective.

    ``scale[k]`` is the factor that maps objective ``k`` computed on these
    features back to the raw (pre-normalization) scale.
    """

    features: np.ndarray
    specs: tuple[ObjectiveSpec, ...]
    scale: tuple[float, ...] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise DomainError("features must be an n x D matrix")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        specs = tuple(self.specs)
        object.__setattr__(self, "specs", specs)
        n, d = feats.shape
        if n < 2:
            raise DomainError(f"need at least 2 cities, got {n}")
        if len(specs) < 2:
            raise DomainError(f"need at least 2 objectives, got {len(specs)}")
        covered = sorted(c for s in specs for c in range(s.offset, s.offset + s.width))
        if covered != list(range(d)):
            raise DomainError(
                f"objective feature slices must tile the {d} feature columns exactly"
            )
        if not np.all(np.isfinite(feats)):
            raise DomainError("features must be finite")
        scale = (1.0,) * len(specs) if self.scale is None else tuple(float(s) for s in self.scale)
        if len(scale) != len(specs) or any(not (s > 0 and math.isfinite(s)) for s in scale):
            raise DomainError("scale must hold one positive finite factor per objective")
        object.__setattr__(self, "scale", scale)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def M(self) -> int:
        return len(self.specs)

    @property
    def d_input(self) -> int:
        return self.features.shape[1]

    @cached_property
    def cost_matrices(self) -> np.ndarray:
        """(M, n, n) array of pairwise edge costs."""
        out = np.empty((self.M, self.n, self.n))
        for k, spec in enumerate(self.specs):
            block = self.features[:, spec.columns]
            diff = block[:, None, :] - block[None, :, :]
            if spec.kind == EUCLIDEAN:
                out[k] = np.sqrt(np.sum(diff * diff, axis=2))
            else:
                out[k] = np.abs(diff[:, :, 0])
        out.setflags(write=False)
        return out


def edge_cost(instance: Instance, k: int, i: int, j: int) -> float:
    if not 0 <= k < instance.M:
        raise DomainError(f"objective index {k} out of range [0, {instance.M})")
    for c in (i, j):
        if not 0 <= c < instance.n:
            raise DomainError(f"city index {c} out of range [0, {instance.n})")
    spec = instance.specs[k]
    a = instance.features[i, spec.columns]
    b = instance.features[j, spec.columns]
    if spec.kind == EUCLIDEAN:
        return math.hypot(a[0] - b[0], a[1] - b[1])
    return abs(float(a[0] - b[0]))


def check_tour(tour, n: int) -> np.ndarray:
    t = np.asarray(tour)
    if t.ndim != 1 or t.shape[0] != n:
        raise DomainError(f"tour must list {n} cities, got shape {t.shape}")
    t = t.astype(np.int64, copy=False)
    if not np.array_equal(np.sort(t), np.arange(n)):
        raise DomainError("tour is not a permutation of the cities")
    return t


def evaluate_tour(instance: Instance, tour) -> np.ndarray:
    """Objective vector of a closed tour (includes the return edge)."""
    t = check_tour(tour, instance.n)
    nxt = np.roll(t, -1)
    return instance.cost_matrices[:, t, nxt].sum(axis=1)


def evaluate_tours(instance: Instance, tours) -> np.ndarray:
    """(P, M) objective matrix for a (P, n) array of tours, no validation."""
    t = np.asarray(tours, dtype=np.int64)
    nxt = np.roll(t, -1, axis=1)
    return instance.cost_matrices[:, t, nxt].sum(axis=2).T


def tour_lengths_batch(features: np.ndarray, specs: Sequence[ObjectiveSpec], tours: np.ndarray) -> np.ndarray:
    """(B, M) objectives for a batch of same-size instances given as a (B, n, D) array."""
    B = features.shape[0]
    ordered = features[np.arange(B)[:, None], tours]
    step = np.roll(ordered, -1, axis=1) - ordered
    out = np.empty((B, len(specs)))
    for k, spec in enumerate(specs):
        d = step[:, :, spec.columns]
        if spec.kind == EUCLIDEAN:
            out[:, k] = np.sqrt(np.sum(d * d, axis=2)).sum(axis=1)
        else:
            out[:, k] = np.abs(d[:, :, 0]).sum(axis=1)
    return out


def _pair(a, b, what="vectors"):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError(f"dimension mismatch between {what}: {a.shape} vs {b.shape}")
    return a, b


def weighted_sum(weights, f) -> float:
    w, f = _pair(weights, f, "weights and objectives")
    return float(np.dot(w, f))


def tchebycheff(weights, f, ideal) -> float:
    w, f = _pair(weights, f, "weights and objectives")
    _, z = _pair(f, ideal, "objectives and ideal point")
    return float(np.max(w * np.abs(f - z)))


def _lattice(H: int, M: int) -> Iterator[tuple[int, ...]]:
    # reflected ordering: starts at (H, 0, ...), ends at (..., 0, H), and
    # consecutive vectors differ by one unit moved between two components
    if M == 1:
        yield (H,)
        return
    for a in range(H, -1, -1):
        rest = list(_lattice(H - a, M - 1))
        if a % 2:
            rest.reverse()
        for r in rest:
            yield (a,) + r


def lattice_size(H: int, M: int) -> int:
    return math.comb(H + M - 1, M - 1)


def generate_weights(N: int, M: int) -> np.ndarray:
    """Uniform simplex-lattice weights, shape (N, M), ordered from (1, 0, ...).

    For M > 2, N must equal C(H+M-1, M-1) for some lattice resolution H.
    N = 1 gives the single centroid weight.
    """
    if M < 2:
        raise ConfigurationError("need at least 2 objectives")
    if N < 1:
        raise ConfigurationError("need N >= 1 weight vectors")
    if N == 1:
        return np.full((1, M), 1.0 / M)
    if M == 2:
        i = np.arange(N, dtype=np.float64)
        return np.stack([(N - 1 - i) / (N - 1), i / (N - 1)], axis=1)
    H = 0
    while lattice_size(H, M) < N:
        H += 1
    if lattice_size(H, M) != N:
        lo, hi = lattice_size(H - 1, M), lattice_size(H, M)
        nearest = lo if N - lo <= hi - N else hi
        raise ConfigurationError(
            f"N={N} is not a simplex-lattice size for M={M}; nearest feasible N is {nearest}"
        )
    pts = np.array(list(_lattice(H, M)), dtype=np.float64)
    return pts / H if H else np.full((1, M), 1.0 / M)


def dominates(a, b) -> bool:
    a, b = _pair(a, b)
    return bool(np.all(a <= b) and np.any(a < b))


@dataclass(frozen=True, eq=False)
class ArchiveEntry:
    tour: np.ndarray
    objectives: np.ndarray
    weight: np.ndarray | None = None


class ParetoArchive:
    """Mutually non-dominated (tour, objectives) pairs, one per objective vector."""

    def __init__(self, entries: Iterable[ArchiveEntry] = ()):
        self.entries: list[ArchiveEntry] = list(entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def objectives(self) -> np.ndarray:
        if not self.entries:
            return np.empty((0, 0))
        return np.array([e.objectives for e in self.entries])

    @property
    def tours(self) -> list[np.ndarray]:
        return [e.tour for e in self.entries]

    def is_mutually_nondominated(self) -> bool:
        F = self.objectives
        return len(self) < 2 or bool(np.all(nondominated_mask(np.ascontiguousarray(F))))

    def sorted(self) -> "ParetoArchive":
        """Copy ordered lexicographically by objective vector."""
        if not self.entries:
            return ParetoArchive()
        order = np.lexsort(self.objectives.T[::-1])
        return ParetoArchive(self.entries[i] for i in order)


def _as_entry(item) -> ArchiveEntry:
    if isinstance(item, ArchiveEntry):
        return item
    tour, obj = item[0], item[1]
    weight = item[2] if len(item) > 2 else None
    return ArchiveEntry(
        np.asarray(tour, dtype=np.int64),
        np.asarray(obj, dtype=np.float64),
        None if weight is None else np.asarray(weight, dtype=np.float64),
    )


def nondominated_filter(points) -> ParetoArchive:
    """Keep the entries no other entry dominates; first of each identical vector wins.

    ``points`` holds ArchiveEntry objects or ``(tour, objectives[, weight])`` tuples.
    """
    entries = [_as_entry(p) for p in points]
    if not entries:
        return ParetoArchive()
    F = np.ascontiguousarray([e.objectives for e in entries], dtype=np.float64)
    keep = nondominated_mask(F)
    seen = set()
    out = []
    for e, k in zip(entries, keep):
        if not k:
            continue
        key = e.objectives.tobytes()
        if key in seen:
            continue
        seen.add(key)
        out.append(e)
    return ParetoArchive(out)


def normalize_instance(instance: Instance) -> Instance:
    """Map every objective's feature block into [0, 1].

    A block already inside [0, 1] is left alone. Otherwise each column is
    shifted to start at 0 and the whole block is divided by its largest
    column extent, which keeps 2-D aspect ratios and scales that
    objective's values by exactly ``1 / extent``.
    """
    feats = instance.features.copy()
    scale = list(instance.scale)
    for k, spec in enumerate(instance.specs):
        block = feats[:, spec.columns]
        if block.min() >= 0.0 and block.max() <= 1.0:
            continue
        lo = block.min(axis=0)
        extent = float(np.max(block.max(axis=0) - lo))
        if extent == 0.0:
            continue
        feats[:, spec.columns] = (block - lo) / extent
        scale[k] *= extent
    return Instance(feats, instance.specs, tuple(scale), name=instance.name)


FAMILIES = {
    "euclidean": (ObjectiveSpec(EUCLIDEAN, 0), ObjectiveSpec(EUCLIDEAN, 2)),
    "mixed": (ObjectiveSpec(EUCLIDEAN, 0), ObjectiveSpec(SCALAR_DIFF, 2)),
    "3obj": (ObjectiveSpec(EUCLIDEAN, 0), ObjectiveSpec(EUCLIDEAN, 2), ObjectiveSpec(SCALAR_DIFF, 4)),
    "5obj": (
        ObjectiveSpec(EUCLIDEAN, 0),
        ObjectiveSpec(EUCLIDEAN, 2),
        ObjectiveSpec(SCALAR_DIFF, 4),
        ObjectiveSpec(SCALAR_DIFF, 5),
        ObjectiveSpec(SCALAR_DIFF, 6),
    ),
}


def family_specs(family: str) -> tuple[ObjectiveSpec, ...]:
    try:
        return FAMILIES[family]
    except KeyError:
        raise ConfigurationError(
            f"unknown instance family {family!r}; expected one of {sorted(FAMILIES)}"
        ) from None


def family_d_input(family: str) -> int:
    return sum(s.width for s in family_specs(family))


def sample_features(rng: np.random.Generator, family: str, n: int, T: int) -> np.ndarray:
    """(T, n, D) i.i.d. uniform [0, 1] features for ``family``."""
    if T < 1:
        raise ConfigurationError("need T >= 1 instances")
    return rng.random((T, n, family_d_input(family)))


def gen_instance(family: str, n: int, seed: int) -> Instance:
    """Seeded uniform-[0, 1] instance of the named family."""
    if n < 2:
        raise DomainError("need n >= 2 cities")
    specs = family_specs(family)
    rng = np.random.default_rng(seed)
    feats = sample_features(rng, family, n, 1)[0]
    return Instance(feats, specs, name=f"{family}-{n}-s{seed}")
