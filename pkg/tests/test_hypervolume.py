import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drlmoa.hypervolume import hypervolume, hypervolume_mc, hypervolume_with_method, reference_point
from drlmoa.errors import DomainError


def inclusion_exclusion(F, ref):
    """Union of boxes [f, ref] by inclusion-exclusion over all subsets."""
    F = np.asarray(F, dtype=float)
    total = 0.0
    for k in range(1, len(F) + 1):
        for sub in itertools.combinations(range(len(F)), k):
            corner = F[list(sub)].max(axis=0)
            total += (-1) ** (k + 1) * np.prod(np.clip(ref - corner, 0, None))
    return total


def mc_oracle(F, ref, samples=1_000_000, seed=99):
    """Plain Monte Carlo in [0, ref], written independently of the library estimator."""
    rng = np.random.default_rng(seed)
    pts = rng.random((samples, len(ref))) * ref
    hit = np.zeros(samples, dtype=bool)
    for f in F:
        hit |= np.all(pts >= f, axis=1)
    return float(np.prod(ref) * hit.mean())


def test_hand_value_2d():
    assert hypervolume([(1, 3), (2, 2), (3, 1)], [4, 4]) == 6.0
    assert hypervolume([(3, 1), (1, 3), (2, 2)], [4, 4]) == 6.0


def test_degenerate_and_empty():
    assert hypervolume([(4, 4)], [4, 4]) == 0.0
    assert hypervolume([], [1, 1]) == 0.0
    assert hypervolume([(5, 0.5)], [4, 4]) == 0.0
    with pytest.raises(DomainError):
        hypervolume([(1, 2, 3)], [4, 4])


def test_3d_exact_matches_monte_carlo_oracle():
    rng = np.random.default_rng(3)
    F = rng.random((10, 3))
    ref = np.full(3, 1.1)
    exact = hypervolume(F, ref)
    assert exact == pytest.approx(mc_oracle(F, ref), rel=0.01)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_exact_matches_inclusion_exclusion(k, m, seed):
    rng = np.random.default_rng(seed)
    F = rng.random((k, m))
    ref = np.full(m, 1.2)
    assert hypervolume(F, ref) == pytest.approx(inclusion_exclusion(F, ref), rel=1e-10, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_order_and_dominated_point_invariance(k, m, seed):
    rng = np.random.default_rng(seed)
    F = rng.random((k, m))
    ref = np.full(m, 1.5)
    hv = hypervolume(F, ref)
    assert hypervolume(F[rng.permutation(k)], ref) == pytest.approx(hv, rel=1e-12)
    worse = F[0] + rng.random(m) * 0.1
    assert hypervolume(np.vstack([F, worse]), ref) == pytest.approx(hv, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_adding_nondominated_point_increases(k, m, seed):
    rng = np.random.default_rng(seed)
    F = rng.random((k, m)) * 0.5 + 0.25
    ref = np.ones(m)
    new = F.min(axis=0) - 0.01  # dominates the whole front's ideal corner
    assert hypervolume(np.vstack([F, new]), ref) > hypervolume(F, ref)


def test_large_front_switches_to_monte_carlo():
    rng = np.random.default_rng(4)
    # points on the positive orthant sphere are mutually non-dominated
    F = np.abs(rng.normal(size=(250, 3)))
    F /= np.linalg.norm(F, axis=1, keepdims=True)
    ref = np.full(3, 1.1)
    value, method = hypervolume_with_method(F, ref)
    assert method == "monte-carlo"
    exact, m2 = hypervolume_with_method(F, ref, exact_limit=1000)
    assert m2 == "exact"
    assert value == pytest.approx(exact, rel=0.01)
    assert hypervolume_with_method(F[:, :2], ref[:2])[1] == "exact"


def test_monte_carlo_is_seeded():
    F = np.random.default_rng(0).random((20, 3))
    assert hypervolume_mc(F, [1, 1, 1], 10_000, seed=5) == hypervolume_mc(F, [1, 1, 1], 10_000, seed=5)


def test_reference_point():
    ref = reference_point([(1, 3), (2, 2)], [(4, 1)])
    np.testing.assert_allclose(ref, [4.4, 3.3])
    with pytest.raises(DomainError):
        reference_point([])
