import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prune_lab.errors import DimensionError, StructureError, UnsupportedOperation
from prune_lab.importance import (HESSIAN, MAGNITUDE, PopulationQuadratic, as_index_set, complement,
                                  group_keep_count, hessian_scores, magnitude_scores, natural_importance,
                                  prune, prune_groupwise, top_s_mask)


def quad_loss(cov, theta_bar, noise=0.0):
    return PopulationQuadratic(cov, theta_bar, noise)


def direct_population_loss(cov, theta_bar, noise, theta):
    # independent oracle: E(y - theta^T x)^2 = (theta - theta_bar)^T cov (theta - theta_bar) + noise
    d = np.asarray(theta, float) - np.asarray(theta_bar, float)
    return float(d @ np.asarray(cov) @ d) + noise


class NoHessian:
    def evaluate(self, theta):
        return float(np.sum(theta**2))


def test_population_quadratic_matches_direct_expansion():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 5))
    cov = A @ A.T + np.eye(5)
    tb = rng.standard_normal(5)
    loss = quad_loss(cov, tb, 0.3)
    for _ in range(5):
        th = rng.standard_normal(5)
        assert loss.evaluate(th) == pytest.approx(direct_population_loss(cov, tb, 0.3, th), rel=1e-12)


def test_ni_empty_and_identity_cases():
    loss = quad_loss(np.eye(3), [1.0, 2.0, 3.0])
    th = np.array([0.5, -1.0, 2.0])
    assert natural_importance(loss, th, np.zeros(3), []) == 0.0
    assert natural_importance(loss, th, th, [0, 2]) == 0.0


def test_ni_two_dim_example():
    tb = np.array([1.0, 2.0])
    loss = quad_loss(np.eye(2), tb)
    # Delta = {1} in one-based indexing is coordinate 0
    ni = natural_importance(loss, tb, np.zeros(2), [0])
    oracle = direct_population_loss(np.eye(2), tb, 0, [0.0, 2.0]) - direct_population_loss(np.eye(2), tb, 0, tb)
    assert ni == pytest.approx(oracle, abs=1e-12)
    assert ni == pytest.approx(1.0, abs=1e-12)


def test_ni_can_be_negative():
    loss = quad_loss(np.eye(2), [0.0, 0.0])
    assert natural_importance(loss, np.array([1.0, 1.0]), np.zeros(2), [0]) < 0


def test_ni_dimension_mismatch():
    loss = quad_loss(np.eye(2), [1.0, 2.0])
    with pytest.raises(DimensionError):
        natural_importance(loss, np.zeros(2), np.zeros(3), [0])


def test_magnitude_examples():
    assert np.array_equal(magnitude_scores(np.zeros(3)).per_index, np.zeros(3))
    assert np.array_equal(magnitude_scores([3.0, -4.0]).per_index, [9.0, 16.0])
    lam = np.array([2.0, 1.0])
    tb = np.array([1.0, 2.0])
    sc = magnitude_scores(tb / lam)
    assert np.allclose(sc.per_index, [0.25, 4.0], rtol=0, atol=1e-15)
    assert np.allclose(sc.per_index, tb**2 / lam**2)
    assert sc.kind == MAGNITUDE


def test_hessian_examples():
    loss = quad_loss(np.diag([4.0, 1.0]), [1.0, 2.0])
    assert np.array_equal(hessian_scores(loss, np.zeros(2)).per_index, [0.0, 0.0])
    sc = hessian_scores(loss, [1.0, 2.0])
    assert np.allclose(sc.per_index, [4.0, 4.0])
    assert sc.kind == HESSIAN and not sc.has_negative
    # scaled problem: cov -> Lambda cov Lambda, minimizer -> Lambda^{-1} theta
    scaled = loss.scaled(np.array([2.0, 1.0]))
    sc2 = hessian_scores(scaled, scaled.minimizer)
    assert np.allclose(sc2.per_index, [4.0, 4.0], rtol=1e-12)


def test_hessian_unsupported():
    with pytest.raises(UnsupportedOperation):
        hessian_scores(NoHessian(), np.ones(2))


def test_negative_hessian_flagged(caplog):
    class Saddle:
        supports_hessian = True

        def evaluate(self, theta):
            return float(theta[0] ** 2 - theta[1] ** 2)

        def hessian_diag(self, theta):
            return np.array([1.0, -1.0])

    with caplog.at_level("WARNING"):
        sc = hessian_scores(Saddle(), [1.0, 1.0])
    assert sc.has_negative
    assert "negative" in caplog.text


def test_prune_examples():
    th = np.array([0.1, -5.0, 2.0])
    sc = magnitude_scores(th)
    assert np.array_equal(prune(sc, th, 3), th)
    assert np.array_equal(prune(sc, th, 0), np.zeros(3))
    assert np.array_equal(prune(sc, th, 2), [0.0, -5.0, 2.0])
    with pytest.raises(ValueError):
        prune(sc, th, 4)


def test_ties_go_to_lower_index():
    mask = top_s_mask(np.array([1.0, 3.0, 1.0, 3.0, 1.0]), 3)
    assert np.array_equal(mask, [True, True, False, True, False])


def test_groupwise_examples():
    th = np.arange(1.0, 7.0)
    sc = magnitude_scores(th)
    groups = [[0, 1, 2, 3], [4, 5]]
    assert np.array_equal(prune_groupwise(sc, th, groups, 1.0), th)
    assert np.array_equal(prune_groupwise(sc, th, groups, 0.0), np.zeros(6))
    out = prune_groupwise(sc, th, groups, 0.5)
    # direct enumeration: ceil(0.5*4)=2 survivors in the first group, ceil(0.5*2)=1 in the second
    assert np.count_nonzero(out[:4]) == 2 and np.count_nonzero(out[4:]) == 1
    assert np.array_equal(out, [0, 0, 3, 4, 0, 6])


def test_groupwise_rejects_non_partition():
    sc = magnitude_scores(np.ones(4))
    with pytest.raises(StructureError):
        prune_groupwise(sc, np.ones(4), [[0, 1], [1, 2, 3]], 0.5)
    with pytest.raises(StructureError):
        prune_groupwise(sc, np.ones(4), [[0, 1], [2]], 0.5)


def test_group_keep_count_rounding():
    assert group_keep_count(0.1, 30) == 3
    assert group_keep_count(0.01, 9216) == 93
    assert group_keep_count(0.5, 3) == 2


def test_index_set_validation():
    assert np.array_equal(as_index_set([3, 1], 5), [1, 3])
    assert np.array_equal(as_index_set(np.array([True, False, True]), 3), [0, 2])
    with pytest.raises(StructureError):
        as_index_set([1, 1], 5)
    with pytest.raises(StructureError):
        as_index_set([5], 5)
    assert np.array_equal(complement([0, 2], 4), [1, 3])


def test_ni_equals_hi_for_diagonal_population():
    rng = np.random.default_rng(3)
    p = 8
    cov = rng.uniform(0.5, 3.0, p)
    tb = rng.standard_normal(p)
    loss = quad_loss(cov, tb)
    hi = hessian_scores(loss, tb)
    for delta in ([0], [1, 4, 7], list(range(p))):
        ni = natural_importance(loss, tb, np.zeros(p), delta)
        assert ni == pytest.approx(float(np.sum(cov[delta] * tb[delta] ** 2)), abs=1e-10)
        assert ni == pytest.approx(hi.subset(delta), abs=1e-10)


def test_scale_laws_and_argmin_invariance():
    rng = np.random.default_rng(4)
    p = 12
    cov = rng.uniform(0.5, 2.0, p)
    tb = rng.standard_normal(p)
    base = quad_loss(cov, tb)
    ref_hi = hessian_scores(base, tb).per_index
    ref_set = top_s_mask(ref_hi, 5)
    for _ in range(5):
        lam = rng.uniform(0.1, 10.0, p)
        scaled = base.scaled(lam)
        hi = hessian_scores(scaled, scaled.minimizer).per_index
        assert np.allclose(hi, ref_hi, rtol=1e-10, atol=0)
        assert np.allclose(magnitude_scores(scaled.minimizer).per_index, tb**2 / lam**2, rtol=1e-12)
        assert np.array_equal(top_s_mask(hi, 5), ref_set)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=80, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=finite), st.data())
def test_prune_properties(theta, data):
    p = theta.size
    s = data.draw(st.integers(0, p))
    s2 = data.draw(st.integers(s, p))
    sc = magnitude_scores(theta)
    pruned = prune(sc, theta, s)
    assert np.count_nonzero(top_s_mask(sc.per_index, s)) == s
    # idempotence under magnitude scores
    assert np.array_equal(prune(magnitude_scores(pruned), pruned, s), pruned)
    # support monotonicity
    m1, m2 = top_s_mask(sc.per_index, s), top_s_mask(sc.per_index, s2)
    assert not np.any(m1 & ~m2)
    # kept scores dominate dropped ones
    if 0 < s < p:
        assert sc.per_index[m1].min() >= sc.per_index[~m1].max()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 8), min_size=1, max_size=5), st.floats(0, 1), st.integers(0, 10_000))
def test_groupwise_counts(sizes, fraction, seed):
    p = sum(sizes)
    theta = np.random.default_rng(seed).standard_normal(p)
    bounds = np.cumsum([0] + sizes)
    groups = [list(range(a, b)) for a, b in zip(bounds[:-1], bounds[1:])]
    out = prune_groupwise(magnitude_scores(theta), theta, groups, fraction)
    for g, size in zip(groups, sizes):
        assert np.count_nonzero(out[g]) == min(size, math.ceil(round(fraction * size, 9)))
