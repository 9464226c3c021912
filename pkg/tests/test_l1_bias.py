import math

import numpy as np
import pytest
from scipy.optimize import linprog
from scipy.stats import norm

from prune_lab import l1_bias as lb
from prune_lab._random import derive_rng
from prune_lab.errors import ContractError


def closed_form_dist(p, s, R, lam):
    # E dist(h, lam dR)^2 for h ~ N(0, I_p), exact Gaussian integrals
    tail = 2 * ((1 + lam**2) * norm.sf(lam) - lam * norm.pdf(lam))
    return s * (1 + lam**2 / R**2) + (p - s) * tail


def test_spike_bound_examples():
    assert lb.width_bound_spike(1000, 10, 1e6) == pytest.approx(11.0, abs=1e-6)
    assert lb.width_bound_spike(1000, 10, 1.0) == pytest.approx(10 * (1.5 + 2 * math.log(100)), rel=1e-14)
    assert lb.width_bound_spike(1000, 10, 1.0) == pytest.approx(107.10, abs=0.01)
    vals = [lb.width_bound_spike(1000, 10, R) for R in (1, 2, 4, 8, 16, 64, 1e3)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ContractError):
        lb.width_bound_spike(1000, 10, 0.5)
    with pytest.raises(ContractError):
        lb.width_bound_spike(10, 11, 1.0)


def test_general_bound():
    assert lb.width_bound_general(1000, 10, 4, 0, 1, 0) == pytest.approx(10 * (1.5 + 2 * math.log(100) / 16))
    assert lb.width_bound_general(1000, 10, 4, 5, 2, 1) == pytest.approx(93.6853731386576, rel=1e-12)
    one = lb.width_bound_general(1000, 10, 2, 0, 1, 0)
    two = lb.width_bound_general(1000, 10, 2, 0, 2, 0)
    assert two == pytest.approx(2 * one, rel=1e-14)
    with pytest.raises(ContractError):
        lb.width_bound_general(1000, 10, 2, 0, 0.5, 0)


def test_mc_matches_closed_form_at_fixed_lambda():
    p, s, R = 400, 8, 3.0
    for lam in (0.5, 1.5, math.sqrt(2 * math.log(p / s))):
        est = lb.width_mc_estimate(p, s, R, samples=4000, lambda_grid=[lam], seed=2)
        assert abs(est.value - closed_form_dist(p, s, R, lam)) <= 4 * est.std_err


def test_mc_estimate_below_bound():
    for p, s, R in ((1000, 10, 1.0), (1000, 10, 4.0), (500, 5, 16.0), (200, 20, 2.0)):
        est = lb.width_mc_estimate(p, s, R, samples=2000, seed=0)
        assert est.value <= lb.width_bound_spike(p, s, R) + 3 * est.std_err
        assert est.std_err <= 0.02 * est.value
        # the grid minimum tracks the closed-form minimum over the same grid
        exact = min(closed_form_dist(p, s, R, lam) for lam in lb.default_lambda_grid(p, s))
        assert abs(est.value - exact) <= 4 * est.std_err + 1e-9


def test_full_support_width_is_dimension():
    est = lb.width_mc_estimate(50, 50, 1.0, samples=4000, lambda_grid=[0.0], seed=1)
    assert abs(est.value - 50) <= 4 * est.std_err


@pytest.mark.xfail(strict=True, reason="MC width sits well below 2 s ln(p/s) at R=1; see notes")
def test_width_near_classical_rate():
    est = lb.width_mc_estimate(1000, 10, 1.0, samples=2000, seed=0)
    assert abs(est.value / (2 * 10 * math.log(100)) - 1) <= 0.3


def test_covariance_structure():
    cov = lb.make_covariance(30, 4, 6.0, seed=3)
    assert cov.s == 4 and cov.p == 30
    w = np.linalg.eigvalsh(cov.matrix())
    assert w[-1] == pytest.approx(6.0, rel=1e-12)
    assert np.allclose(w[:-1], 1.0, rtol=1e-12)
    root = cov.sqrt()
    assert np.allclose(root @ root, cov.matrix(), atol=1e-12)
    X = cov.sample(100_000, derive_rng(0), root)
    emp = X.T @ X / X.shape[0]
    assert np.linalg.norm(emp - cov.matrix()) / np.linalg.norm(cov.matrix()) < 0.03


def test_covariance_with_extras():
    cov = lb.make_covariance(40, 5, 2.0, seed=1, low_rank_dim=3, tail_kappa=4.0)
    assert np.all((cov.tail_diag >= 0.25) & (cov.tail_diag <= 1.0))
    assert np.linalg.eigvalsh(cov.matrix()).min() >= 0.25 - 1e-12
    with pytest.raises(ContractError):
        lb.SpikedCovariance(np.zeros(5), 2.0)
    with pytest.raises(ContractError):
        lb.SpikedCovariance(np.array([1.0, 0.5]), 2.0)


def test_square_design_recovers_exactly():
    cov = lb.make_covariance(20, 3, 4.0, seed=0)
    inst = lb.make_instance(cov, 20, derive_rng(5))
    theta, ok = lb.basis_pursuit(inst)
    assert ok and lb.recovered(theta, inst.theta_star, ok)


def test_zero_signal():
    X = derive_rng(1).standard_normal((5, 12))
    theta, ok = lb.solve_basis_pursuit(X, np.zeros(5))
    assert ok and np.array_equal(theta, np.zeros(12))


def test_matches_linear_program():
    rng = derive_rng(7)
    n, p = 15, 40
    X = rng.standard_normal((n, p))
    b = rng.standard_normal(n)
    theta, ok = lb.solve_basis_pursuit(X, b, tol=1e-10, max_iters=200_000)
    assert ok
    # independent oracle: theta = u - v, u, v >= 0, minimize sum(u + v)
    res = linprog(np.ones(2 * p), A_eq=np.hstack([X, -X]), b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    assert np.abs(theta).sum() == pytest.approx(res.fun, rel=1e-6)
    assert np.linalg.norm(X @ theta - b) <= 1e-8 * np.linalg.norm(b)
    # no feasible perturbation lowers the l1 norm
    null = np.linalg.svd(X)[2][n:].T
    for _ in range(20):
        alt = theta + null @ rng.standard_normal(p - n) * 0.1
        assert np.abs(alt).sum() >= np.abs(theta).sum() - 1e-9


def test_success_above_twice_classical_rate():
    p, s = 200, 5
    n = 2 * math.ceil(2 * s * math.log(p / s))
    (_, rate), = lb.phase_curve(p, s, 1.0, [n], trials=20, seed=0)
    assert rate >= 0.9


def test_phase_curve_shape():
    curve = lb.phase_curve(100, 4, 1.0, [4, 12, 40], trials=10, seed=3)
    rates = [r for _, r in curve]
    assert rates[0] <= rates[1] <= rates[2]
    assert rates[0] == 0.0 and rates[2] == 1.0
    assert lb.crossing_point(curve) == 40
    assert lb.crossing_point([(5, 0.1)]) is None
    again = lb.phase_curve(100, 4, 1.0, [12], trials=10, seed=3)
    assert again[0] == curve[1]


def test_recovered_requires_convergence():
    th = np.ones(3)
    assert lb.recovered(th, th, True)
    assert not lb.recovered(th, th, False)
    assert not lb.recovered(th + 2e-4, th, True)
