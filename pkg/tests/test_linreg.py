import numpy as np
import pytest

from prune_lab.errors import ContractError, DimensionError, SingularMatrixError
from prune_lab.linreg import (BlockScalingSpec, DiagScaling, block_scaling, decaying_ground_truth,
                              generate_dataset, gradient_descent_ls, min_norm_solution, min_norm_solve,
                              population_solution, population_test_loss, scaled_pinv_first_entry,
                              sparse_scaling_risk_curve)


def test_diag_scaling_validation():
    with pytest.raises(ContractError):
        DiagScaling(np.array([1.0, 0.0]))
    with pytest.raises(DimensionError):
        DiagScaling(np.ones((2, 2)))


def test_block_scaling_head():
    d = block_scaling(1000, 5.0).diag
    assert np.all(d[:100] == 5.0) and np.all(d[100:] == 1.0)
    assert BlockScalingSpec(2.0, 0.10).head_size(30) == 3
    assert BlockScalingSpec(2.0, 0.10).head_size(35) == 4


def test_generate_identity_noiseless():
    e1 = np.zeros(6)
    e1[0] = 1.0
    data = generate_dataset(6, 10, e1, 0.0, seed=3)
    assert np.array_equal(data.y, data.X[:, 0])


def test_generate_deterministic():
    tb = decaying_ground_truth(20)
    a = generate_dataset(20, 5, tb, 0.1, block_scaling(20, 3.0), seed=9)
    b = generate_dataset(20, 5, tb, 0.1, block_scaling(20, 3.0), seed=9)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)


def test_generate_label_model():
    tb = decaying_ground_truth(8)
    sc = DiagScaling(np.linspace(0.5, 3.0, 8))
    data = generate_dataset(8, 50, tb, 0.0, sc, seed=1)
    assert np.allclose(data.y, (data.X / sc.diag) @ tb, atol=1e-12)


def test_scaled_covariance_moments():
    sc = DiagScaling(np.array([0.5, 1.0, 2.0, 3.0]))
    data = generate_dataset(4, 100_000, np.zeros(4), 0.0, sc, seed=2)
    emp = np.mean(data.X**2, axis=0)
    assert np.all(np.abs(emp / sc.diag**2 - 1) < 0.02)


def test_default_grid_configuration():
    p, kappa = 1000, 5 / 3
    n = round(p / kappa)
    assert n == 600
    tb = decaying_ground_truth(p)
    data = generate_dataset(p, n, tb, 0.1, seed=0)
    assert data.X.shape == (600, 1000)


def test_decaying_ground_truth():
    v = decaying_ground_truth(50)
    assert abs(np.linalg.norm(v) - 1) <= 1e-12
    assert np.all(np.diff(v) < 0)
    v2 = decaying_ground_truth(2)
    raw = np.array([1 / 9, 1 / 25])
    assert np.allclose(v2, raw / np.linalg.norm(raw), rtol=1e-14)


def test_min_norm_interpolates():
    tb = decaying_ground_truth(50)
    data = generate_dataset(50, 20, tb, 0.1, block_scaling(50, 4.0), seed=4)
    th = min_norm_solution(data)
    assert np.linalg.norm(data.y - data.X @ th) <= 1e-8 * np.linalg.norm(data.y)
    assert np.allclose(th, np.linalg.pinv(data.X) @ data.y, rtol=1e-8, atol=1e-12)


def test_min_norm_hand_example():
    assert np.allclose(min_norm_solve(np.array([[1.0, 1.0]]), np.array([2.0])), [1.0, 1.0], atol=1e-14)


def test_ols_reparametrization():
    tb = decaying_ground_truth(10)
    lam = DiagScaling(np.linspace(0.5, 4.0, 10))
    raw = generate_dataset(10, 40, tb, 0.2, seed=5)
    th_raw = min_norm_solve(raw.X, raw.y)
    th_scaled = min_norm_solve(raw.X * lam.diag, raw.y)
    assert np.allclose(th_scaled, th_raw / lam.diag, rtol=1e-8)
    # predictions unchanged in the under-parameterized regime
    assert np.allclose((raw.X * lam.diag) @ th_scaled, raw.X @ th_raw, rtol=1e-8, atol=1e-12)


def test_over_parameterized_scale_dependence():
    tb = decaying_ground_truth(40)
    raw = generate_dataset(40, 15, tb, 0.1, seed=6)
    lam = block_scaling(40, 5.0)
    th = min_norm_solve(raw.X, raw.y)
    th_l = min_norm_solve(raw.X * lam.diag, raw.y)
    assert np.linalg.norm(lam.diag * th_l - th) > 1e-6


def test_singular_design():
    X = np.ones((3, 5))
    with pytest.raises(SingularMatrixError):
        min_norm_solve(X, np.ones(3))
    with pytest.raises(SingularMatrixError):
        min_norm_solve(np.ones((6, 2)), np.ones(6))


def test_population_solution_and_loss():
    tb = np.array([1.0, 2.0])
    lam = DiagScaling(np.array([2.0, 1.0]))
    sol = population_solution(tb, lam)
    assert np.allclose(sol, [0.5, 2.0])
    assert np.array_equal(population_solution(tb, DiagScaling.identity(2)), tb)
    assert population_test_loss(sol, tb, lam, 0.3) == pytest.approx(0.09, abs=1e-15)
    unit = decaying_ground_truth(7)
    assert population_test_loss(np.zeros(7), unit, DiagScaling.identity(7), 0.1) == pytest.approx(1.01, abs=1e-12)


def test_population_loss_monte_carlo():
    rng = np.random.default_rng(7)
    p = 5
    tb = rng.standard_normal(p)
    lam = DiagScaling(rng.uniform(0.5, 2.0, p))
    th = rng.standard_normal(p)
    sigma = 0.4
    x = rng.standard_normal((1_000_000, p))
    y = x @ tb + sigma * rng.standard_normal(x.shape[0])
    mc = float(np.mean((y - (x * lam.diag) @ th) ** 2))
    assert population_test_loss(th, tb, lam, sigma) == pytest.approx(mc, rel=0.01)


def test_gradient_descent_matches_min_norm():
    tb = decaying_ground_truth(30)
    data = generate_dataset(30, 12, tb, 0.1, block_scaling(30, 3.0), seed=8)
    th_gd, its = gradient_descent_ls(data.X, data.y)
    assert its < 200_000
    assert np.linalg.norm(th_gd - min_norm_solution(data)) <= 1e-6


def _first_entry_oracle(X, y, lam):
    d = np.ones(X.shape[1])
    d[0] = lam
    return float((d[:, None] * X.T @ np.linalg.inv(X @ np.diag(d) @ X.T) @ y)[0])


def test_scaled_pinv_first_entry():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((3, 6))
    y = rng.standard_normal(3)
    for lam in (0.5, 1.0, 2.0, 4.0):
        assert scaled_pinv_first_entry(X, y, lam) == pytest.approx(_first_entry_oracle(X, y, lam), rel=1e-10)
    vals = [abs(scaled_pinv_first_entry(X, y, lam)) for lam in (0.5, 1.0, 2.0, 4.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert abs(scaled_pinv_first_entry(X, y, 1e-12)) < 1e-10
    # large-lambda limit x^T C y / x^T C x
    x = X[:, 0]
    C = np.linalg.inv(X @ X.T - np.outer(x, x))
    limit = (x @ C @ y) / (x @ C @ x)
    assert scaled_pinv_first_entry(X, y, 1e8) == pytest.approx(limit, rel=1e-6)
    assert _first_entry_oracle(X, y, 1e8) == pytest.approx(limit, rel=1e-6)


def test_scaled_pinv_contracts():
    with pytest.raises(ContractError):
        scaled_pinv_first_entry(np.ones((3, 3)), np.ones(3), 1.0)
    with pytest.raises(ContractError):
        scaled_pinv_first_entry(np.ones((2, 4)), np.ones(2), 0.0)
    X = np.zeros((2, 4))
    X[:, 0] = 1.0
    with pytest.raises(SingularMatrixError):
        scaled_pinv_first_entry(X, np.ones(2), 1.0)


def test_sparse_scaling_risk_curve():
    rng = np.random.default_rng(12)
    n, p, k = 20, 60, 5
    X = rng.standard_normal((n, p))
    tb = np.zeros(p)
    tb[:k] = rng.standard_normal(k)
    lams = [0.5, 1.0, 2.0, 4.0, 8.0]
    curve = sparse_scaling_risk_curve(X, tb, np.arange(k), lams)
    assert [lam for lam, _ in curve] == lams
    risks = [r for _, r in curve]
    assert all(a > b for a, b in zip(risks, risks[1:]))
    (_, big), = sparse_scaling_risk_curve(X, tb, np.arange(k), [1e6])
    assert big <= 1e-6


def test_sparse_risk_exact_when_support_fills_design():
    rng = np.random.default_rng(13)
    n = 6
    X = rng.standard_normal((n, n))
    tb = rng.standard_normal(n)
    for _, r in sparse_scaling_risk_curve(X, tb, np.arange(n), [0.5, 1.0, 3.0]):
        assert r <= 1e-20


def test_sparse_risk_contracts():
    X = np.ones((4, 8))
    tb = np.zeros(8)
    tb[5] = 1.0
    with pytest.raises(ContractError):
        sparse_scaling_risk_curve(X, tb, [0, 1], [1.0])
    with pytest.raises(ContractError):
        sparse_scaling_risk_curve(X, np.zeros(8), list(range(5)), [1.0])
