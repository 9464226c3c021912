"""Gaussian linear regression under diagonal feature scaling.

Features are drawn isotropically, ``x ~ N(0, I_p)``, and the learner sees the
scaled features ``Lambda x``.  Labels follow ``y = x^T theta_bar + z``.  In the
over-parameterized regime the minimum-norm interpolator depends on
``Lambda``; in the under-parameterized regime it does not (up to the
reparametrization ``theta -> Lambda^{-1} theta``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._random import derive_rng
from .errors import ContractError, DimensionError, SingularMatrixError
from .importance import as_index_set

GRAM_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class DiagScaling:
    """Positive diagonal ``Lambda``; the scaled covariance is ``Lambda**2``."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise DimensionError("scaling diagonal must be a non-empty 1-D array")
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ContractError("scaling entries must be finite and strictly positive")
        object.__setattr__(self, "diag", d)

    @classmethod
    def identity(cls, p: int) -> "DiagScaling":
        return cls(np.ones(p))

    @property
    def p(self) -> int:
        return self.diag.size

    @property
    def covariance_diag(self) -> np.ndarray:
        return self.diag**2


@dataclass(frozen=True)
class BlockScalingSpec:
    """``Lambda_ii = lam`` on the leading ``head_fraction`` of coordinates."""

    lam: float
    head_fraction: float = 0.10

    def head_size(self, p: int) -> int:
        # round first: 0.1 * 1000 must give 100, not 101
        return math.ceil(round(self.head_fraction * p, 9))

    def build(self, p: int) -> DiagScaling:
        if self.lam <= 0:
            raise ContractError("block scale must be positive")
        if not 0 < self.head_fraction <= 1:
            raise ContractError("head_fraction must lie in (0, 1]")
        d = np.ones(p)
        d[: self.head_size(p)] = self.lam
        return DiagScaling(d)


def block_scaling(p: int, lam: float, head_fraction: float = 0.10) -> DiagScaling:
    return BlockScalingSpec(lam, head_fraction).build(p)


@dataclass
class LinearDataset:
    X: np.ndarray  # already scaled: rows are Lambda x_i
    y: np.ndarray
    ground_truth: np.ndarray
    noise_std: float
    scaling: DiagScaling
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def decaying_ground_truth(p: int) -> np.ndarray:
    """Unit-norm vector with entries proportional to ``1 / (1 + 4 i / p)**2``, i = 1..p."""
    if p < 1:
        raise ContractError("p must be positive")
    i = np.arange(1, p + 1)
    v = 1.0 / (1.0 + 4.0 * i / p) ** 2
    return v / np.linalg.norm(v)


def generate_dataset(p, n, theta_bar, sigma, scaling=None, seed=0, rng=None) -> LinearDataset:
    """Draw ``n`` samples of the realizable model.

    ``rng`` overrides ``seed`` when given (used by the trial loops).
    """
    if p < 1 or n < 1:
        raise ContractError("p and n must be positive")
    if sigma < 0:
        raise ContractError("sigma must be >= 0")
    theta_bar = np.asarray(theta_bar, dtype=float)
    if theta_bar.shape != (p,):
        raise DimensionError(f"theta_bar must have length {p}")
    scaling = scaling if scaling is not None else DiagScaling.identity(p)
    if scaling.p != p:
        raise DimensionError("scaling dimension differs from p")
    rng = rng if rng is not None else derive_rng(seed)
    X = rng.standard_normal((n, p))
    z = rng.standard_normal(n) * sigma
    y = X @ theta_bar + z
    return LinearDataset(X * scaling.diag, y, theta_bar, float(sigma), scaling, seed)


def _min_norm_gram(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    gram = X @ X.T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > GRAM_CONDITION_LIMIT:
        raise SingularMatrixError(f"Gram matrix condition number {cond:.3g} exceeds {GRAM_CONDITION_LIMIT:g}")
    try:
        factor = sla.cho_factor(gram, check_finite=False)
    except np.linalg.LinAlgError:
        gram = gram + 1e-12 * np.trace(gram) / n * np.eye(n)
        factor = sla.cho_factor(gram, check_finite=False)
    return X.T @ sla.cho_solve(factor, y, check_finite=False)


def _least_squares_qr(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= diag.max() / math.sqrt(GRAM_CONDITION_LIMIT):
        raise SingularMatrixError("design is numerically rank deficient")
    return sla.solve_triangular(r, q.T @ y)


def min_norm_solve(X, y) -> np.ndarray:
    """Minimum-norm least-squares solution of ``X theta ~ y``.

    OLS via QR when ``n >= p``; ``X^T (X X^T)^{-1} y`` otherwise.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DimensionError("X must be n x p and y of length n")
    n, p = X.shape
    if n >= p:
        return _least_squares_qr(X, y)
    return _min_norm_gram(X, y)


def min_norm_solution(data: LinearDataset) -> np.ndarray:
    return min_norm_solve(data.X, data.y)


def population_solution(theta_bar, scaling: DiagScaling) -> np.ndarray:
    return np.asarray(theta_bar, dtype=float) / scaling.diag


def population_test_loss(theta, theta_bar, scaling: DiagScaling, sigma: float) -> float:
    """``E[(y - theta^T Lambda x)^2] = ||Lambda theta - theta_bar||^2 + sigma^2``."""
    theta = np.asarray(theta, dtype=float)
    theta_bar = np.asarray(theta_bar, dtype=float)
    if theta.shape != theta_bar.shape or theta.size != scaling.p:
        raise DimensionError("theta, theta_bar and scaling dimensions disagree")
    r = scaling.diag * theta - theta_bar
    return float(r @ r) + sigma**2


def empirical_loss(theta, data: LinearDataset) -> float:
    r = data.y - data.X @ theta
    return float(r @ r) / data.n


def spectral_norm_sq(X, iters: int = 50, seed: int = 0) -> float:
    """Estimate ``||X||^2`` by power iteration on ``X^T X``."""
    X = np.asarray(X, dtype=float)
    v = derive_rng(seed).standard_normal(X.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = X.T @ (X @ v)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        v = w / est
    return est


def gradient_descent_ls(X, y, step=None, tol=1e-10, max_iters=200_000):
    """Plain gradient descent from zero on ``0.5 ||y - X theta||^2``.

    Default step is ``0.9 / ||X||^2`` with the norm from 50 power iterations.
    Stops once ``||y - X theta|| <= tol * ||y||``.  Returns ``(theta, iterations)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if step is None:
        # power iteration underestimates; pad slightly so 0.9/L stays below 1/L
        step = 0.9 / (spectral_norm_sq(X) * 1.01)
    theta = np.zeros(X.shape[1])
    target = tol * np.linalg.norm(y)
    for it in range(max_iters):
        r = y - X @ theta
        if np.linalg.norm(r) <= target:
            return theta, it
        theta += step * (X.T @ r)
    return theta, max_iters


def scaled_pinv_first_entry(X, y, lam: float) -> float:
    """First weight of the pseudo-inverse model when feature 1 is reweighted by ``lam``.

    The model is ``D X^T (X D X^T)^{-1} y`` with ``D = diag(lam, 1, ..., 1)``,
    i.e. the min-norm solution on features ``X D^{1/2}`` mapped back by
    ``D^{1/2}``.  With ``x`` the first column and ``C = (X X^T - x x^T)^{-1}``
    the entry is ``x^T C y / (1/lam + x^T C x)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n >= p:
        raise ContractError("requires an over-parameterized design (n < p)")
    if lam <= 0:
        raise ContractError("lam must be positive")
    rest = X[:, 1:]
    gram = rest @ rest.T
    if np.linalg.cond(gram) > GRAM_CONDITION_LIMIT:
        raise SingularMatrixError("columns 2..p are not full row rank")
    x = X[:, 0]
    cx, cy = np.linalg.solve(gram, np.column_stack([x, y])).T
    return float(x @ cy) / (1.0 / lam + float(x @ cx))


def sparse_scaling_risk_curve(X, theta_bar, delta, lambdas):
    """Population risk of the min-norm solution as the support block is scaled.

    ``X`` holds unscaled features and labels are noiseless, ``y = X theta_bar``.
    For each ``lam`` the support ``delta`` is scaled by ``lam`` (other features
    by 1) and the risk ``||Lambda theta_hat - theta_bar||^2`` is returned as
    ``(lam, risk)`` pairs in input order.

    Solved through an SVD least-squares routine: very large ``lam`` makes the
    Gram matrix too ill-conditioned for the Cholesky path.
    """
    X = np.asarray(X, dtype=float)
    theta_bar = np.asarray(theta_bar, dtype=float)
    n, p = X.shape
    idx = as_index_set(delta, p)
    off = np.ones(p, dtype=bool)
    off[idx] = False
    if np.any(theta_bar[off] != 0):
        raise ContractError("theta_bar has nonzeros outside delta")
    if idx.size > n:
        raise ContractError("need n >= |delta|")
    y = X @ theta_bar
    out = []
    for lam in lambdas:
        d = np.ones(p)
        d[idx] = lam
        theta_hat = np.linalg.lstsq(X * d, y, rcond=None)[0]
        r = d * theta_hat - theta_bar
        out.append((float(lam), float(r @ r)))
    return out
