"""l1 recovery under covariance spiked along the sign pattern of the signal.

With ``Sigma_R = I + ((R - 1)/s) s s^T`` (``s`` the sign vector of the
s-sparse target), the Gaussian width of the l1 descent cone shrinks as ``R``
grows, and so does the number of samples basis pursuit needs.  This module
evaluates the width bounds, estimates the subdifferential distance
``D_lam`` they are proved through, solves basis pursuit and traces
empirical phase transitions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._random import derive_rng
from .errors import ContractError, DimensionError

SUCCESS_TOL = 1e-4
BP_TOL = 1e-8
BP_MAX_ITERS = 50_000
BP_RELAXATION = 1.8


@dataclass(frozen=True)
class SpikedCovariance:
    """``((R-1)/s) s s^T + F F^T + diag(tail)``; tail defaults to ones."""

    sign_pattern: np.ndarray
    R: float
    low_rank_factor: np.ndarray | None = None
    tail_diag: np.ndarray | None = None

    def __post_init__(self):
        sg = np.asarray(self.sign_pattern, dtype=float)
        if sg.ndim != 1 or not np.all(np.isin(sg, (-1.0, 0.0, 1.0))):
            raise ContractError("sign pattern must be a vector over {-1, 0, 1}")
        if not np.any(sg):
            raise ContractError("sign pattern has empty support")
        if self.R < 1:
            raise ContractError("spike R must be >= 1")
        object.__setattr__(self, "sign_pattern", sg)
        if self.low_rank_factor is not None:
            F = np.asarray(self.low_rank_factor, dtype=float)
            if F.ndim != 2 or F.shape[0] != sg.size:
                raise DimensionError("low-rank factor must be p x d")
            object.__setattr__(self, "low_rank_factor", F)
        if self.tail_diag is not None:
            t = np.asarray(self.tail_diag, dtype=float)
            if t.shape != sg.shape or np.any(t <= 0) or np.any(t > 1):
                raise ContractError("tail diagonal must lie in (0, 1]")
            object.__setattr__(self, "tail_diag", t)

    @property
    def p(self) -> int:
        return self.sign_pattern.size

    @property
    def s(self) -> int:
        return int(np.count_nonzero(self.sign_pattern))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.sign_pattern)

    def matrix(self) -> np.ndarray:
        sg = self.sign_pattern
        tail = np.ones(self.p) if self.tail_diag is None else self.tail_diag
        cov = np.diag(tail) + (self.R - 1.0) / self.s * np.outer(sg, sg)
        if self.low_rank_factor is not None:
            cov += self.low_rank_factor @ self.low_rank_factor.T
        return cov

    def sqrt(self) -> np.ndarray:
        """Symmetric square root by eigendecomposition."""
        w, U = np.linalg.eigh(self.matrix())
        if w.min() <= 0:
            raise ContractError("covariance is not positive definite")
        return (U * np.sqrt(w)) @ U.T

    def sample(self, n: int, rng, root=None) -> np.ndarray:
        root = self.sqrt() if root is None else root
        return rng.standard_normal((n, self.p)) @ root


def random_sign_pattern(p: int, s: int, rng) -> np.ndarray:
    if not 1 <= s <= p:
        raise ContractError(f"need 1 <= s <= p, got s={s}, p={p}")
    sg = np.zeros(p)
    support = np.sort(rng.choice(p, s, replace=False))
    sg[support] = rng.choice([-1.0, 1.0], s)
    return sg


def make_covariance(p, s, R, seed=0, low_rank_dim=0, tail_kappa=1.0) -> SpikedCovariance:
    """Spiked covariance with an optional random low-rank part and tail.

    The tail diagonal is uniform on ``[1/tail_kappa, 1]`` so that
    ``I >= Sigma_tail >= I / tail_kappa``.
    """
    if tail_kappa < 1:
        raise ContractError("tail_kappa must be >= 1")
    rng = derive_rng(seed)
    sg = random_sign_pattern(p, s, rng)
    F = rng.standard_normal((p, low_rank_dim)) / math.sqrt(p) if low_rank_dim > 0 else None
    tail = rng.uniform(1.0 / tail_kappa, 1.0, p) if tail_kappa > 1 else None
    return SpikedCovariance(sg, float(R), F, tail)


@dataclass
class BPInstance:
    X: np.ndarray
    theta_star: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def make_instance(cov: SpikedCovariance, n: int, rng, root=None) -> BPInstance:
    """``theta*`` follows the covariance's sign pattern with magnitudes in [0.5, 1.5]."""
    if n < 1:
        raise ContractError("n must be positive")
    theta = cov.sign_pattern * rng.uniform(0.5, 1.5, cov.p)
    X = cov.sample(n, rng, root)
    return BPInstance(X, theta, X @ theta)


# ----------------------------------------------------------------------------
# width bounds


def _check_ps(p, s):
    if not 1 <= s <= p:
        raise ContractError(f"need 1 <= s <= p, got s={s}, p={p}")


def width_bound_spike(p: int, s: int, R: float) -> float:
    """Upper bound on the squared width of the l1 cone under ``Sigma_R``."""
    _check_ps(p, s)
    if R < 1:
        raise ContractError("R must be >= 1")
    return min(s * (1.5 + 2 * math.log(p / s) / R**2), s * (1 + 2 * math.log(p) / R**2) + 1)


def width_bound_general(p, s, R, d_rank, kappa_tail, t) -> float:
    """Sample size ``(sqrt(d) + sqrt(kappa s (3/2 + 2 ln(p/s)/R^2)) + t)^2``."""
    _check_ps(p, s)
    if R < 1 or d_rank < 0 or kappa_tail < 1 or t < 0:
        raise ContractError("need R >= 1, d_rank >= 0, kappa_tail >= 1 and t >= 0")
    core = kappa_tail * s * (1.5 + 2 * math.log(p / s) / R**2)
    return (math.sqrt(d_rank) + math.sqrt(core) + t) ** 2


def default_lambda_grid(p: int, s: int, points: int = 81) -> np.ndarray:
    special = [math.sqrt(2 * math.log(p / s)) if p > s else 0.0, math.sqrt(2 * math.log(p))]
    grid = np.linspace(0.0, math.sqrt(2 * math.log(p)) + 1.0, points)
    return np.unique(np.concatenate([grid, special]))


@dataclass(frozen=True)
class WidthEstimate:
    value: float
    std_err: float
    best_lambda: float

    def __float__(self) -> float:
        return self.value


def subdiff_distance_sq(h: np.ndarray, s: int, R: float, lam: float) -> np.ndarray:
    """``dist(h, lam * dR)^2`` row by row, support in the first ``s`` columns.

    The sign pattern is taken as all ones on the support, which loses nothing
    because ``h`` is symmetric.
    """
    on = np.sum((h[..., :s] - lam / R) ** 2, axis=-1)
    off = np.sum(np.maximum(np.abs(h[..., s:]) - lam, 0.0) ** 2, axis=-1)
    return on + off


def width_mc_estimate(p, s, R, samples=2000, lambda_grid=None, seed=0) -> WidthEstimate:
    """Monte-Carlo ``min over lam of E dist(h, lam dR)^2`` with one set of draws."""
    _check_ps(p, s)
    if samples < 1:
        raise ContractError("samples must be >= 1")
    grid = default_lambda_grid(p, s) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ContractError("lambda grid is empty")
    h = derive_rng(seed).standard_normal((samples, p))
    best = None
    for lam in grid:
        d = subdiff_distance_sq(h, s, R, lam)
        mean = float(d.mean())
        if best is None or mean < best[0]:
            se = float(d.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
            best = (mean, se, float(lam))
    return WidthEstimate(*best)


# ----------------------------------------------------------------------------
# basis pursuit


def _soft(v, gamma):
    return np.sign(v) * np.maximum(np.abs(v) - gamma, 0.0)


def solve_basis_pursuit(X, b, tol=BP_TOL, max_iters=BP_MAX_ITERS, relaxation=BP_RELAXATION):
    """``min ||theta||_1 s.t. X theta = b`` by relaxed Douglas-Rachford splitting.

    The affine projection uses a Cholesky factor of ``X X^T``.  Stops when the
    shrinkage iterate is feasible to ``tol ||b||`` and the projected iterate
    moves by at most ``tol`` (relative).  Returns ``(theta, converged)``.
    """
    X = np.asarray(X, dtype=float)
    b = np.asarray(b, dtype=float)
    n, p = X.shape
    if b.shape != (n,):
        raise DimensionError("b must have one entry per row of X")
    if not 0 < relaxation < 2:
        raise ContractError("relaxation must lie in (0, 2)")
    nb = float(np.linalg.norm(b))
    if nb == 0:
        return np.zeros(p), True
    factor = sla.cho_factor(X @ X.T)

    def project(z):
        return z - X.T @ sla.cho_solve(factor, X @ z - b)

    x_ls = X.T @ sla.cho_solve(factor, b)
    gamma = 0.1 * float(np.abs(x_ls).max())
    z = np.zeros(p)
    x_prev = None
    y = z
    for _ in range(max_iters):
        x = project(z)
        y = _soft(2 * x - z, gamma)
        z = z + relaxation * (y - x)
        if x_prev is not None:
            feasible = np.linalg.norm(X @ y - b) <= tol * nb
            if feasible and np.linalg.norm(x - x_prev) <= tol * max(1.0, float(np.linalg.norm(x))):
                return y, True
        x_prev = x
    return y, False


def basis_pursuit(instance: BPInstance, tol=BP_TOL, max_iters=BP_MAX_ITERS, relaxation=BP_RELAXATION):
    return solve_basis_pursuit(instance.X, instance.b, tol, max_iters, relaxation)


def recovered(theta_hat, theta_star, converged) -> bool:
    return bool(converged and np.max(np.abs(theta_hat - theta_star)) <= SUCCESS_TOL)


def phase_curve(p, s, R, n_grid, trials=50, seed=0, tol=BP_TOL, max_iters=BP_MAX_ITERS):
    """Success rate of basis pursuit at each ``n``, as ``(n, rate)`` pairs.

    The sign pattern (hence the covariance and its root) is drawn once from
    ``seed``; trial ``t`` at sample size ``n`` draws from stream ``(seed, 1, n, t)``.
    """
    n_grid = list(n_grid)
    if not n_grid or trials < 1:
        raise ContractError("need a nonempty n grid and trials >= 1")
    cov = make_covariance(p, s, R, seed=seed)
    root = cov.sqrt()
    out = []
    for n in n_grid:
        wins = 0
        for t in range(trials):
            inst = make_instance(cov, int(n), derive_rng(seed, 1, int(n), t), root)
            theta, ok = basis_pursuit(inst, tol, max_iters)
            wins += recovered(theta, inst.theta_star, ok)
        out.append((int(n), wins / trials))
    return out


def crossing_point(curve, level=0.9):
    """Smallest ``n`` whose success rate reaches ``level``; ``None`` if never."""
    for n, rate in curve:
        if rate >= level:
            return n
    return None
