"""Auxiliary-distribution predictor for pruning the min-norm interpolator.

For ``kappa = p / n > 1`` the minimum-norm least-squares solution under
scaling ``Lambda`` behaves like the auxiliary vector

    theta_aux = Lambda^{-1} [(1 - zeta) * theta_bar + gamma * h],  h ~ N(0, I/p)

whose parameters come from a scalar fixed point ``Xi``.  Pruning statistics of
``theta_aux`` (cheap to sample) predict those of the real solution, which
:func:`empirical_prune_loss` measures directly for comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._random import derive_rng
from .errors import ContractError, DegenerateRegimeError, DomainError
from .importance import top_s_mask
from .linreg import DiagScaling, generate_dataset, min_norm_solution

MP = "MP"
HP = "HP"
METHODS = (MP, HP)

SOLVE_TOL = 1e-12
MAX_BISECTIONS = 200


@dataclass(frozen=True)
class AuxParams:
    xi: float
    gamma_bar: float  # the scalar Gamma
    zeta: np.ndarray
    gamma: np.ndarray
    kappa: float
    sigma: float
    scaling: DiagScaling
    theta_bar: np.ndarray
    residual: float = 0.0
    iterations: int = 0

    @property
    def p(self) -> int:
        return self.theta_bar.size

    @property
    def mean(self) -> np.ndarray:
        """``E[theta_aux]``."""
        return (1.0 - self.zeta) * self.theta_bar / self.scaling.diag


@dataclass(frozen=True)
class AuxSample:
    theta_aux: np.ndarray
    h: np.ndarray


def fixed_point_map(xi: float, kappa: float, lam_sq: np.ndarray) -> float:
    """``(kappa/p) * sum 1 / (1 + 1/(xi * Lambda_ii^2))``, increasing in ``xi``."""
    t = xi * lam_sq
    return kappa * float(np.mean(t / (1.0 + t)))


def solve_aux(kappa: float, sigma: float, scaling: DiagScaling, theta_bar) -> AuxParams:
    """Solve for ``(Xi, Gamma, zeta, gamma)``.

    ``Xi`` is found by bisection; the map ranges over ``(0, kappa)`` so the
    equation ``map(Xi) = 1`` has a root exactly when ``kappa > 1``.
    """
    if not kappa > 1:
        raise DomainError(f"kappa = p/n must exceed 1, got {kappa}")
    if sigma < 0:
        raise ContractError("sigma must be >= 0")
    theta_bar = np.asarray(theta_bar, dtype=float)
    if theta_bar.shape != (scaling.p,):
        raise ContractError("theta_bar and scaling dimensions disagree")
    lam_sq = scaling.diag**2

    lo, hi = 1e-12, 1.0
    while fixed_point_map(hi, kappa, lam_sq) < 1.0:
        hi *= 2.0
        if hi > 1e300:
            raise DegenerateRegimeError("could not bracket the fixed point")
    xi, residual, it = hi, abs(fixed_point_map(hi, kappa, lam_sq) - 1.0), 0
    for it in range(1, MAX_BISECTIONS + 1):
        xi = 0.5 * (lo + hi)
        val = fixed_point_map(xi, kappa, lam_sq) - 1.0
        residual = abs(val)
        if residual <= SOLVE_TOL or hi - lo <= 4 * np.finfo(float).eps * xi:
            break
        if val < 0:
            lo = xi
        else:
            hi = xi

    t = xi * lam_sq
    ratio = t / (1.0 + t)  # 1 / (1 + (Xi Lambda_ii^2)^{-1})
    zeta = 1.0 / (1.0 + t)
    denom = kappa * (1.0 - kappa * float(np.mean(ratio**2)))
    if not denom > 0:
        raise DegenerateRegimeError(f"Gamma denominator is {denom:.3g}")
    gamma_bar = (sigma**2 + float(np.sum(zeta**2 * theta_bar**2))) / denom
    gamma = kappa * math.sqrt(gamma_bar) * ratio
    return AuxParams(xi, gamma_bar, zeta, gamma, float(kappa), float(sigma), scaling,
                     theta_bar, residual, it)


def solve_aux_identity(kappa: float, sigma: float, theta_bar) -> AuxParams:
    """Closed form of :func:`solve_aux` for ``Lambda = I``."""
    if not kappa > 1:
        raise DomainError(f"kappa = p/n must exceed 1, got {kappa}")
    theta_bar = np.asarray(theta_bar, dtype=float)
    p = theta_bar.size
    xi = 1.0 / (kappa - 1.0)
    gamma_bar = sigma**2 / (kappa - 1.0) + (kappa - 1.0) * float(theta_bar @ theta_bar) / kappa**2
    zeta = np.full(p, (kappa - 1.0) / kappa)
    gamma = np.full(p, math.sqrt(gamma_bar))
    return AuxParams(xi, gamma_bar, zeta, gamma, float(kappa), float(sigma),
                     DiagScaling.identity(p), theta_bar)


def aux_residual(params: AuxParams) -> float:
    return abs(fixed_point_map(params.xi, params.kappa, params.scaling.diag**2) - 1.0)


def _draw_h(p: int, count: int, rng) -> np.ndarray:
    return rng.standard_normal((count, p)) / math.sqrt(p)


def _theta_aux(params: AuxParams, h: np.ndarray) -> np.ndarray:
    return ((1.0 - params.zeta) * params.theta_bar + params.gamma * h) / params.scaling.diag


def sample_aux(params: AuxParams, seed: int = 0) -> AuxSample:
    h = _draw_h(params.p, 1, derive_rng(seed))[0]
    return AuxSample(_theta_aux(params, h), h)


def sample_aux_batch(params: AuxParams, count: int, seed: int = 0) -> np.ndarray:
    """``count`` independent draws of ``theta_aux`` as rows."""
    return _theta_aux(params, _draw_h(params.p, count, derive_rng(seed)))


def pruned_excess_risk(thetas: np.ndarray, scaling: DiagScaling, theta_bar, s: int, method: str) -> np.ndarray:
    """``||Lambda Pi_s(theta) - theta_bar||^2`` row by row.

    MP keeps the largest ``theta_i^2``; HP keeps the largest
    ``Lambda_ii^2 theta_i^2``, the Hessian saliency for covariance ``Lambda^2``.
    Equivalently HP magnitude-prunes ``Lambda theta``.
    """
    if method not in METHODS:
        raise ContractError(f"method must be one of {METHODS}")
    scaled = thetas * scaling.diag
    score = thetas**2 if method == MP else scaled**2
    kept = np.where(top_s_mask(score, s), scaled, 0.0)
    return np.sum((kept - theta_bar) ** 2, axis=-1)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def _check_s(s, p):
    if not 1 <= s <= p:
        raise ContractError(f"s must lie in [1, {p}], got {s}")


def predict_prune_curve(params: AuxParams, s_values, method: str, mc_samples: int = 2000, seed: int = 0):
    """Predicted test loss of MP/HP at each sparsity, sharing one set of draws.

    Returns a list of ``(mean, standard_error)``.
    """
    if mc_samples < 1:
        raise ContractError("mc_samples must be >= 1")
    for s in s_values:
        _check_s(s, params.p)
    thetas = sample_aux_batch(params, mc_samples, seed)
    return [_mean_se(pruned_excess_risk(thetas, params.scaling, params.theta_bar, s, method) + params.sigma**2)
            for s in s_values]


def predict_prune_loss(params: AuxParams, s: int, method: str, mc_samples: int = 2000, seed: int = 0):
    return predict_prune_curve(params, [s], method, mc_samples, seed)[0]


def empirical_prune_curve(p, n, theta_bar, sigma, scaling, s_values, methods=METHODS, trials=50, seed=0):
    """Prune the actual min-norm solution over ``trials`` fresh datasets.

    Returns ``{method: [(mean, standard_error) per s]}``.  Trial ``t`` uses
    the stream ``derive_rng(seed, t)``; every method sees the same datasets.
    """
    if trials < 1:
        raise ContractError("trials must be >= 1")
    for s in s_values:
        _check_s(s, p)
    theta_bar = np.asarray(theta_bar, dtype=float)
    sols = np.empty((trials, p))
    for t in range(trials):
        data = generate_dataset(p, n, theta_bar, sigma, scaling, rng=derive_rng(seed, t))
        sols[t] = min_norm_solution(data)
    out = {}
    for method in methods:
        out[method] = [_mean_se(pruned_excess_risk(sols, scaling, theta_bar, s, method) + sigma**2)
                       for s in s_values]
    return out


def empirical_prune_loss(p, n, theta_bar, sigma, scaling, s, method, trials=50, seed=0):
    return empirical_prune_curve(p, n, theta_bar, sigma, scaling, [s], [method], trials, seed)[method][0]
