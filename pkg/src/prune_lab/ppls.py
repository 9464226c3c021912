"""Block linear regression as a testbed for per-block PL/smoothness bounds.

The loss is ``L(theta) = 0.5 ||y - sum_i X_i theta_i||^2``.  Block ``i`` has
smoothness ``L_i = ||X_i||^2`` and PL constant ``mu_i = sigma_min(X_i)^2``
(positive because every block is wide, ``p_i >= n``).  With ``L = sum L_i``
and ``mu = sum mu_i``, gradient descent with ``eta <= 1/L`` contracts the loss
by ``(1 - eta mu)`` per step, and a block with small ``L_i`` relative to
``mu`` barely moves, so resetting it to its init costs little.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._random import derive_rng
from .errors import ContractError, DimensionError, DivergenceError, UnsupportedOperation

CONVERGENCE_RTOL = 1e-12
MAX_ITERS = 1_000_000
# rounding slack used when comparing recorded values with bounds
BOUND_SLACK = 1e-9


@dataclass
class PPLSBlocks:
    designs: list
    block_sets: list
    L_per_block: np.ndarray
    mu_per_block: np.ndarray
    mu_stacked: float  # sigma_min(X)^2 of the stacked design, diagnostics only

    @property
    def n(self) -> int:
        return self.designs[0].shape[0]

    @property
    def p(self) -> int:
        return sum(X.shape[1] for X in self.designs)

    @property
    def num_blocks(self) -> int:
        return len(self.designs)

    @property
    def L_total(self) -> float:
        return float(self.L_per_block.sum())

    @property
    def mu_total(self) -> float:
        return float(self.mu_per_block.sum())

    @property
    def X(self) -> np.ndarray:
        return np.hstack(self.designs)

    def kappa(self, i: int) -> float:
        """Condition ratio ``L_i / mu`` used by the upper bounds."""
        return float(self.L_per_block[i] / self.mu_total)

    def kappa_tilde(self, i: int) -> float:
        """Ratio ``mu_i / L`` used by the converse bounds."""
        return float(self.mu_per_block[i] / self.L_total)


def blocks_from_designs(designs) -> PPLSBlocks:
    designs = [np.asarray(X, dtype=float) for X in designs]
    if not designs:
        raise ContractError("need at least one block")
    n = designs[0].shape[0]
    if any(X.ndim != 2 or X.shape[0] != n for X in designs):
        raise DimensionError("every block design must be n x p_i with the same n")
    if any(X.shape[1] < n for X in designs):
        raise ContractError("every block needs p_i >= n")
    L, mu, sets, start = [], [], [], 0
    for X in designs:
        sv = np.linalg.svd(X, compute_uv=False)
        L.append(sv[0] ** 2)
        mu.append(sv[n - 1] ** 2)
        sets.append(np.arange(start, start + X.shape[1]))
        start += X.shape[1]
    sv_all = np.linalg.svd(np.hstack(designs), compute_uv=False)
    blocks = PPLSBlocks(designs, sets, np.array(L), np.array(mu), float(sv_all[n - 1] ** 2))
    if np.any(blocks.mu_per_block <= 0):
        raise ContractError("a block design is rank deficient (mu_i = 0)")
    return blocks


def build_blocks(n: int, block_dims, seed: int = 0, column_scales=None) -> PPLSBlocks:
    """Standard Gaussian block designs, block ``i`` multiplied by ``column_scales[i]``."""
    block_dims = list(block_dims)
    if n < 1:
        raise ContractError("n must be positive")
    if column_scales is None:
        column_scales = [1.0] * len(block_dims)
    if len(column_scales) != len(block_dims):
        raise ContractError("one column scale per block")
    for pi in block_dims:
        if pi < n:
            raise ContractError(f"block width {pi} is smaller than n={n}")
    rng = derive_rng(seed)
    designs = [c * rng.standard_normal((n, pi)) for pi, c in zip(block_dims, column_scales)]
    return blocks_from_designs(designs)


def block_loss(blocks: PPLSBlocks, y, theta) -> float:
    r = np.asarray(y, dtype=float) - blocks.X @ theta
    return 0.5 * float(r @ r)


def min_norm_limit(blocks: PPLSBlocks, y, theta0=None) -> np.ndarray:
    """Point GD converges to from ``theta0``: ``theta0 + X^+ (y - X theta0)``."""
    X = blocks.X
    theta0 = np.zeros(blocks.p) if theta0 is None else np.asarray(theta0, dtype=float)
    return theta0 + np.linalg.pinv(X) @ (np.asarray(y, dtype=float) - X @ theta0)


@dataclass
class TrajectoryRecord:
    eta: float
    losses: np.ndarray  # (T+1,)
    distances: np.ndarray  # (T+1, D) squared block distance to init
    ni_block: np.ndarray  # (T+1, D) NI of resetting block i to init
    ni_rest: np.ndarray  # (T+1, D) NI of resetting every other block to init
    grad_sq: np.ndarray  # (T+1,) ||grad L||^2
    block_grad_sq: np.ndarray  # (T+1, D)
    theta0: np.ndarray
    theta_final: np.ndarray
    converged: bool

    @property
    def iterations(self) -> int:
        return self.losses.size - 1

    @property
    def initial_loss(self) -> float:
        return float(self.losses[0])


def run_gd(blocks: PPLSBlocks, y, eta=None, max_iters: int = MAX_ITERS, theta0=None) -> TrajectoryRecord:
    """Full-batch gradient descent recording the quantities the bounds need.

    Stops once ``L(theta) <= 1e-12 L(theta0)`` or after ``max_iters`` steps.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (blocks.n,):
        raise DimensionError(f"y must have length {blocks.n}")
    L = blocks.L_total
    if eta is None:
        eta = 1.0 / L
    if not 0 < eta <= 1.0 / L * (1 + 1e-12):
        raise ContractError(f"step {eta:.6g} violates eta <= 1/L = {1.0 / L:.6g}")
    theta0 = np.zeros(blocks.p) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    if theta0.shape != (blocks.p,):
        raise DimensionError(f"theta0 must have length {blocks.p}")

    X = blocks.X
    sets = blocks.block_sets
    designs = blocks.designs
    r0 = y - X @ theta0
    loss0 = 0.5 * float(r0 @ r0)
    # round-off floor: below this the loss is numerically zero
    floor = 1e-28 * max(1.0, float(y @ y))
    target = max(CONVERGENCE_RTOL * loss0, floor)

    theta = theta0.copy()
    losses, dists, ni_in, ni_out, gsq, bgsq = [], [], [], [], [], []

    def record(r, loss):
        g = X.T @ r  # minus the gradient
        d2, nin, nout, bg = [], [], [], []
        for Xi, idx in zip(designs, sets):
            di = theta[idx] - theta0[idx]
            u = Xi @ di
            d2.append(float(di @ di))
            a = r + u  # residual after resetting block i
            b = r0 - u  # residual after resetting all but block i
            nin.append(0.5 * float(a @ a) - loss)
            nout.append(0.5 * float(b @ b) - loss)
            bg.append(float(g[idx] @ g[idx]))
        losses.append(loss)
        dists.append(d2)
        ni_in.append(nin)
        ni_out.append(nout)
        gsq.append(float(g @ g))
        bgsq.append(bg)
        return g

    r = r0.copy()
    loss = loss0
    g = record(r, loss)
    converged = loss <= target
    it = 0
    while not converged and it < max_iters:
        theta += eta * g
        r = y - X @ theta
        new_loss = 0.5 * float(r @ r)
        if new_loss > loss * (1 + 1e-12) + floor:
            raise DivergenceError(f"loss increased at step {it + 1} ({loss:.6g} -> {new_loss:.6g})", losses)
        loss = new_loss
        it += 1
        g = record(r, loss)
        converged = loss <= target

    return TrajectoryRecord(
        eta=float(eta), losses=np.array(losses), distances=np.array(dists),
        ni_block=np.array(ni_in), ni_rest=np.array(ni_out), grad_sq=np.array(gsq),
        block_grad_sq=np.array(bgsq), theta0=theta0, theta_final=theta, converged=bool(converged),
    )


@dataclass(frozen=True)
class BoundViolation:
    block: int
    tau: int
    bound: str
    value: float
    limit: float

    @property
    def margin(self) -> float:
        return self.limit - self.value if self.bound != "ni_rest_lower" else self.value - self.limit


@dataclass
class BoundReport:
    violations: list = field(default_factory=list)
    # smallest margin seen per (block, bound); negative means violated
    min_margins: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations


def _note(report, block, name, values, limits, lower=False):
    margins = (values - limits) if lower else (limits - values)
    report.min_margins[(block, name)] = float(margins.min())
    scale = np.maximum(1.0, np.abs(limits))
    for tau in np.flatnonzero(margins < -BOUND_SLACK * scale):
        report.violations.append(BoundViolation(block, int(tau), name, float(values[tau]), float(limits[tau])))


def check_theorem_bounds(traj: TrajectoryRecord, blocks: PPLSBlocks) -> BoundReport:
    """Check the three per-block trajectory bounds at every recorded step.

    With ``kappa = L_i / mu`` and ``rho = 1 - eta mu``:

    * ``||theta_i,tau - theta_i,0||^2 <= 8 kappa L0 / mu``
    * ``NI_i / L0 <= 8 kappa^2 + 4 kappa rho^(tau/2)``
    * ``NI_rest_i / L0 >= 1 - 8 kappa^2 - 4 kappa - rho^tau``

    Margins are stored so alternative constants can be audited.
    """
    report = BoundReport()
    L0 = traj.initial_loss
    mu = blocks.mu_total
    rho = 1.0 - traj.eta * mu
    tau = np.arange(traj.losses.size)
    report.diagnostics.update(mu_theorem=mu, mu_stacked=blocks.mu_stacked, rho=rho, L0=L0)
    if L0 == 0:
        return report
    for i in range(blocks.num_blocks):
        k = blocks.kappa(i)
        _note(report, i, "distance", traj.distances[:, i], np.full(tau.size, 8 * k * L0 / mu))
        _note(report, i, "ni_block_upper", traj.ni_block[:, i] / L0, 8 * k**2 + 4 * k * rho ** (tau / 2))
        _note(report, i, "ni_rest_lower", traj.ni_rest[:, i] / L0, 1 - 8 * k**2 - 4 * k - rho**tau, lower=True)
    return report


def check_loss_rate(traj: TrajectoryRecord, blocks: PPLSBlocks) -> BoundReport:
    """``L(theta_tau) <= (1 - eta mu)^tau L(theta_0)`` at every step."""
    report = BoundReport()
    tau = np.arange(traj.losses.size)
    rho = 1.0 - traj.eta * blocks.mu_total
    _note(report, -1, "loss_rate", traj.losses, rho**tau * traj.initial_loss)
    return report


def check_tightness(blocks: PPLSBlocks, y, theta0=None, include_rest=None) -> BoundReport:
    """Converse bounds at the GD limit, with ``kt = mu_i / L``.

    * ``||theta_i,inf - theta_i,0||^2 >= 2 kt L0 / L``
    * ``NI_i / L0 >= kt^2``
    * for a single equation (``n = 1``): ``NI_rest_i / L0 <= (1 - kt)^2``

    The limit is the closed-form min-norm point from ``theta0``, i.e. the
    ``tau -> inf`` endpoint of :func:`run_gd`.  For the third check the
    diagnostics also record the value ``1 - kt^2 - 2 kt``, which the exact
    single-equation computation shows is not an upper bound.
    """
    n = blocks.n
    if include_rest is None:
        include_rest = n == 1
    if include_rest and n != 1:
        raise UnsupportedOperation("the rest-of-network converse is only available for n = 1")
    y = np.asarray(y, dtype=float)
    theta0 = np.zeros(blocks.p) if theta0 is None else np.asarray(theta0, dtype=float)
    theta_inf = min_norm_limit(blocks, y, theta0)
    r0 = y - blocks.X @ theta0
    r_inf = y - blocks.X @ theta_inf
    L0 = 0.5 * float(r0 @ r0)
    loss_inf = 0.5 * float(r_inf @ r_inf)
    report = BoundReport(diagnostics={"L0": L0, "loss_inf": loss_inf})
    Ltot = blocks.L_total
    for i, (Xi, idx) in enumerate(zip(blocks.designs, blocks.block_sets)):
        kt = blocks.kappa_tilde(i)
        di = theta_inf[idx] - theta0[idx]
        u = Xi @ di
        dist = np.array([float(di @ di)])
        _note(report, i, "distance_lower", dist, np.array([2 * kt * L0 / Ltot]), lower=True)
        if L0 == 0:
            continue
        ni_in = (0.5 * float((r_inf + u) @ (r_inf + u)) - loss_inf) / L0
        _note(report, i, "ni_block_lower", np.array([ni_in]), np.array([kt**2]), lower=True)
        if include_rest:
            ni_out = (0.5 * float((r0 - u) @ (r0 - u)) - loss_inf) / L0
            _note(report, i, "ni_rest_upper", np.array([ni_out]), np.array([(1 - kt) ** 2]))
            report.diagnostics[f"ni_rest_{i}"] = ni_out
            report.diagnostics[f"literal_rest_bound_{i}"] = 1 - kt**2 - 2 * kt
    return report


def random_instance(n, block_dims, seed=0, column_scales=None):
    """Blocks plus a standard Gaussian target vector ``y``."""
    blocks = build_blocks(n, block_dims, seed, column_scales)
    y = derive_rng(seed, 1).standard_normal(n)
    return blocks, y


def closed_form_single_row(x, y) -> np.ndarray:
    """GD limit from zero for one equation ``x^T theta = y``."""
    x = np.asarray(x, dtype=float)
    return y * x / float(x @ x)
