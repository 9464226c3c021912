"""Weight importance measures and score-based pruning.

Three notions of how much a subset of weights ``delta`` matters:

* natural importance (NI): the loss increase when the subset is replaced by a
  reference vector (zeros for regular pruning, the initialization for
  init-pruning);
* magnitude importance (MI): ``sum(theta[delta] ** 2)``;
* Hessian importance (HI): ``sum(H_ii * theta_i ** 2)`` over ``delta``, an
  Optimal-Brain-Damage style saliency.

MI and HI decompose over coordinates, so they are represented per index by
:class:`ImportanceScores` and turned into sparse models by :func:`prune`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import DimensionError, StructureError, UnsupportedOperation

log = logging.getLogger(__name__)

MAGNITUDE = "magnitude"
HESSIAN = "hessian"


class LossOracle(Protocol):
    """Anything with ``evaluate(theta) -> float``.

    Losses that can also report their Hessian diagonal expose
    ``hessian_diag(theta) -> ndarray`` and set ``supports_hessian = True``.
    """

    def evaluate(self, theta: np.ndarray) -> float: ...


@dataclass(frozen=True)
class ImportanceScores:
    per_index: np.ndarray
    kind: str
    has_negative: bool = False

    def __post_init__(self):
        if self.kind not in (MAGNITUDE, HESSIAN):
            raise ValueError(f"unknown score kind {self.kind!r}")

    def subset(self, delta) -> float:
        """Importance of an index set: the scores summed over ``delta``."""
        idx = as_index_set(delta, self.per_index.size)
        return float(self.per_index[idx].sum())


def as_weight_vector(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise DimensionError(f"weight vector must be 1-D, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise DimensionError("weight vector has non-finite entries")
    return theta


def as_index_set(delta, p: int) -> np.ndarray:
    """Validate ``delta`` as a set of distinct indices in ``[0, p)``.

    Returns a strictly increasing integer array.
    """
    idx = np.asarray(list(delta) if not isinstance(delta, np.ndarray) else delta)
    if idx.size == 0:
        return np.zeros(0, dtype=np.intp)
    if idx.dtype == bool:
        if idx.size != p:
            raise StructureError(f"boolean index mask has length {idx.size}, expected {p}")
        return np.flatnonzero(idx)
    if not np.issubdtype(idx.dtype, np.integer):
        raise StructureError("index set must contain integers")
    idx = idx.astype(np.intp).ravel()
    srt = np.sort(idx)
    if np.any(np.diff(srt) == 0):
        raise StructureError("index set contains duplicates")
    if srt[0] < 0 or srt[-1] >= p:
        raise StructureError(f"index set has entries outside [0, {p})")
    return srt


def complement(delta, p: int) -> np.ndarray:
    keep = np.ones(p, dtype=bool)
    keep[as_index_set(delta, p)] = False
    return np.flatnonzero(keep)


def natural_importance(loss: LossOracle, theta, ref, delta) -> float:
    """Loss increase from setting ``theta[delta]`` to ``ref[delta]``.

    Not clamped: ablation can lower the loss, giving a negative value.
    """
    theta = as_weight_vector(theta)
    ref = as_weight_vector(ref)
    if theta.shape != ref.shape:
        raise DimensionError(f"theta has dim {theta.size}, reference has dim {ref.size}")
    idx = as_index_set(delta, theta.size)
    if idx.size == 0:
        return 0.0
    ablated = theta.copy()
    ablated[idx] = ref[idx]
    return float(loss.evaluate(ablated)) - float(loss.evaluate(theta))


def magnitude_scores(theta) -> ImportanceScores:
    theta = as_weight_vector(theta)
    return ImportanceScores(theta**2, MAGNITUDE)


def hessian_scores(loss: LossOracle, theta) -> ImportanceScores:
    theta = as_weight_vector(theta)
    if not getattr(loss, "supports_hessian", False) or not hasattr(loss, "hessian_diag"):
        raise UnsupportedOperation(f"{type(loss).__name__} does not provide a Hessian diagonal")
    hdiag = np.asarray(loss.hessian_diag(theta), dtype=float)
    if hdiag.shape != theta.shape:
        raise DimensionError(f"hessian_diag returned shape {hdiag.shape}, expected {theta.shape}")
    negative = bool(np.any(hdiag < 0))
    if negative:
        log.warning("Hessian diagonal has %d negative entries", int(np.sum(hdiag < 0)))
    return ImportanceScores(hdiag * theta**2, HESSIAN, has_negative=negative)


def top_s_mask(scores, s: int) -> np.ndarray:
    """Boolean mask of the ``s`` largest scores along the last axis.

    Ties go to the lower index, so the result is deterministic.
    """
    scores = np.asarray(scores, dtype=float)
    p = scores.shape[-1]
    if not 0 <= s <= p:
        raise ValueError(f"sparsity s={s} outside [0, {p}]")
    mask = np.zeros(scores.shape, dtype=bool)
    if s == 0:
        return mask
    # stable sort on the negated scores keeps equal scores in index order
    order = np.argsort(-scores, axis=-1, kind="stable")[..., :s]
    np.put_along_axis(mask, order, True, axis=-1)
    return mask


def prune(scores: ImportanceScores, theta, s: int) -> np.ndarray:
    """Keep the ``s`` top-scoring coordinates of ``theta`` and zero the rest."""
    theta = as_weight_vector(theta)
    if scores.per_index.shape != theta.shape:
        raise DimensionError("scores and theta differ in dimension")
    if s > theta.size:
        raise ValueError(f"cannot keep s={s} entries of a {theta.size}-dim vector")
    return np.where(top_s_mask(scores.per_index, s), theta, 0.0)


def group_keep_count(fraction: float, size: int) -> int:
    """``ceil(fraction * size)`` robust to products like ``0.1 * 30``."""
    return min(size, math.ceil(round(fraction * size, 9)))


def check_partition(groups: Sequence, p: int) -> list[np.ndarray]:
    seen = np.zeros(p, dtype=int)
    out = []
    for g in groups:
        idx = as_index_set(g, p)
        seen[idx] += 1
        out.append(idx)
    if np.any(seen != 1):
        raise StructureError("groups do not partition the index range")
    return out


def groupwise_mask(per_index, groups: Sequence, fraction: float) -> np.ndarray:
    per_index = np.asarray(per_index, dtype=float)
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    mask = np.zeros(per_index.size, dtype=bool)
    for idx in check_partition(groups, per_index.size):
        keep = top_s_mask(per_index[idx], group_keep_count(fraction, idx.size))
        mask[idx[keep]] = True
    return mask


def prune_groupwise(scores: ImportanceScores, theta, groups: Sequence, fraction: float) -> np.ndarray:
    """Prune the same fraction inside every group (layer-wise pruning)."""
    theta = as_weight_vector(theta)
    if scores.per_index.shape != theta.shape:
        raise DimensionError("scores and theta differ in dimension")
    return np.where(groupwise_mask(scores.per_index, groups, fraction), theta, 0.0)


class PopulationQuadratic:
    """Population squared loss ``E[(y - theta^T x)^2]`` for a realizable model.

    ``x ~ N(0, cov)``, ``y = x^T theta_bar + z`` with ``z ~ N(0, noise_var)``.
    The loss is evaluated in closed form:
    ``E[y^2] - 2 b^T theta + theta^T cov theta`` with ``b = cov theta_bar``.

    ``hessian_diag`` returns ``diag(cov)`` rather than ``2 diag(cov)`` so that
    HI at the minimizer equals NI exactly for diagonal covariances.
    """

    supports_hessian = True

    def __init__(self, cov, theta_bar, noise_var: float = 0.0):
        cov = np.asarray(cov, dtype=float)
        if cov.ndim == 1:
            cov = np.diag(cov)
        self.cov = cov
        self.theta_bar = as_weight_vector(theta_bar)
        if cov.shape != (self.theta_bar.size,) * 2:
            raise DimensionError("covariance and theta_bar dimensions disagree")
        self.noise_var = float(noise_var)
        self.b = cov @ self.theta_bar
        self._ey2 = float(self.theta_bar @ self.b) + self.noise_var

    def scaled(self, scaling) -> "PopulationQuadratic":
        """The same problem in features ``Lambda x``.

        Covariance becomes ``Lambda cov Lambda`` and the minimizer
        ``Lambda^{-1} theta_bar``; labels are unchanged.
        """
        lam = np.asarray(getattr(scaling, "diag", scaling), dtype=float)
        return PopulationQuadratic(lam[:, None] * self.cov * lam[None, :],
                                   self.theta_bar / lam, self.noise_var)

    @property
    def minimizer(self) -> np.ndarray:
        return self.theta_bar

    def evaluate(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return self._ey2 - 2.0 * float(self.b @ theta) + float(theta @ self.cov @ theta)

    def hessian_diag(self, theta) -> np.ndarray:
        return np.diag(self.cov).copy()
