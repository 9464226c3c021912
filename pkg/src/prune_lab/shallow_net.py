"""One-hidden-layer ReLU networks ``f(x) = V relu(W x)`` in plain numpy.

The flat parameter vector is ``theta = (W.ravel(), V.ravel())`` so the input
layer occupies indices ``[0, m*d)`` and the output layer ``[m*d, (d+K)*m)``.

Rescaling ``(W, V) -> (lam W, V / lam)`` leaves the function unchanged but
moves magnitude between layers; this module measures how MI, HI and NI react
and how magnitude- vs Hessian-based prune-and-retrain behave under it.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._random import derive_rng
from .errors import ContractError, DimensionError, DivergenceError
from .importance import group_keep_count, top_s_mask

CROSS_ENTROPY = "cross_entropy"
QUADRATIC = "quadratic"
LOSS_KINDS = (CROSS_ENTROPY, QUADRATIC)
GLOBAL = "global"
LAYERWISE = "layerwise"
DIVERGENCE_LIMIT = 1e6


@dataclass
class TwoLayerNet:
    W: np.ndarray  # m x d
    V: np.ndarray  # K x m
    lambda_scale: float = 1.0
    W_init: np.ndarray | None = None
    V_init: np.ndarray | None = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.W.ndim != 2 or self.V.ndim != 2 or self.V.shape[1] != self.W.shape[0]:
            raise DimensionError(f"incompatible layer shapes W{self.W.shape}, V{self.V.shape}")
        if self.W_init is None:
            self.W_init = self.W.copy()
        if self.V_init is None:
            self.V_init = self.V.copy()

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def K(self) -> int:
        return self.V.shape[0]

    @property
    def size(self) -> int:
        return self.W.size + self.V.size

    @property
    def index_W(self) -> np.ndarray:
        return np.arange(self.W.size)

    @property
    def index_V(self) -> np.ndarray:
        return np.arange(self.W.size, self.size)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.V.ravel()])

    def init_flat(self) -> np.ndarray:
        return np.concatenate([self.W_init.ravel(), self.V_init.ravel()])

    def split(self, theta) -> tuple[np.ndarray, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.size,):
            raise DimensionError(f"flat vector must have length {self.size}")
        return theta[: self.W.size].reshape(self.W.shape), theta[self.W.size:].reshape(self.V.shape)

    def with_params(self, W, V) -> "TwoLayerNet":
        """Same init snapshot and scale, new current weights."""
        return replace(self, W=np.array(W, dtype=float), V=np.array(V, dtype=float))

    def copy(self) -> "TwoLayerNet":
        return replace(self, W=self.W.copy(), V=self.V.copy(),
                       W_init=self.W_init.copy(), V_init=self.V_init.copy())

    def forward(self, X) -> np.ndarray:
        return forward(self.W, self.V, np.asarray(X, dtype=float))[2]

    def predict(self, X) -> np.ndarray:
        return self.forward(X).argmax(axis=1)


@dataclass
class ClassifDataset:
    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int
    source: str = "synthetic"

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if self.inputs.ndim != 2 or self.labels.shape != (self.inputs.shape[0],):
            raise DimensionError("inputs must be n x d with one label per row")
        if self.labels.size == 0:
            raise ContractError("dataset is empty")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ContractError(f"labels must lie in [0, {self.num_classes})")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "ClassifDataset":
        return ClassifDataset(self.inputs[idx], self.labels[idx], self.num_classes, self.source)


@dataclass
class TrainConfig:
    epochs: int = 150
    batch_size: int | None = 32  # None means full batch
    learning_rate: float = 0.05
    loss_kind: str = CROSS_ENTROPY
    seed: int = 0
    interpolation_threshold: float = 1e-3

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ContractError("learning_rate must be positive")
        if self.epochs < 0:
            raise ContractError("epochs must be >= 0")
        if self.loss_kind not in LOSS_KINDS:
            raise ContractError(f"loss_kind must be one of {LOSS_KINDS}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ContractError("batch_size must be positive")


@dataclass
class TrainResult:
    net: TwoLayerNet
    losses: list = field(default_factory=list)  # training loss after each epoch, [0] at start
    accuracies: list = field(default_factory=list)
    epochs_run: int = 0
    interpolated: bool = False


# ----------------------------------------------------------------------------
# data


def make_gaussian_mixture(n, d=32, K=4, seed=0, separation=1.0, n_test=0):
    """K-class Gaussian mixture with unit-variance clusters, inputs scaled by 1/sqrt(d).

    Class means are drawn once from ``N(0, separation^2 I)``.  Returns the
    training set, or ``(train, test)`` when ``n_test > 0``.
    """
    rng = derive_rng(seed)
    means = rng.standard_normal((K, d)) * separation

    def draw(count):
        y = rng.integers(0, K, count)
        X = (means[y] + rng.standard_normal((count, d))) / math.sqrt(d)
        return ClassifDataset(X, y, K)

    train = draw(n)
    return (train, draw(n_test)) if n_test > 0 else train


def make_blobs(n, d=2, seed=0, gap=4.0):
    """Two linearly separable classes split by a margin along the first axis."""
    rng = derive_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.standard_normal((n, d))
    X[:, 0] = np.abs(X[:, 0]) + gap / 2
    X[y == 0, 0] *= -1
    return ClassifDataset(X, y, 2)


IDX_UBYTE = 0x08


def _read_idx(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise ContractError(f"{path}: truncated IDX header")
    zero, dtype_code, ndim = struct.unpack(">HBB", raw[:4])
    if zero != 0 or dtype_code != IDX_UBYTE:
        raise ContractError(f"{path}: unsupported IDX magic (type 0x{dtype_code:02x})")
    header = 4 + 4 * ndim
    dims = struct.unpack(">" + "I" * ndim, raw[4:header])
    count = int(np.prod(dims))
    if len(raw) - header != count:
        raise ContractError(f"{path}: expected {count} data bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_idx(images_path, labels_path, num_classes=None, limit=None) -> ClassifDataset:
    """Read a raw image/label pair in IDX format (big-endian magic + dims, row-major bytes).

    Images are flattened and pixel values scaled to ``[0, 1]``.
    """
    images = _read_idx(images_path)
    labels = _read_idx(labels_path)
    if labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise ContractError("image and label files disagree in count")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    X = images.reshape(images.shape[0], -1).astype(float) / 255.0
    K = num_classes if num_classes is not None else int(labels.max()) + 1
    return ClassifDataset(X, labels.astype(np.intp), K, source="idx-files")


def write_idx(path, array) -> None:
    """Write a uint8 array in IDX format (used for fixtures and round trips)."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    header = struct.pack(">HBB", 0, IDX_UBYTE, array.ndim) + struct.pack(">" + "I" * array.ndim, *array.shape)
    Path(path).write_bytes(header + array.tobytes())


# ----------------------------------------------------------------------------
# network maths


def he_init(m, d, K, seed=0) -> TwoLayerNet:
    """He-normal init: ``W ~ N(0, 2/d)``, ``V ~ N(0, 2/m)``."""
    if min(m, d, K) < 1:
        raise ContractError("m, d and K must be positive")
    rng = derive_rng(seed)
    W = rng.standard_normal((m, d)) * math.sqrt(2.0 / d)
    V = rng.standard_normal((K, m)) * math.sqrt(2.0 / m)
    return TwoLayerNet(W, V)


def lambda_rescale(net: TwoLayerNet, lam: float) -> TwoLayerNet:
    """``(lam W, V / lam)``, applied to both current weights and init snapshot."""
    if not lam > 0:
        raise ContractError("lambda must be positive")
    return TwoLayerNet(lam * net.W, net.V / lam, net.lambda_scale * lam,
                       lam * net.W_init, net.V_init / lam)


def forward(W, V, X):
    Z = X @ W.T
    A = np.maximum(Z, 0.0)
    return Z, A, A @ V.T


def _softmax(F):
    F = F - F.max(axis=1, keepdims=True)
    E = np.exp(F)
    return E / E.sum(axis=1, keepdims=True)


def _loss_from_outputs(F, labels, K, loss_kind):
    """Mean loss and its gradient w.r.t. the outputs, plus class probabilities for CE."""
    n = F.shape[0]
    rows = np.arange(n)
    if loss_kind == CROSS_ENTROPY:
        shifted = F - F.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1))
        loss = float(np.mean(logz - shifted[rows, labels]))
        P = np.exp(shifted - logz[:, None])
        dF = P.copy()
        dF[rows, labels] -= 1.0
        return loss, dF / n, P
    if loss_kind == QUADRATIC:
        R = F.copy()
        R[rows, labels] -= 1.0
        return 0.5 * float(np.mean(np.sum(R**2, axis=1))), R / n, None
    raise ContractError(f"unknown loss {loss_kind!r}")


def loss_value(W, V, data: ClassifDataset, loss_kind=CROSS_ENTROPY) -> float:
    F = forward(W, V, data.inputs)[2]
    return _loss_from_outputs(F, data.labels, data.num_classes, loss_kind)[0]


def loss_and_grad(W, V, data: ClassifDataset, loss_kind=CROSS_ENTROPY):
    Z, A, F = forward(W, V, data.inputs)
    loss, dF, _ = _loss_from_outputs(F, data.labels, data.num_classes, loss_kind)
    dV = dF.T @ A
    dZ = (dF @ V) * (Z > 0)
    dW = dZ.T @ data.inputs
    return loss, dW, dV


def accuracy(W, V, data: ClassifDataset) -> float:
    return float(np.mean(forward(W, V, data.inputs)[2].argmax(axis=1) == data.labels))


def gauss_newton_diag(W, V, data: ClassifDataset, loss_kind=CROSS_ENTROPY):
    """Diagonal of ``(1/n) sum_i J_i^T H_out,i J_i`` for each layer.

    ``H_out`` is the output-space loss Hessian (``diag(p) - p p^T`` for
    cross-entropy, identity for the quadratic loss).  Because the network is
    linear in each single weight between ReLU kinks, this coincides with the
    true Hessian diagonal wherever it exists.
    """
    X = data.inputs
    n = X.shape[0]
    Z, A, F = forward(W, V, X)
    active = (Z > 0).astype(float)
    if loss_kind == CROSS_ENTROPY:
        P = _softmax(F)
        # V-block: dF_k/dV_kj = A_ij; curvature p_ik (1 - p_ik)
        hV = (P * (1.0 - P)).T @ (A**2) / n
        # W-block: dF/dW_jk = V[:, j] 1[z_ij > 0] x_ik; curvature v_j^T H_out v_j
        q = P @ (V**2) - (P @ V) ** 2
    elif loss_kind == QUADRATIC:
        hV = np.ones((V.shape[0], 1)) * (A**2).sum(axis=0)[None, :] / n
        q = np.broadcast_to((V**2).sum(axis=0), Z.shape)
    else:
        raise ContractError(f"unknown loss {loss_kind!r}")
    hW = (q * active).T @ (X**2) / n
    return hW, hV


@dataclass(frozen=True)
class LayerImportances:
    MI_W: float
    MI_V: float
    HI_W: float
    HI_V: float
    NI_W: float
    NI_V: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def layer_importances(net: TwoLayerNet, init_net: TwoLayerNet | None, dataset: ClassifDataset,
                      loss_kind=CROSS_ENTROPY) -> LayerImportances:
    """Per-layer MI, HI and init-referenced NI.

    NI_W is the loss increase from resetting W to its (lambda-scaled) initial
    value while keeping V; NI_V likewise.  The reference comes from
    ``init_net``'s current weights when given, else from ``net``'s snapshot.
    """
    W0, V0 = (init_net.W, init_net.V) if init_net is not None else (net.W_init, net.V_init)
    hW, hV = gauss_newton_diag(net.W, net.V, dataset, loss_kind)
    base = loss_value(net.W, net.V, dataset, loss_kind)
    return LayerImportances(
        MI_W=float(np.sum(net.W**2)),
        MI_V=float(np.sum(net.V**2)),
        HI_W=float(np.sum(hW * net.W**2)),
        HI_V=float(np.sum(hV * net.V**2)),
        NI_W=loss_value(W0, net.V, dataset, loss_kind) - base,
        NI_V=loss_value(net.W, V0, dataset, loss_kind) - base,
    )


def _fd_hessian_diag(net, data, loss_kind, coords_W, coords_V, rel_step):
    """Central differences of the analytic gradient along chosen coordinates."""
    def grad_at(W, V):
        _, dW, dV = loss_and_grad(W, V, data, loss_kind)
        return dW, dV

    outW, outV = [], []
    for (j, k) in coords_W:
        h = rel_step * (1.0 + abs(net.W[j, k]))
        Wp, Wm = net.W.copy(), net.W.copy()
        Wp[j, k] += h
        Wm[j, k] -= h
        outW.append((grad_at(Wp, net.V)[0][j, k] - grad_at(Wm, net.V)[0][j, k]) / (2 * h))
    for (k, j) in coords_V:
        h = rel_step * (1.0 + abs(net.V[k, j]))
        Vp, Vm = net.V.copy(), net.V.copy()
        Vp[k, j] += h
        Vm[k, j] -= h
        outV.append((grad_at(net.W, Vp)[1][k, j] - grad_at(net.W, Vm)[1][k, j]) / (2 * h))
    return np.array(outW), np.array(outV)


def _kink_safe_W_coords(net, data, rel_step, margin, count, rng):
    """W coordinates whose perturbation cannot flip any ReLU (at scale lam=1 and beyond)."""
    Z = data.inputs @ net.W.T  # n x m
    absX = np.abs(data.inputs)
    candidates = []
    for j in range(net.m):
        zmin = np.min(np.abs(Z[:, j]))
        for k in range(net.d):
            h = rel_step * (1.0 + abs(net.W[j, k]))
            if zmin > max(margin, 2 * h * absX[:, k].max()):
                candidates.append((j, k))
    if len(candidates) > count:
        pick = rng.choice(len(candidates), count, replace=False)
        candidates = [candidates[i] for i in sorted(pick)]
    return candidates


@dataclass
class HessianScalingReport:
    lam: float
    median_ratio_W: float
    median_ratio_V: float
    expected_W: float
    expected_V: float
    coords_W: int
    coords_V: int
    tolerance: float

    @property
    def passed(self) -> bool:
        okW = abs(self.median_ratio_W / self.expected_W - 1.0) <= self.tolerance
        okV = abs(self.median_ratio_V / self.expected_V - 1.0) <= self.tolerance
        return bool(okW and okV)


def hessian_layer_scaling_check(net: TwoLayerNet, lam: float, dataset: ClassifDataset,
                                loss_kind=CROSS_ENTROPY, coords_per_layer=100,
                                rel_step=1e-4, kink_margin=1e-3, tolerance=0.05, seed=0):
    """Compare finite-difference Hessian diagonals of ``theta^1`` and ``theta^lam``.

    W-block ratios should be ``lam^-2`` and V-block ratios ``lam^2``.
    """
    if net.m * net.d > 10_000:
        raise ContractError("finite differences are restricted to m*d <= 1e4")
    rng = derive_rng(seed)
    scaled = lambda_rescale(net, lam)
    # a kink-safe coordinate for theta^1 is also safe for theta^lam up to the
    # step rescaling, so check against the smaller of the two margins
    coords_W = _kink_safe_W_coords(net, dataset, rel_step * max(1.0, lam), kink_margin * min(1.0, lam),
                                   coords_per_layer, rng)
    nV = min(coords_per_layer, net.V.size)
    flatV = np.sort(rng.choice(net.V.size, nV, replace=False))
    coords_V = [tuple(np.unravel_index(i, net.V.shape)) for i in flatV]
    hW1, hV1 = _fd_hessian_diag(net, dataset, loss_kind, coords_W, coords_V, rel_step)
    hWl, hVl = _fd_hessian_diag(scaled, dataset, loss_kind, coords_W, coords_V, rel_step)
    okW = np.abs(hW1) > 1e-12
    okV = np.abs(hV1) > 1e-12
    ratio_W = float(np.median(hWl[okW] / hW1[okW])) if okW.any() else float("nan")
    ratio_V = float(np.median(hVl[okV] / hV1[okV])) if okV.any() else float("nan")
    return HessianScalingReport(lam, ratio_W, ratio_V, lam**-2, lam**2,
                                int(okW.sum()), int(okV.sum()), tolerance)


def gradient_check(net: TwoLayerNet, dataset: ClassifDataset, loss_kind=CROSS_ENTROPY,
                   coords=100, rel_step=1e-6, seed=0):
    """Relative errors between backprop and central differences of the loss.

    Coordinates touching a unit with a near-zero pre-activation are skipped.
    """
    rng = derive_rng(seed)
    _, dW, dV = loss_and_grad(net.W, net.V, dataset, loss_kind)
    Z = dataset.inputs @ net.W.T
    safe_units = np.min(np.abs(Z), axis=0) > 1e-3
    errors = []
    theta = net.flat()
    grad = np.concatenate([dW.ravel(), dV.ravel()])
    order = rng.permutation(net.size)
    for i in order:
        if len(errors) >= coords:
            break
        if i < net.W.size and not safe_units[i // net.d]:
            continue
        h = rel_step * (1.0 + abs(theta[i]))
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        fd = (loss_value(*net.split(tp), dataset, loss_kind) - loss_value(*net.split(tm), dataset, loss_kind)) / (2 * h)
        scale = max(abs(fd), abs(grad[i]), 1e-8)
        errors.append(abs(fd - grad[i]) / scale)
    return np.array(errors)


# ----------------------------------------------------------------------------
# training and pruning


def train(net: TwoLayerNet, dataset: ClassifDataset, config: TrainConfig, mask=None) -> TrainResult:
    """Gradient descent (full batch or shuffled mini-batches).

    Stops after the first epoch reaching training accuracy 1.0 with loss at or
    below ``config.interpolation_threshold``, or after ``config.epochs``.  When
    ``mask`` (flat boolean) is given, gradients are multiplied by it so masked
    coordinates never move.
    """
    W, V = net.W.copy(), net.V.copy()
    if mask is not None:
        mW, mV = net.split(np.asarray(mask, dtype=float))
    rng = derive_rng(config.seed)
    n = dataset.n
    bs = n if config.batch_size is None else min(config.batch_size, n)
    loss = loss_value(W, V, dataset, config.loss_kind)
    result = TrainResult(net, [loss], [accuracy(W, V, dataset)])
    for epoch in range(config.epochs):
        order = rng.permutation(n) if bs < n else np.arange(n)
        for start in range(0, n, bs):
            batch = dataset.subset(order[start:start + bs]) if bs < n else dataset
            _, dW, dV = loss_and_grad(W, V, batch, config.loss_kind)
            if mask is not None:
                dW *= mW
                dV *= mV
            W -= config.learning_rate * dW
            V -= config.learning_rate * dV
        loss = loss_value(W, V, dataset, config.loss_kind)
        acc = accuracy(W, V, dataset)
        result.losses.append(loss)
        result.accuracies.append(acc)
        result.epochs_run = epoch + 1
        if not np.isfinite(loss) or loss > DIVERGENCE_LIMIT:
            raise DivergenceError(f"training loss {loss:.3g} at epoch {epoch + 1}", result.losses)
        if acc == 1.0 and loss <= config.interpolation_threshold:
            result.interpolated = True
            break
    result.net = net.with_params(W, V)
    return result


def pruning_scores(net: TwoLayerNet, dataset: ClassifDataset, method: str, loss_kind=CROSS_ENTROPY):
    theta = net.flat()
    if method == "MP":
        return theta**2
    if method == "HP":
        hW, hV = gauss_newton_diag(net.W, net.V, dataset, loss_kind)
        return np.concatenate([hW.ravel(), hV.ravel()]) * theta**2
    raise ContractError("method must be 'MP' or 'HP'")


def build_mask(net: TwoLayerNet, scores, fraction: float, mode: str = GLOBAL) -> np.ndarray:
    """Keep ``ceil(fraction * size)`` top scores, globally or inside each layer."""
    if not 0 < fraction <= 1:
        raise ContractError("fraction must lie in (0, 1]")
    scores = np.asarray(scores, dtype=float)
    if mode == GLOBAL:
        return top_s_mask(scores, group_keep_count(fraction, net.size))
    if mode == LAYERWISE:
        mask = np.zeros(net.size, dtype=bool)
        for idx in (net.index_W, net.index_V):
            mask[idx] = top_s_mask(scores[idx], group_keep_count(fraction, idx.size))
        return mask
    raise ContractError(f"mode must be '{GLOBAL}' or '{LAYERWISE}'")


@dataclass
class PruneRetrainRecord:
    lam: float
    method: str
    mode: str
    fraction: float
    test_accuracy: float
    dense_test_accuracy: float
    surviving_fraction_W: float
    surviving_fraction_V: float
    layer_dead: bool


def prune_retrain(base_init: TwoLayerNet, lam: float, dataset: ClassifDataset, config: TrainConfig,
                  method: str, fraction: float, mode: str = GLOBAL,
                  test_set: ClassifDataset | None = None, trained: TwoLayerNet | None = None):
    """Train ``theta^lam``, prune it, rewind survivors to init and retrain masked.

    ``trained`` short-circuits the first training run when the caller already
    has the dense final network for this ``lam``.
    """
    test_set = test_set if test_set is not None else dataset
    start = lambda_rescale(base_init, lam)
    final = trained if trained is not None else train(start, dataset, config).net
    mask = build_mask(final, pruning_scores(final, dataset, method, config.loss_kind), fraction, mode)
    rewound = start.with_params(*start.split(np.where(mask, start.init_flat(), 0.0)))
    retrained = train(rewound, dataset, config, mask=mask).net
    mW, mV = start.split(mask.astype(float))
    return PruneRetrainRecord(
        lam=float(lam), method=method, mode=mode, fraction=float(fraction),
        test_accuracy=accuracy(retrained.W, retrained.V, test_set),
        dense_test_accuracy=accuracy(final.W, final.V, test_set),
        surviving_fraction_W=float(mW.mean()),
        surviving_fraction_V=float(mV.mean()),
        layer_dead=bool(mW.sum() == 0 or mV.sum() == 0),
    )


def ni_vs_lambda_sweep(base_init: TwoLayerNet, lambdas, dataset: ClassifDataset, config: TrainConfig,
                       test_set: ClassifDataset | None = None):
    """Train every ``theta^lam`` and tabulate final importances per layer.

    Rows hold MI/HI/NI of both layers on the training loss plus the test
    error after resetting each layer to its init.
    """
    lambdas = list(lambdas)
    if lambdas != sorted(lambdas):
        raise ContractError("lambdas must be sorted")
    test_set = test_set if test_set is not None else dataset
    rows = []
    for lam in lambdas:
        res = train(lambda_rescale(base_init, lam), dataset, config)
        rows.append(sweep_row(res.net, lam, dataset, test_set, config.loss_kind, res.epochs_run))
    return rows


def sweep_row(final: TwoLayerNet, lam, dataset, test_set, loss_kind, epochs_run=None) -> dict:
    imp = layer_importances(final, None, dataset, loss_kind)
    row = {"lambda": float(lam), **imp.as_dict()}
    row["test_err"] = 1.0 - accuracy(final.W, final.V, test_set)
    row["test_err_ablate_W"] = 1.0 - accuracy(final.W_init, final.V, test_set)
    row["test_err_ablate_V"] = 1.0 - accuracy(final.W, final.V_init, test_set)
    if epochs_run is not None:
        row["epochs"] = epochs_run
    return row
