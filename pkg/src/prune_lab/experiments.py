"""Named experiments: parameter schemas, run cells and per-cell computations.

An experiment splits into independent cells (one lambda, one seed, one
instance...).  ``run_cell`` is a module-level function so that cells can be
shipped to worker processes; every cell derives its randomness from the
experiment seed and its own keys, never from shared state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cgmt_aux, l1_bias, linreg, ppls
from . import shallow_net as sn
from ._random import derive_rng, derive_seed

INT, REAL, STR, BOOL = "int", "real", "str", "bool"
LIST_INT, LIST_REAL, LIST_STR = "list[int]", "list[real]", "list[str]"


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    default: object
    doc: str


@dataclass
class Experiment:
    name: str
    doc: str
    params: tuple
    columns: tuple
    check: object  # params -> list of problems
    derived: object  # params -> dict
    cells: object  # params -> list of dicts
    run: object  # (params, cell, seed) -> list of row dicts
    notes: list = field(default_factory=list)

    def defaults(self) -> dict:
        return {p.name: p.default for p in self.params}

    def param(self, name) -> Param | None:
        for p in self.params:
            if p.name == name:
                return p
        return None


def _positive(params, *names):
    out = []
    for name in names:
        v = params[name]
        vals = v if isinstance(v, list) else [v]
        if any(x <= 0 for x in vals):
            out.append(f"{name} must be > 0")
    return out


def _nonneg(params, *names):
    return [f"{name} must be ≥ 0" for name in names if params[name] < 0]


def _nonempty(params, *names):
    return [f"{name} must not be empty" for name in names if not params[name]]


def _fractions(params, name, lo_open=True):
    vals = params[name]
    ok = all((0 < v <= 1) if lo_open else (0 <= v <= 1) for v in vals)
    return [] if ok else [f"{name} entries must lie in (0, 1]"]


# ----------------------------------------------------------------------------
# aux-prune-curve


def _aux_n(params):
    return params["p"] / params["kappa"]


def _aux_check(params):
    out = _nonneg(params, "sigma") + _positive(params, "p", "kappa", "lambdas", "mc_samples", "trials")
    out += _nonempty(params, "lambdas", "s_over_p", "methods") + _fractions(params, "s_over_p")
    if params["kappa"] <= 1:
        out.append("kappa must exceed 1 (over-parameterized regime)")
    elif params["p"] > 0:
        n = _aux_n(params)
        if abs(n - round(n)) > 1e-6:
            out.append(f"p / kappa = {n:.6g} is not an integer sample size")
    if not 0 < params["head_fraction"] <= 1:
        out.append("head_fraction must lie in (0, 1]")
    out += [f"unknown method {m!r}" for m in params["methods"] if m not in cgmt_aux.METHODS]
    return out


def _aux_derived(params):
    spec = linreg.BlockScalingSpec(1.0, params["head_fraction"])
    return {
        "n": int(round(_aux_n(params))),
        "head_size": spec.head_size(params["p"]),
        "s_values": [max(1, int(round(f * params["p"]))) for f in params["s_over_p"]],
    }


def _aux_run(params, cell, seed):
    p = params["p"]
    n = int(round(_aux_n(params)))
    lam = cell["lambda"]
    theta_bar = linreg.decaying_ground_truth(p)
    scaling = linreg.block_scaling(p, lam, params["head_fraction"])
    s_values = _aux_derived(params)["s_values"]
    aux = cgmt_aux.solve_aux(p / n, params["sigma"], scaling, theta_bar)
    emp = cgmt_aux.empirical_prune_curve(p, n, theta_bar, params["sigma"], scaling, s_values,
                                         params["methods"], params["trials"], seed)
    rows = []
    for method in params["methods"]:
        pred = cgmt_aux.predict_prune_curve(aux, s_values, method, params["mc_samples"], seed)
        for frac, s, (pm, pse), (em, ese) in zip(params["s_over_p"], s_values, pred, emp[method]):
            rows.append(dict(**{"lambda": lam}, s_over_p=frac, s=s, method=method, predicted_loss=pm,
                             predicted_se=pse, empirical_loss=em, empirical_se=ese))
    return rows


AUX_PRUNE_CURVE = Experiment(
    "aux-prune-curve",
    "Predicted (auxiliary distribution) vs empirical test loss of MP/HP pruning of the min-norm solution.",
    (
        Param("p", INT, 1000, "number of features"),
        Param("kappa", REAL, 1000 / 600, "p / n, must exceed 1 and give an integer n"),
        Param("sigma", REAL, 0.1, "label noise standard deviation"),
        Param("lambdas", LIST_REAL, [0.5, 1.0, 5.0], "scale applied to the leading block of features"),
        Param("head_fraction", REAL, 0.1, "fraction of leading features scaled by lambda"),
        Param("s_over_p", LIST_REAL, [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
              "kept fractions s/p"),
        Param("methods", LIST_STR, ["MP", "HP"], "pruning methods"),
        Param("mc_samples", INT, 2000, "auxiliary draws per prediction"),
        Param("trials", INT, 50, "datasets per empirical estimate"),
    ),
    ("lambda", "s_over_p", "s", "method", "predicted_loss", "predicted_se", "empirical_loss", "empirical_se"),
    _aux_check, _aux_derived,
    lambda params: [{"lambda": lam} for lam in params["lambdas"]],
    _aux_run,
    ["every lambda cell reuses the same seed, so datasets and auxiliary draws are shared across lambda"],
)


# ----------------------------------------------------------------------------
# linreg-invariance


def _lin_check(params):
    out = _nonneg(params, "sigma") + _positive(params, "p", "n_values", "lambdas", "n_test")
    out += _nonempty(params, "n_values", "lambdas")
    if not 0 < params["head_fraction"] <= 1:
        out.append("head_fraction must lie in (0, 1]")
    return out


def _lin_run(params, cell, seed):
    p, n = params["p"], cell["n"]
    theta_bar = linreg.decaying_ground_truth(p)
    rng = derive_rng(seed, n)
    base = linreg.generate_dataset(p, n, theta_bar, params["sigma"], rng=rng)
    X_test = rng.standard_normal((params["n_test"], p))
    ref_pred = X_test @ linreg.min_norm_solve(base.X, base.y)
    rows = []
    for lam in params["lambdas"]:
        scaling = linreg.block_scaling(p, lam, params["head_fraction"])
        theta = linreg.min_norm_solve(base.X * scaling.diag, base.y)
        pred = (X_test * scaling.diag) @ theta
        resid = np.linalg.norm(base.y - (base.X * scaling.diag) @ theta) / np.linalg.norm(base.y)
        rows.append(dict(n=n, p=p, **{"lambda": lam}, regime="under" if n >= p else "over",
                         test_loss=linreg.population_test_loss(theta, theta_bar, scaling, params["sigma"]),
                         prediction_gap=float(np.linalg.norm(pred - ref_pred) / np.linalg.norm(ref_pred)),
                         train_residual=float(resid)))
    return rows


LINREG_INVARIANCE = Experiment(
    "linreg-invariance",
    "Test loss and predictions of the least-squares solution under block scaling, below and above n = p.",
    (
        Param("p", INT, 200, "number of features"),
        Param("n_values", LIST_INT, [100, 400], "sample sizes (n < p over-, n >= p under-parameterized)"),
        Param("lambdas", LIST_REAL, [0.5, 1.0, 5.0], "block scales"),
        Param("head_fraction", REAL, 0.1, "fraction of leading features scaled"),
        Param("sigma", REAL, 0.1, "label noise standard deviation"),
        Param("n_test", INT, 1000, "fresh inputs used to compare predictions"),
    ),
    ("n", "p", "lambda", "regime", "test_loss", "prediction_gap", "train_residual"),
    _lin_check, lambda params: {"cells": len(params["n_values"])},
    lambda params: [{"n": n} for n in params["n_values"]],
    _lin_run,
)


# ----------------------------------------------------------------------------
# shared network setup

NET_PARAMS = (
    Param("width", INT, 256, "hidden units m"),
    Param("input_dim", INT, 32, "input dimension d of the synthetic mixture"),
    Param("classes", INT, 4, "number of classes K of the synthetic mixture"),
    Param("n_train", INT, 512, "training points"),
    Param("n_test", INT, 512, "test points"),
    Param("separation", REAL, 1.0, "scale of the class means"),
    Param("epochs", INT, 150, "epoch cap"),
    Param("batch_size", INT, 32, "mini-batch size, 0 for full batch"),
    Param("learning_rate", REAL, 0.05, "SGD step size"),
    Param("loss", STR, sn.CROSS_ENTROPY, "cross_entropy or quadratic"),
    Param("interpolation_threshold", REAL, 1e-3, "training stops at accuracy 1 with loss at or below this"),
    Param("images", STR, "", "IDX image file for training (empty: synthetic mixture)"),
    Param("labels", STR, "", "IDX label file for training"),
    Param("test_images", STR, "", "IDX image file for testing"),
    Param("test_labels", STR, "", "IDX label file for testing"),
    Param("limit", INT, 0, "use only the first N IDX records (0: all)"),
)


def _net_check(params):
    out = _positive(params, "width", "input_dim", "classes", "n_train", "n_test", "learning_rate",
                    "interpolation_threshold")
    if params["epochs"] < 1:
        out.append("epochs must be ≥ 1")
    out += _nonneg(params, "batch_size", "limit")
    if params["loss"] not in sn.LOSS_KINDS:
        out.append(f"loss must be one of {', '.join(sn.LOSS_KINDS)}")
    files = [params[k] for k in ("images", "labels", "test_images", "test_labels")]
    if any(files) and not (params["images"] and params["labels"]):
        out.append("images and labels must be given together")
    if bool(params["test_images"]) != bool(params["test_labels"]):
        out.append("test_images and test_labels must be given together")
    return out


def _net_data(params, seed):
    limit = params["limit"] or None
    if params["images"]:
        train = sn.load_idx(params["images"], params["labels"], limit=limit)
        if params["test_images"]:
            test = sn.load_idx(params["test_images"], params["test_labels"], train.num_classes, limit=limit)
        else:
            test = train
        return train, test
    return sn.make_gaussian_mixture(params["n_train"], params["input_dim"], params["classes"],
                                    seed=seed, separation=params["separation"], n_test=params["n_test"])


def _train_config(params, seed):
    return sn.TrainConfig(epochs=params["epochs"], batch_size=params["batch_size"] or None,
                          learning_rate=params["learning_rate"], loss_kind=params["loss"], seed=seed,
                          interpolation_threshold=params["interpolation_threshold"])


def _base_init(params, train, seed, k):
    return sn.he_init(params["width"], train.d, train.num_classes, seed=derive_seed(seed, 1, k))


# ----------------------------------------------------------------------------
# net-lambda-sweep


def _sweep_check(params):
    out = _net_check(params) + _positive(params, "lambdas", "seeds") + _nonempty(params, "lambdas")
    if params["lambdas"] != sorted(params["lambdas"]):
        out.append("lambdas must be sorted ascending")
    return out


def _sweep_run(params, cell, seed):
    k = cell["seed_index"]
    train, test = _net_data(params, seed)
    base = _base_init(params, train, seed, k)
    cfg = _train_config(params, derive_seed(seed, 2, k))
    rows = sn.ni_vs_lambda_sweep(base, params["lambdas"], train, cfg, test)
    for row in rows:
        row["seed_index"] = k
    return rows


NET_LAMBDA_SWEEP = Experiment(
    "net-lambda-sweep",
    "Per-layer MI/HI/NI of trained lambda-rescaled two-layer ReLU networks.",
    NET_PARAMS + (
        Param("lambdas", LIST_REAL, [0.25, 0.5, 1.0, 2.0, 4.0], "rescaling factors (sorted)"),
        Param("seeds", INT, 5, "independent initializations"),
    ),
    ("lambda", "seed_index", "MI_W", "MI_V", "HI_W", "HI_V", "NI_W", "NI_V", "test_err",
     "test_err_ablate_W", "test_err_ablate_V", "epochs"),
    _sweep_check, lambda params: {"cells": params["seeds"], "trainings": params["seeds"] * len(params["lambdas"])},
    lambda params: [{"seed_index": k} for k in range(params["seeds"])],
    _sweep_run,
    ["NI is init-referenced: a layer is reset to its lambda-scaled initial weights"],
)


# ----------------------------------------------------------------------------
# net-prune-retrain


def _prune_check(params):
    out = _net_check(params) + _positive(params, "lambdas", "seeds")
    out += _nonempty(params, "lambdas", "methods", "fractions", "modes") + _fractions(params, "fractions")
    out += [f"unknown method {m!r}" for m in params["methods"] if m not in ("MP", "HP")]
    out += [f"unknown mode {m!r}" for m in params["modes"] if m not in (sn.GLOBAL, sn.LAYERWISE)]
    return out


def _prune_run(params, cell, seed):
    k, lam = cell["seed_index"], cell["lambda"]
    train, test = _net_data(params, seed)
    base = _base_init(params, train, seed, k)
    cfg = _train_config(params, derive_seed(seed, 2, k))
    dense = sn.train(sn.lambda_rescale(base, lam), train, cfg).net
    rows = []
    for method in params["methods"]:
        for mode in params["modes"]:
            for frac in params["fractions"]:
                rec = sn.prune_retrain(base, lam, train, cfg, method, frac, mode, test, trained=dense)
                row = dict(rec.__dict__)
                row["lambda"] = row.pop("lam")
                row["seed_index"] = k
                rows.append(row)
    return rows


NET_PRUNE_RETRAIN = Experiment(
    "net-prune-retrain",
    "Global and layer-wise MP/HP pruning with rewinding to init and masked retraining.",
    NET_PARAMS + (
        Param("lambdas", LIST_REAL, [0.25, 1.0, 4.0], "rescaling factors"),
        Param("methods", LIST_STR, ["MP", "HP"], "MP or HP"),
        Param("modes", LIST_STR, [sn.GLOBAL, sn.LAYERWISE], "global or layerwise masks"),
        Param("fractions", LIST_REAL, [0.01, 0.05, 0.2], "kept fraction of weights"),
        Param("seeds", INT, 1, "independent initializations"),
    ),
    ("lambda", "seed_index", "method", "mode", "fraction", "test_accuracy", "dense_test_accuracy",
     "surviving_fraction_W", "surviving_fraction_V", "layer_dead"),
    _prune_check, lambda params: {"cells": params["seeds"] * len(params["lambdas"])},
    lambda params: [{"seed_index": k, "lambda": lam} for k in range(params["seeds"]) for lam in params["lambdas"]],
    _prune_run,
)


# ----------------------------------------------------------------------------
# ppls-bounds


def _ppls_check(params):
    out = _positive(params, "n", "block_dims", "column_scales") + _nonneg(params, "instances", "tight_instances")
    out += _nonempty(params, "block_dims", "tight_dims")
    if len(params["column_scales"]) != len(params["block_dims"]):
        out.append("column_scales needs one entry per block")
    if any(pi < params["n"] for pi in params["block_dims"]):
        out.append("every block width must be ≥ n")
    if any(pi < 1 for pi in params["tight_dims"]):
        out.append("tight_dims entries must be ≥ 1")
    return out


def _ppls_rows(kind, index, report, blocks, iterations):
    rows = []
    for (block, bound), margin in sorted(report.min_margins.items()):
        count = sum(1 for v in report.violations if v.block == block and v.bound == bound)
        kappa = blocks.kappa(block) if kind == "theorem" else blocks.kappa_tilde(block)
        rows.append(dict(kind=kind, instance=index, block=block, bound=bound, kappa=kappa,
                         min_margin=margin, violations=count, iterations=iterations))
    return rows


def _ppls_run(params, cell, seed):
    i = cell["instance"]
    if cell["kind"] == "theorem":
        blocks, y = ppls.random_instance(params["n"], params["block_dims"], derive_seed(seed, 1, i),
                                         params["column_scales"])
        traj = ppls.run_gd(blocks, y, max_iters=params["max_iters"])
        return _ppls_rows("theorem", i, ppls.check_theorem_bounds(traj, blocks), blocks, traj.iterations)
    blocks, y = ppls.random_instance(1, params["tight_dims"], derive_seed(seed, 2, i))
    return _ppls_rows("tightness", i, ppls.check_tightness(blocks, y), blocks, 0)


PPLS_BOUNDS = Experiment(
    "ppls-bounds",
    "Per-block trajectory bounds of gradient descent on block regression, and their converses.",
    (
        Param("n", INT, 20, "equations"),
        Param("block_dims", LIST_INT, [40, 40], "block widths p_i (each >= n)"),
        Param("column_scales", LIST_REAL, [1.0, 1.0], "multiplier of each block design"),
        Param("instances", INT, 20, "random instances for the trajectory bounds"),
        Param("tight_dims", LIST_INT, [1, 1, 1], "block widths of the single-equation converse instances"),
        Param("tight_instances", INT, 5, "random single-equation instances"),
        Param("max_iters", INT, 1_000_000, "gradient steps cap"),
    ),
    ("kind", "instance", "block", "bound", "kappa", "min_margin", "violations", "iterations"),
    _ppls_check, lambda params: {"cells": params["instances"] + params["tight_instances"]},
    lambda params: ([{"kind": "theorem", "instance": i} for i in range(params["instances"])]
                    + [{"kind": "tightness", "instance": i} for i in range(params["tight_instances"])]),
    _ppls_run,
)


# ----------------------------------------------------------------------------
# l1-phase


def _l1_check(params):
    out = _positive(params, "p", "s", "trials", "n_values") + _nonempty(params, "R_values", "n_values")
    if params["s"] > params["p"]:
        out.append("s must be ≤ p")
    if any(r < 1 for r in params["R_values"]):
        out.append("R_values entries must be ≥ 1")
    if any(n > params["p"] for n in params["n_values"]):
        out.append("n_values entries must be ≤ p")
    return out


def _l1_derived(params):
    if params["s"] > params["p"]:
        return {}
    return {f"width_bound_R{format(R, 'g')}": l1_bias.width_bound_spike(params["p"], params["s"], R)
            for R in params["R_values"]}


def _l1_run(params, cell, seed):
    R, n = cell["R"], cell["n"]
    (_, rate), = l1_bias.phase_curve(params["p"], params["s"], R, [n], params["trials"], seed,
                                     max_iters=params["max_iters"])
    return [dict(R=R, n=n, success_rate=rate, width_bound=l1_bias.width_bound_spike(params["p"], params["s"], R),
                 trials=params["trials"])]


L1_PHASE = Experiment(
    "l1-phase",
    "Basis-pursuit recovery rate against sample size under a covariance spike of strength R.",
    (
        Param("p", INT, 200, "ambient dimension"),
        Param("s", INT, 5, "sparsity"),
        Param("R_values", LIST_REAL, [1.0, 8.0], "spike strengths"),
        Param("n_values", LIST_INT, [5, 10, 15, 20, 25, 30, 35, 40, 45, 55], "sample sizes"),
        Param("trials", INT, 50, "instances per (R, n)"),
        Param("max_iters", INT, l1_bias.BP_MAX_ITERS, "solver iteration cap"),
    ),
    ("R", "n", "success_rate", "width_bound", "trials"),
    _l1_check, _l1_derived,
    lambda params: [{"R": R, "n": n} for R in params["R_values"] for n in params["n_values"]],
    _l1_run,
    ["the sign pattern and covariance depend only on the seed, so every cell shares them"],
)


# ----------------------------------------------------------------------------
# pinv-scaling


def _pinv_check(params):
    out = _positive(params, "n", "p", "lambdas", "risk_n", "risk_p", "risk_support") + _nonempty(params, "lambdas")
    if params["n"] >= params["p"]:
        out.append("first-entry study needs n < p")
    if params["risk_support"] > params["risk_n"]:
        out.append("risk_support must be ≤ risk_n")
    if params["risk_n"] > params["risk_p"]:
        out.append("risk_n must be ≤ risk_p")
    return out


def _pinv_run(params, cell, seed):
    rng = derive_rng(seed, 0)
    X = rng.standard_normal((params["n"], params["p"]))
    y = rng.standard_normal(params["n"])
    rows = [dict(quantity="first_entry", **{"lambda": lam}, value=linreg.scaled_pinv_first_entry(X, y, lam))
            for lam in params["lambdas"]]
    rng = derive_rng(seed, 1)
    Xr = rng.standard_normal((params["risk_n"], params["risk_p"]))
    theta_bar = np.zeros(params["risk_p"])
    k = params["risk_support"]
    theta_bar[:k] = rng.standard_normal(k)
    for lam, risk in linreg.sparse_scaling_risk_curve(Xr, theta_bar, np.arange(k), params["lambdas"]):
        rows.append(dict(quantity="sparse_risk", **{"lambda": lam}, value=risk))
    return rows


PINV_SCALING = Experiment(
    "pinv-scaling",
    "First weight of the reweighted pseudo-inverse model, and min-norm risk as the true support is up-weighted.",
    (
        Param("n", INT, 3, "rows of the first-entry design"),
        Param("p", INT, 6, "columns of the first-entry design"),
        Param("lambdas", LIST_REAL, [0.5, 1.0, 2.0, 4.0, 8.0, 1e6], "weights"),
        Param("risk_n", INT, 20, "rows of the risk-curve design"),
        Param("risk_p", INT, 60, "columns of the risk-curve design"),
        Param("risk_support", INT, 5, "support size of the noiseless target"),
    ),
    ("quantity", "lambda", "value"),
    _pinv_check, lambda params: {"cells": 1},
    lambda params: [{}],
    _pinv_run,
)


EXPERIMENTS = {e.name: e for e in (AUX_PRUNE_CURVE, LINREG_INVARIANCE, NET_LAMBDA_SWEEP, NET_PRUNE_RETRAIN,
                                   PPLS_BOUNDS, L1_PHASE, PINV_SCALING)}


def run_cell(name, params, cell, seed):
    return EXPERIMENTS[name].run(params, cell, seed)


def describe(exp: Experiment) -> str:
    from .config import format_value

    width = max(len(p.name) for p in exp.params)
    lines = [f"{exp.name}: {exp.doc}"]
    for p in exp.params:
        lines.append(f"  {p.name:<{width}}  {p.kind:<10} default {format_value(p.default):<14} {p.doc}")
    return "\n".join(lines)


def _as_float(value):
    return float(value) if isinstance(value, (int, float)) and not isinstance(value, bool) else None


def coerce(param: Param, value):
    """Return the value converted to the parameter's kind, or raise ValueError."""
    kind = param.kind
    if kind.startswith("list["):
        inner = Param(param.name, kind[5:-1], None, "")
        items = value if isinstance(value, list) else [value]
        return [coerce(inner, v) for v in items]
    if kind == INT:
        if isinstance(value, bool) or not (isinstance(value, int) or (isinstance(value, float) and value.is_integer())):
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)
    if kind == REAL:
        f = _as_float(value)
        if f is None or not math.isfinite(f):
            raise ValueError(f"expected a real number, got {value!r}")
        return f
    if kind == BOOL:
        if not isinstance(value, bool):
            raise ValueError(f"expected true or false, got {value!r}")
        return value
    if kind == STR:
        if isinstance(value, list):
            raise ValueError("expected a single value, got a list")
        return value if isinstance(value, str) else str(value)
    raise ValueError(f"unknown parameter kind {kind}")
