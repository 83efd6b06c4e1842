"""Two-step identification of drift and diffusion from snapshot data.

Given triples (x0, x1, h) from dX = f(X) dt + g(X) dL with symmetric
alpha-stable L, the location of x1 | x0 is x0 + h f(x0) and its scale is
g(x0) h^(1/alpha).  The drift is therefore fitted first as a location model
(least squares, or least absolute deviations for Cauchy noise), and the
diffusion second by maximum likelihood with the drift frozen.  For
alpha = 1 the scale has a direct estimator and no second network is needed.

Two single-objective baselines are included for comparison: the joint
stable likelihood over both networks, and the Gaussian likelihood for
Brownian data.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, TrainingDivergence
from .fileio import atomic_write_text, csv_text, dump_json
from .neural import Mlp, make_optimizer, optimizer_step
from .sde_sim import SnapshotDataset, grid_points
from .stable_dist import DEFAULT_QUADRATURE, logpdf_standard

__all__ = [
    "NetSpec",
    "FitConfig",
    "FitReport",
    "default_fit_config",
    "mid20_targets",
    "fit_drift_mse",
    "fit_drift_lad",
    "raw_cauchy_scale",
    "cauchy_sigma_direct",
    "nll_terms",
    "nll_loss",
    "fit_diffusion_nll",
    "fit_two_step",
    "fit_joint_nll_diagnostic",
    "fit_gaussian_baseline",
    "gaussian_terms",
    "l2_error",
    "fit",
    "write_report",
]

MODES = ("cauchy", "general", "joint_nll_diagnostic", "gaussian_baseline")
G_FLOOR = 1e-13


@dataclass(frozen=True)
class NetSpec:
    """Architecture and optimizer settings for one network.

    ``batch_size=None`` trains on the full dataset each step.
    """

    hidden: tuple = (25, 25)
    optimizer: str = "adam"
    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    epochs: int = 300
    batch_size: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(n) for n in self.hidden))
        if not self.hidden or min(self.hidden) < 1:
            raise ConfigError("hidden must list at least one positive layer width")
        if self.optimizer not in ("adam", "adamax"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be positive or null")
        if not self.learning_rate > 0.0:
            raise ConfigError("learning_rate must be positive")

    def build(self, d_in, d_out, seed, softplus=False, floor=0.0):
        dims = (d_in, *self.hidden, d_out)
        if softplus:
            return Mlp.init(dims, seed, "softplus", floor)
        return Mlp.init(dims, seed)


DRIFT_GENERAL = NetSpec((25, 25, 25), "adam", 0.005, epochs=300, batch_size=None)
DIFFUSION_GENERAL = NetSpec((25, 25), "adamax", 0.005, epochs=30, batch_size=512)
DRIFT_CAUCHY = NetSpec((25, 25), "adamax", 0.002, epochs=100, batch_size=100)


@dataclass(frozen=True)
class FitConfig:
    alpha: float
    mode: str = "general"
    drift: NetSpec = DRIFT_GENERAL
    diffusion: NetSpec = DIFFUSION_GENERAL
    use_mid20_trick: bool = True
    seed: int = 0
    output_floor: float = G_FLOOR
    # cauchy mode: True -> one pooled scale, False -> one per x0 group,
    # None -> pooled only when the data has no repeated x0
    pooled_diffusion: bool | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        a = self.alpha
        if not (0.0 < a <= 2.0):
            raise ConfigError(f"alpha must lie in (0, 2], got {a}")
        if (self.mode == "cauchy") != (a == 1.0):
            raise ConfigError("mode 'cauchy' is used exactly when alpha = 1")
        if (self.mode == "gaussian_baseline") != (a == 2.0):
            raise ConfigError("mode 'gaussian_baseline' is used exactly when alpha = 2")
        if not self.output_floor >= 0.0:
            raise ConfigError("output_floor must be non-negative")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("drift", "diffusion"):
            if key in d and isinstance(d[key], dict):
                d[key] = NetSpec(**d[key])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown fit config keys: {sorted(unknown)}")
        return cls(**d)


def default_fit_config(alpha, mode=None, **overrides):
    """Default hyperparameters for ``alpha``; the mode follows from alpha
    unless given (pass ``mode='joint_nll_diagnostic'`` for the baseline)."""
    if mode is None:
        mode = "cauchy" if alpha == 1.0 else "gaussian_baseline" if alpha == 2.0 else "general"
    drift = DRIFT_CAUCHY if mode == "cauchy" else DRIFT_GENERAL
    base = FitConfig(alpha=alpha, mode=mode, drift=drift, diffusion=DIFFUSION_GENERAL)
    return replace(base, **overrides)


@dataclass(frozen=True)
class FitReport:
    """Fitted coefficients on an evaluation grid plus error metrics.

    ``l2_f`` and ``l2_g`` are None when no ground truth was supplied.
    ``models`` holds the trained networks or fields and is not serialized.
    """

    mode: str
    alpha: float
    grid: np.ndarray
    drift_eval: np.ndarray
    diffusion_eval: np.ndarray
    l2_f: float | None
    l2_g: float | None
    loss_curves: dict
    config: dict
    extras: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self):
        return {
            "mode": self.mode,
            "alpha": self.alpha,
            "l2_f": self.l2_f,
            "l2_g": self.l2_g,
            "loss_curves": {k: [float(v) for v in c] for k, c in self.loss_curves.items()},
            "config": self.config,
            "extras": self.extras,
            "grid": self.grid.tolist(),
            "drift_eval": self.drift_eval.tolist(),
            "diffusion_eval": self.diffusion_eval.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["mode"],
            d["alpha"],
            np.array(d["grid"], dtype=float),
            np.array(d["drift_eval"], dtype=float),
            np.array(d["diffusion_eval"], dtype=float),
            d["l2_f"],
            d["l2_g"],
            {k: list(v) for k, v in d["loss_curves"].items()},
            d["config"],
            d.get("extras", {}),
        )


# ---------------------------------------------------------------------------
# preprocessing and simple estimators
# ---------------------------------------------------------------------------


def _central_ranks(n):
    """0-based slice of the middle 20% order statistics of n sorted values."""
    lo = math.ceil(0.4 * n) + 1
    hi = math.floor(0.6 * n)
    if hi < lo:
        lo, hi = math.floor((n + 1) / 2), math.ceil((n + 1) / 2)
    return slice(lo - 1, hi)


def mid20_targets(ds, min_group=5):
    """One record per x0 group whose x1 is the mean of the central 20% band.

    Ranks ceil(0.4 n) + 1 through floor(0.6 n) (1-indexed) of each sorted
    component are averaged; tiny groups fall back to the median ranks.
    """
    if ds.group_bounds is None:
        raise ConfigError("mid20 targets need grouped data (repeated x0)")
    x0, x1, h = [], [], []
    for sl in ds.groups():
        n = sl.stop - sl.start
        if n < min_group:
            raise ConfigError(f"group at record {sl.start} has {n} records; need at least {min_group}")
        band = np.sort(ds.x1[sl], axis=0)[_central_ranks(n)]
        x0.append(ds.x0[sl.start])
        x1.append(band.mean(axis=0))
        h.append(ds.h[sl.start])
    m = len(x0)
    return SnapshotDataset(np.array(x0), np.array(x1), np.array(h), ds.alpha, tuple(range(m + 1)), dict(ds.meta))


def l2_error(truth_fn, fitted, points):
    """Mean squared difference of two vector fields over ``points``."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise ConfigError("l2_error needs at least one point")
    diff = np.asarray(truth_fn(points), dtype=float) - np.asarray(fitted(points), dtype=float)
    return float(np.mean(diff * diff))


def raw_cauchy_scale(residuals):
    """Scale estimate 0.5 * (mean sqrt|r|)^2 of centred Cauchy residuals, per column."""
    r = np.asarray(residuals, dtype=float)
    if r.shape[0] == 0:
        raise ConfigError("empty residual group")
    return 0.5 * np.mean(np.sqrt(np.abs(r)), axis=0) ** 2


class ConstantField:
    """The same diffusion value at every state."""

    def __init__(self, value):
        self.value = np.asarray(value, dtype=float).reshape(-1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, len(self.value))
        return np.broadcast_to(self.value, x.shape).copy()


class GroupwiseField:
    """Per-group estimates extended to arbitrary states: linear interpolation
    in 1-D (flat beyond the ends), nearest group otherwise."""

    def __init__(self, knots, values):
        self.knots = np.asarray(knots, dtype=float)
        self.values = np.asarray(values, dtype=float)

    def __call__(self, x):
        d = self.knots.shape[1]
        x = np.asarray(x, dtype=float).reshape(-1, d)
        if d == 1:
            order = np.argsort(self.knots[:, 0], kind="stable")
            return np.interp(x[:, 0], self.knots[order, 0], self.values[order, 0])[:, None]
        nearest = np.argmin(((x[:, None, :] - self.knots[None, :, :]) ** 2).sum(axis=2), axis=1)
        return self.values[nearest]


def _residuals(ds, f_hat):
    return ds.x1 - ds.x0 - ds.h[:, None] * np.asarray(f_hat(ds.x0), dtype=float)


def cauchy_sigma_direct(ds, f_hat, pooled=False):
    """Direct diffusion estimate for alpha = 1.

    The residual scale of a group is g(x0) h, so the raw estimate is divided
    by h.  Returns an array of shape (groups, d), or (d,) when ``pooled``.
    """
    r = _residuals(ds, f_hat) / ds.h[:, None]
    if pooled:
        return raw_cauchy_scale(r)
    if ds.group_bounds is None:
        raise ConfigError("per-group Cauchy diffusion needs grouped data")
    return np.array([raw_cauchy_scale(r[sl]) for sl in ds.groups()])


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def nll_terms(r, g, h, alpha, quad=DEFAULT_QUADRATURE):
    """Stable negative log-likelihood of residuals r with scale g h^(1/alpha).

    ``r`` and ``g`` are (n, d), ``h`` is (n,).  Returns the loss (mean over
    records of the sum over components) and its gradients with respect to g
    and to the drift value f (through r = x1 - x0 - h f).
    """
    n = r.shape[0]
    hs = h[:, None] ** (1.0 / alpha)
    scale = g * hs
    z = r / scale
    logp, psi = logpdf_standard(z, alpha, quad, grad=True)
    loss = np.sum(np.log(scale) - logp) / n
    d_g = (1.0 + z * psi) / g / n
    d_f = psi * h[:, None] / scale / n
    return float(loss), d_g, d_f


def gaussian_terms(r, g, h):
    """Gaussian negative log-likelihood with variance h g^2 and its gradients."""
    n = r.shape[0]
    var = h[:, None] * g * g
    loss = np.sum(r * r / (2.0 * var) + 0.5 * np.log(var) + 0.5 * math.log(2.0 * math.pi)) / n
    d_g = (1.0 / g - r * r / (var * g)) / n
    d_f = -r / (g * g) / n
    return float(loss), d_g, d_f


def nll_loss(ds, f_hat, g_net, alpha, quad=DEFAULT_QUADRATURE):
    """Stable negative log-likelihood of a batch with the drift held fixed."""
    g = np.asarray(g_net(ds.x0), dtype=float)
    return nll_terms(_residuals(ds, f_hat), g, ds.h, alpha, quad)[0]


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _seeds(seed, n):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(n)


def _train(nets, step_fn, n, spec, shuffle_seed, stage):
    """Mini-batch loop shared by every objective.

    ``step_fn(idx)`` returns (loss, [grads per net in params order]).
    The recorded curve is the sample-weighted mean batch loss per epoch.
    """
    params = [p for net in nets for p in net.params()]
    opt = make_optimizer(spec.optimizer, params, spec.learning_rate, spec.beta1, spec.beta2, spec.epsilon)
    rng = np.random.default_rng(shuffle_seed)
    bs = n if spec.batch_size is None else min(spec.batch_size, n)
    curve = []
    for epoch in range(spec.epochs):
        order = rng.permutation(n) if bs < n else np.arange(n)
        total = 0.0
        for lo in range(0, n, bs):
            idx = order[lo : lo + bs]
            loss, grads = step_fn(idx)
            flat = [g for gs in grads for g in gs]
            if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in flat):
                raise TrainingDivergence(
                    f"{stage}: non-finite loss or gradient in epoch {epoch}", epoch, epoch - 1
                )
            optimizer_step(opt, params, flat)
            total += loss * len(idx)
        curve.append(total / n)
    return curve


def _check_dims(ds):
    if len(ds) == 0:
        raise ConfigError("empty dataset")


def _fit_location(ds, spec, seed, kind):
    _check_dims(ds)
    init_seed, shuffle_seed = _seeds(seed, 2)
    net = spec.build(ds.dim, ds.dim, init_seed)
    x0, x1, h = ds.x0, ds.x1, ds.h[:, None]

    def step(idx):
        f, cache = net.forward(x0[idx], return_cache=True)
        r = x1[idx] - x0[idx] - h[idx] * f
        m = r.size
        if kind == "mse":
            loss = float(np.sum(r * r)) / m
            up = -2.0 * h[idx] * r / m
        else:
            loss = float(np.sum(np.abs(r))) / m
            up = -h[idx] * np.sign(r) / m
        grads, _ = net.backward(cache, up)
        return loss, [grads]

    curve = _train([net], step, len(ds), spec, shuffle_seed, f"drift ({kind})")
    return net, curve


def fit_drift_mse(ds, spec=DRIFT_GENERAL, seed=0):
    """Least-squares drift fit: mean over records and components of
    (x1 - x0 - h f(x0))^2.  Returns (network, loss curve)."""
    return _fit_location(ds, spec, seed, "mse")


def fit_drift_lad(ds, spec=DRIFT_CAUCHY, seed=0):
    """Least-absolute-deviation drift fit for Cauchy noise."""
    return _fit_location(ds, spec, seed, "lad")


def fit_diffusion_nll(ds, f_hat, alpha, spec=DIFFUSION_GENERAL, seed=0, floor=G_FLOOR, quad=DEFAULT_QUADRATURE):
    """Fit g by the stable likelihood with the drift ``f_hat`` frozen.

    Returns (softplus network clipped at ``floor``, loss curve).
    """
    _check_dims(ds)
    if alpha == 1.0 or not (0.0 < alpha < 2.0):
        raise DomainError("the stable likelihood fit needs alpha in (0, 2) minus {1}")
    init_seed, shuffle_seed = _seeds(seed, 2)
    net = spec.build(ds.dim, ds.dim, init_seed, softplus=True, floor=floor)
    r_all = _residuals(ds, f_hat)
    x0, h = ds.x0, ds.h

    def step(idx):
        g, cache = net.forward(x0[idx], return_cache=True)
        loss, d_g, _ = nll_terms(r_all[idx], g, h[idx], alpha, quad)
        grads, _ = net.backward(cache, d_g)
        return loss, [grads]

    curve = _train([net], step, len(ds), spec, shuffle_seed, "diffusion (nll)")
    return net, curve


def _fit_joint(ds, cfg, terms_fn, fixed_diffusion, stage):
    _check_dims(ds)
    f_seed, g_seed, shuffle_seed = _seeds(cfg.seed, 3)
    f_net = cfg.drift.build(ds.dim, ds.dim, f_seed)
    g_net = None if fixed_diffusion is not None else cfg.diffusion.build(
        ds.dim, ds.dim, g_seed, softplus=True, floor=cfg.output_floor
    )
    x0, x1, h = ds.x0, ds.x1, ds.h

    def step(idx):
        f, f_cache = f_net.forward(x0[idx], return_cache=True)
        if g_net is None:
            g = np.asarray(fixed_diffusion(x0[idx]), dtype=float)
        else:
            g, g_cache = g_net.forward(x0[idx], return_cache=True)
        r = x1[idx] - x0[idx] - h[idx, None] * f
        loss, d_g, d_f = terms_fn(r, g, h[idx])
        grads = [f_net.backward(f_cache, d_f)[0]]
        if g_net is not None:
            grads.append(g_net.backward(g_cache, d_g)[0])
        return loss, grads

    nets = [f_net] if g_net is None else [f_net, g_net]
    curve = _train(nets, step, len(ds), cfg.diffusion, shuffle_seed, stage)
    g_model = fixed_diffusion if g_net is None else g_net
    return f_net, g_model, curve


# ---------------------------------------------------------------------------
# end-to-end fits
# ---------------------------------------------------------------------------


def _default_grid(ds):
    lo, hi = ds.x0.min(axis=0), ds.x0.max(axis=0)
    counts = 101 if ds.dim == 1 else 41
    return grid_points(list(zip(lo, hi)), counts)


def _report(ds, cfg, f_model, g_model, curves, truth, grid, eval_points, extras, models):
    grid = _default_grid(ds) if grid is None else np.asarray(grid, dtype=float).reshape(-1, ds.dim)
    pts = ds.x0 if eval_points is None else np.asarray(eval_points, dtype=float).reshape(-1, ds.dim)
    l2_f = l2_g = None
    if truth is not None:
        if truth.dim != ds.dim:
            raise ConfigError(f"truth has dimension {truth.dim}, data has {ds.dim}")
        l2_f = l2_error(truth.f, f_model, pts)
        l2_g = l2_error(truth.g, g_model, pts)
        extras = {**extras, "eval_points": len(pts)}
    return FitReport(
        cfg.mode,
        cfg.alpha,
        grid,
        np.asarray(f_model(grid), dtype=float),
        np.asarray(g_model(grid), dtype=float),
        l2_f,
        l2_g,
        curves,
        cfg.to_dict(),
        extras,
        models,
    )


def fit_two_step(ds, cfg, truth=None, grid=None, eval_points=None, quad=DEFAULT_QUADRATURE):
    """Drift first, diffusion second.

    ``cauchy`` mode: LAD drift on all records, then the direct scale
    estimate (pooled or per x0 group).  ``general`` mode: optional mid20
    aggregation, least-squares drift, then the stable likelihood for g with
    the drift frozen.  L2 errors against ``truth`` are averaged over
    ``eval_points`` (default: every record's x0).
    """
    if cfg.mode not in ("cauchy", "general"):
        raise ConfigError(f"fit_two_step handles modes 'cauchy' and 'general', not {cfg.mode!r}")
    drift_seed, diffusion_seed = _seeds(cfg.seed, 2)
    extras = {}
    if cfg.mode == "cauchy":
        f_net, f_curve = fit_drift_lad(ds, cfg.drift, drift_seed)
        pooled = cfg.pooled_diffusion
        if pooled is None:
            pooled = ds.group_bounds is None or ds.n_groups == len(ds)
        if not pooled and ds.group_bounds is None:
            raise ConfigError("per-group Cauchy diffusion needs grouped data (repeated x0)")
        est = cauchy_sigma_direct(ds, f_net, pooled=pooled)
        if pooled:
            g_model = ConstantField(est)
            extras["pooled_diffusion"] = est.tolist()
        else:
            knots = np.array([ds.x0[sl.start] for sl in ds.groups()])
            g_model = GroupwiseField(knots, est)
        curves = {"drift": f_curve}
        models = {"drift": f_net, "diffusion": g_model}
    else:
        drift_data = mid20_targets(ds) if cfg.use_mid20_trick else ds
        f_net, f_curve = fit_drift_mse(drift_data, cfg.drift, drift_seed)
        before = f_net.param_hash()
        g_net, g_curve = fit_diffusion_nll(
            ds, f_net, cfg.alpha, cfg.diffusion, diffusion_seed, cfg.output_floor, quad
        )
        after = f_net.param_hash()
        if before != after:
            raise AssertionError("drift network changed during the diffusion stage")
        extras["drift_hash"] = after
        extras["drift_records"] = len(drift_data)
        curves = {"drift": f_curve, "diffusion": g_curve}
        g_model = g_net
        models = {"drift": f_net, "diffusion": g_net}
    return _report(ds, cfg, f_net, g_model, curves, truth, grid, eval_points, extras, models)


def fit_joint_nll_diagnostic(ds, cfg, truth=None, grid=None, eval_points=None, fixed_diffusion=None,
                             quad=DEFAULT_QUADRATURE):
    """Train drift and diffusion together on the stable likelihood alone.

    Kept as a baseline: the single objective tends to trade drift error for
    scale.  Passing ``fixed_diffusion`` (a callable) freezes g at it.
    Optimizer, batch size and epochs come from ``cfg.diffusion``.
    """
    if cfg.alpha == 1.0 or not (0.0 < cfg.alpha < 2.0):
        raise DomainError("the joint stable likelihood needs alpha in (0, 2) minus {1}")

    def terms(r, g, h):
        return nll_terms(r, g, h, cfg.alpha, quad)

    f_net, g_model, curve = _fit_joint(ds, cfg, terms, fixed_diffusion, "joint nll")
    extras = {"diffusion_fixed": fixed_diffusion is not None}
    models = {"drift": f_net, "diffusion": g_model}
    return _report(ds, cfg, f_net, g_model, {"joint": curve}, truth, grid, eval_points, extras, models)


def fit_gaussian_baseline(ds, cfg, truth=None, grid=None, eval_points=None):
    """Joint fit of f and g under the Gaussian transition x1 ~ N(x0 + h f, h g^2)."""
    if cfg.alpha != 2.0:
        raise DomainError("the Gaussian baseline is for Brownian data (alpha = 2)")
    f_net, g_net, curve = _fit_joint(ds, cfg, gaussian_terms, None, "gaussian nll")
    models = {"drift": f_net, "diffusion": g_net}
    return _report(ds, cfg, f_net, g_net, {"joint": curve}, truth, grid, eval_points, {}, models)


def fit(ds, cfg, truth=None, grid=None, eval_points=None):
    """Dispatch on ``cfg.mode``."""
    if cfg.mode in ("cauchy", "general"):
        return fit_two_step(ds, cfg, truth, grid, eval_points)
    if cfg.mode == "joint_nll_diagnostic":
        return fit_joint_nll_diagnostic(ds, cfg, truth, grid, eval_points)
    return fit_gaussian_baseline(ds, cfg, truth, grid, eval_points)


def write_report(report, out_dir, stem="fit"):
    """Write ``<stem>.json`` plus drift and diffusion grid CSVs; returns the paths."""
    out = Path(out_dir)
    d = report.grid.shape[1]
    xs = [f"x_{i + 1}" for i in range(d)]
    paths = {}
    for name, vals, prefix in (("drift", report.drift_eval, "f"), ("diffusion", report.diffusion_eval, "g")):
        header = xs + [f"{prefix}_{i + 1}" for i in range(d)]
        rows = np.column_stack([report.grid, vals]).tolist()
        paths[name] = atomic_write_text(out / f"{stem}_{name}.csv", csv_text(header, rows))
    body = report.to_dict()
    for key in ("grid", "drift_eval", "diffusion_eval"):
        body.pop(key)
    body["grid_files"] = {k: p.name for k, p in paths.items()}
    paths["report"] = atomic_write_text(out / f"{stem}.json", dump_json(body))
    for name, model in report.models.items():
        if isinstance(model, Mlp):
            paths[f"{name}_net"] = atomic_write_text(out / f"{stem}_{name}_net.json", model.to_json() + "\n")
    return paths
