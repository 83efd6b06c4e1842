"""Euler-Maruyama simulation of SDEs driven by symmetric alpha-stable noise.

The model is dX = f(X) dt + diag(g(X)) dL, with L a vector of independent
symmetric alpha-stable motions.  One step of length h gives

    x1 = x0 + h f(x0) + g(x0) * L_h,   L_h ~ S_alpha(h^(1/alpha), 0, 0),

so x1 given x0 is S_alpha(g(x0) h^(1/alpha), 0, x0 + h f(x0)) componentwise.
For alpha = 2 the increments are Brownian, sqrt(h) N(0, 1), so that the same
g appears in the Gaussian likelihood.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError
from .fileio import atomic_write_text, csv_text, dump_json
from .stable_dist import sample_standard, split_streams

__all__ = [
    "SystemSpec",
    "SnapshotDataset",
    "builtin_system",
    "available_systems",
    "em_step",
    "stable_increments",
    "grid_points",
    "generate_snapshots",
    "simulate_trajectory",
    "write_dataset",
    "read_dataset",
]


@dataclass(frozen=True)
class SystemSpec:
    """A ground-truth SDE with diagonal noise.

    ``drift`` and ``diffusion_diag`` map an (n, d) array of states to an
    (n, d) array.  ``domain`` is a tuple of (low, high) pairs, one per axis.
    """

    name: str
    dim: int
    drift: Callable
    diffusion_diag: Callable
    domain: tuple
    description: str = ""

    def __post_init__(self):
        if self.dim < 1 or len(self.domain) != self.dim:
            raise ConfigError(f"system {self.name!r}: domain must have one interval per axis")

    def f(self, x):
        return np.asarray(self.drift(_rows(x, self.dim)), dtype=float)

    def g(self, x):
        return np.asarray(self.diffusion_diag(_rows(x, self.dim)), dtype=float)


def _rows(x, dim):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim == 1:
        x = x.reshape(-1, dim)
    if x.ndim != 2 or x.shape[1] != dim:
        raise DomainError(f"expected states of dimension {dim}, got shape {x.shape}")
    return x


def _const(c):
    return lambda x: np.full_like(x, c)


def _sys1(name, f, g, domain, description=""):
    return SystemSpec(name, 1, f, g, (domain,), description)


def _maier_stein(x, k=1.0):
    u, v = x[:, 0], x[:, 1]
    return np.stack([u - u**3 - k * u * v**2, -(1.0 + u**2) * v], axis=1)


def _linear_coupled_drift(x):
    u, v = x[:, 0], x[:, 1]
    return np.stack([u + v, 4.0 * u - 2.0 * v], axis=1)


def _linear_coupled_diffusion(x):
    u, v = x[:, 0], x[:, 1]
    return np.stack([0.5 * v + 1.0, 0.5 * u + 1.0], axis=1)


_LIN = lambda x: -x + 1.0  # noqa: E731
_SQ = lambda x: -(x**2)  # noqa: E731
_DW = lambda x: -(x**3) + x  # noqa: E731

_REGISTRY = {
    s.name: s
    for s in [
        _sys1("ou_additive", _LIN, _const(1.0), (-1.0, 1.0), "f = -x + 1, g = 1"),
        _sys1("square_additive", _SQ, _const(1.0), (-3.0, 3.0), "f = -x^2, g = 1"),
        _sys1("sine_additive", np.sin, _const(1.0), (-3.0, 3.0), "f = sin x, g = 1"),
        _sys1("ou_cauchy_mult", _LIN, lambda x: 0.1 * x + 0.5, (-3.0, 3.0), "f = -x + 1, g = 0.1x + 0.5"),
        _sys1("square_mult", _SQ, lambda x: 0.1 * x + 0.5, (-3.0, 3.0), "f = -x^2, g = 0.1x + 0.5"),
        _sys1("sine_mult", np.sin, lambda x: 0.1 * x + 0.5, (-3.0, 3.0), "f = sin x, g = 0.1x + 0.5"),
        _sys1("double_well_additive", _DW, _const(1.0), (-1.0, 1.0), "f = -x^3 + x, g = 1"),
        _sys1(
            "log_cuberoot_additive",
            lambda x: np.log(x + 1.5) - np.abs(x + 1.5) ** (1.0 / 3.0),
            _const(1.0),
            (-1.0, 1.0),
            "f = log(x + 1.5) - |x + 1.5|^(1/3), g = 1",
        ),
        _sys1("double_well_linear_mult", _DW, lambda x: x + 1.0, (-1.0, 1.0), "f = -x^3 + x, g = x + 1"),
        _sys1(
            "double_well_sine_mult",
            _DW,
            lambda x: np.sin(np.pi * x) + 1.0,
            (-1.0, 1.0),
            "f = -x^3 + x, g = sin(pi x) + 1",
        ),
        _sys1("ou_linear_mult", _LIN, lambda x: x + 1.0, (-1.0, 1.0), "f = -x + 1, g = x + 1"),
        _sys1("km_compare", lambda x: 4.0 * x - x**3, _const(1.0), (-2.5, 2.5), "f = 4x - x^3, g = 1"),
        _sys1("ou_small_noise", _LIN, _const(0.1), (-1.0, 1.0), "f = -x + 1, g = 0.1"),
        SystemSpec(
            "maier_stein",
            2,
            _maier_stein,
            _const(1.0),
            ((-1.0, 1.0), (-1.0, 1.0)),
            "f = (x - x^3 - x y^2, -(1 + x^2) y), g = (1, 1)",
        ),
        SystemSpec(
            "linear_coupled_mult",
            2,
            _linear_coupled_drift,
            _linear_coupled_diffusion,
            ((-1.0, 1.0), (-1.0, 1.0)),
            "f = (x + y, 4x - 2y), g = (0.5y + 1, 0.5x + 1)",
        ),
    ]
}


def available_systems():
    return sorted(_REGISTRY)


def builtin_system(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ConfigError(
            f"unknown system {name!r}; available: {', '.join(available_systems())}"
        ) from None


def em_step(x, sys, h, noise):
    """One Euler-Maruyama step x + h f(x) + g(x) * noise (rows are states)."""
    if not h > 0.0:
        raise DomainError(f"h must be positive, got {h}")
    x = _rows(x, sys.dim)
    noise = np.asarray(noise, dtype=float).reshape(x.shape)
    return x + h * sys.f(x) + sys.g(x) * noise


def stable_increments(alpha, h, shape, rng):
    """Independent increments of the driving motion over a step of length h."""
    n = int(np.prod(shape))
    if alpha == 2.0:
        return math.sqrt(h) * rng.standard_normal(n).reshape(shape)
    return h ** (1.0 / alpha) * sample_standard(alpha, n, rng).reshape(shape)


def grid_points(domain, counts):
    """Uniformly spaced points (endpoints included) on a box, as rows."""
    if np.isscalar(counts):
        counts = [int(counts)] * len(domain)
    axes = [np.linspace(lo, hi, int(n)) for (lo, hi), n in zip(domain, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class SnapshotDataset:
    """Triples (x0, x1, h).  ``group_bounds`` marks contiguous blocks of
    records sharing x0 and h: group i is records[bounds[i]:bounds[i+1]]."""

    x0: np.ndarray
    x1: np.ndarray
    h: np.ndarray
    alpha: float
    group_bounds: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        self.x1 = np.asarray(self.x1, dtype=float)
        if self.x0.ndim == 1:
            self.x0, self.x1 = self.x0[:, None], self.x1.reshape(-1, 1)
        self.h = np.asarray(self.h, dtype=float).reshape(-1)
        if self.x0.shape != self.x1.shape or self.h.shape[0] != self.x0.shape[0]:
            raise ConfigError("x0, x1 and h must describe the same records")
        if not np.all(self.h > 0.0):
            raise ConfigError("every h must be positive")
        if self.group_bounds is not None:
            b = tuple(int(v) for v in self.group_bounds)
            if len(b) < 2 or b[0] != 0 or b[-1] != len(self) or any(
                lo >= hi for lo, hi in zip(b[:-1], b[1:])
            ):
                raise ConfigError("group_bounds must partition the records into non-empty blocks")
            for lo, hi in zip(b[:-1], b[1:]):
                if np.any(self.x0[lo:hi] != self.x0[lo]) or np.any(self.h[lo:hi] != self.h[lo]):
                    raise ConfigError(f"group [{lo}, {hi}) is not homogeneous in (x0, h)")
            self.group_bounds = b

    def __len__(self):
        return self.x0.shape[0]

    @property
    def dim(self):
        return self.x0.shape[1]

    @property
    def n_groups(self):
        return 0 if self.group_bounds is None else len(self.group_bounds) - 1

    def groups(self):
        b = self.group_bounds
        if b is None:
            raise ConfigError("dataset has no grouping")
        return [slice(lo, hi) for lo, hi in zip(b[:-1], b[1:])]

    def with_inferred_groups(self):
        """Group maximal runs of consecutive records with equal (x0, h)."""
        same = np.all(self.x0[1:] == self.x0[:-1], axis=1) & (self.h[1:] == self.h[:-1])
        cuts = np.flatnonzero(~same) + 1
        bounds = (0, *cuts.tolist(), len(self))
        return SnapshotDataset(self.x0, self.x1, self.h, self.alpha, bounds, dict(self.meta))


def generate_snapshots(sys, alpha, x0_points, reps_per_point, h, seed):
    """One EM step from each start point, ``reps_per_point`` times.

    Each start point draws its noise from its own substream of ``seed``, so
    the result does not depend on evaluation order.
    """
    if not (0.0 < alpha <= 2.0):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    if reps_per_point < 1:
        raise DomainError("reps_per_point must be at least 1")
    pts = _rows(x0_points, sys.dim)
    streams = split_streams(seed, len(pts))
    x0 = np.repeat(pts, reps_per_point, axis=0)
    noise = np.concatenate(
        [stable_increments(alpha, h, (reps_per_point, sys.dim), rng) for rng in streams]
    )
    x1 = em_step(x0, sys, h, noise)
    bounds = tuple(range(0, len(pts) * reps_per_point + 1, reps_per_point))
    meta = {"system": sys.name, "seed": seed, "reps_per_point": reps_per_point}
    return SnapshotDataset(x0, x1, np.full(len(x0), float(h)), float(alpha), bounds, meta)


def simulate_trajectory(sys, alpha, x_init, h, n_steps, seed):
    """Multi-step EM path; returns (times, states of shape (n_steps + 1, d)).

    Consecutive states of a path are not single-step snapshots of the
    likelihood model and should not be fed to the estimators as such.
    """
    rng = np.random.default_rng(seed)
    x = _rows(x_init, sys.dim)[:1].copy()
    path = [x[0].copy()]
    for _ in range(n_steps):
        x = em_step(x, sys, h, stable_increments(alpha, h, x.shape, rng))
        path.append(x[0].copy())
    return h * np.arange(n_steps + 1), np.array(path)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def _header(dim):
    return ["h"] + [f"x0_{i + 1}" for i in range(dim)] + [f"x1_{i + 1}" for i in range(dim)]


def dataset_csv(ds):
    rows = np.column_stack([ds.h, ds.x0, ds.x1])
    return csv_text(_header(ds.dim), rows.tolist())


def dataset_sidecar(ds):
    meta = dict(ds.meta)
    meta.update(
        {
            "dim": ds.dim,
            "alpha": ds.alpha,
            "n_records": len(ds),
            "group_bounds": list(ds.group_bounds) if ds.group_bounds is not None else None,
            "version": __version__,
        }
    )
    return dump_json(meta)


def write_dataset(ds, csv_path, meta_path=None):
    """Write the CSV and its JSON sidecar (default: ``<csv>.json``)."""
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
    atomic_write_text(csv_path, dataset_csv(ds))
    atomic_write_text(meta_path, dataset_sidecar(ds))
    return csv_path, meta_path


def read_dataset(csv_path, meta_path=None):
    """Read a dataset CSV; the sidecar is optional and supplies alpha and grouping."""
    csv_path = Path(csv_path)
    text = csv_path.read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[0] != "h" or (len(header) - 1) % 2:
        raise ConfigError(f"{csv_path}: header must be 'h, x0_1..x0_d, x1_1..x1_d'")
    dim = (len(header) - 1) // 2
    if header != _header(dim):
        raise ConfigError(f"{csv_path}: unexpected header {header}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ConfigError(f"{csv_path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError as exc:
            raise ConfigError(f"{csv_path}:{lineno}: {exc}") from None
    if not rows:
        raise ConfigError(f"{csv_path}: no records")
    arr = np.array(rows)
    meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
    if meta and meta.get("dim", dim) != dim:
        raise ConfigError(f"{meta_path}: dim {meta['dim']} does not match the CSV ({dim})")
    bounds = meta.pop("group_bounds", None)
    alpha = float(meta.pop("alpha", "nan"))
    for key in ("dim", "n_records", "version"):
        meta.pop(key, None)
    return SnapshotDataset(
        arr[:, 1 : 1 + dim],
        arr[:, 1 + dim :],
        arr[:, 0],
        alpha,
        tuple(bounds) if bounds is not None else None,
        meta,
    )
