"""Bayesian estimation of the stability index by random-walk Metropolis-Hastings.

The chain targets the posterior of (alpha, log sigma) for data modelled as
i.i.d. S_alpha(sigma, 0, 0).  Priors: flat on alpha in (0, 2) and
log-uniform on sigma over [1e-3, 1e3].  Both priors are flat in the sampled
coordinates and the proposals are symmetric, so the acceptance ratio is the
likelihood ratio inside the support and zero outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, NumericalError
from .stable_dist import DEFAULT_QUADRATURE, logpdf_standard, logpdf_table, pdf_fourier

__all__ = [
    "McmcConfig",
    "McmcResult",
    "mh_log_likelihood",
    "estimate_alpha_mcmc",
    "increments_from_trajectory",
    "standardized_group_residuals",
]

SIGMA_RANGE = (1e-3, 1e3)
# inside this band around 1 the Zolotarev integral is avoided
NEAR_CAUCHY = 5e-3


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 5000
    burn_in: int = 1000
    proposal_std_alpha: float = 0.05
    proposal_std_log_sigma: float = 0.1
    init_alpha: float = 1.2
    init_sigma: float = 1.0
    seed: int = 0
    histogram_bins: int = 40

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be positive")
        if not (0 <= self.burn_in < self.iterations):
            raise ConfigError("burn_in must lie in [0, iterations)")
        if not (self.proposal_std_alpha > 0.0 and self.proposal_std_log_sigma > 0.0):
            raise ConfigError("proposal scales must be positive")
        if not (0.0 < self.init_alpha < 2.0):
            raise ConfigError("init_alpha must lie in (0, 2)")
        if not (SIGMA_RANGE[0] <= self.init_sigma <= SIGMA_RANGE[1]):
            raise ConfigError(f"init_sigma must lie in {SIGMA_RANGE}")
        if self.histogram_bins < 1:
            raise ConfigError("histogram_bins must be positive")


@dataclass(frozen=True)
class McmcResult:
    """Chain of (alpha, sigma) states, one row per iteration (burn-in included)."""

    chain: np.ndarray
    log_likelihood: np.ndarray
    burn_in: int
    posterior_mean_alpha: float
    posterior_mean_sigma: float
    acceptance_rate: float
    histogram: tuple
    flags: list = field(default_factory=list)

    def to_dict(self):
        counts, edges = self.histogram
        return {
            "posterior_mean_alpha": self.posterior_mean_alpha,
            "posterior_mean_sigma": self.posterior_mean_sigma,
            "acceptance_rate": self.acceptance_rate,
            "iterations": int(self.chain.shape[0]),
            "burn_in": self.burn_in,
            "histogram": {"counts": [int(c) for c in counts], "edges": [float(e) for e in edges]},
            "flags": list(self.flags),
        }


def _in_support(alpha, sigma):
    return 0.0 < alpha < 2.0 and SIGMA_RANGE[0] <= sigma <= SIGMA_RANGE[1]


def mh_log_likelihood(samples, alpha, sigma, quad=DEFAULT_QUADRATURE):
    """sum_k log[(1/sigma) p_alpha(x_k / sigma)]; -inf outside the prior support."""
    x = np.asarray(samples, dtype=float).ravel()
    if not _in_support(alpha, sigma):
        return -math.inf
    z = x / sigma
    if alpha != 1.0 and abs(alpha - 1.0) < NEAR_CAUCHY:
        logp = np.log(pdf_fourier(z, alpha, quad))
    else:
        logp = logpdf_standard(z, alpha, quad)
    return float(np.sum(logp) - x.size * math.log(sigma))


class _TableLikelihood:
    """Log-likelihood from a per-alpha spline of log p_alpha.

    The spline covers |z| up to max|x| / sigma_min so any sigma in the prior
    support is served by one table per alpha.  The two most recent tables
    are kept, which covers the current state and one proposal.  Below
    alpha = 0.3 the spline loses accuracy and direct evaluation is used.
    """

    def __init__(self, samples, quad):
        self.raw = np.asarray(samples, dtype=float).ravel()
        self.x = np.abs(self.raw)
        self.z_max = max(float(self.x.max(initial=0.0)) / SIGMA_RANGE[0], 1.0)
        self.quad = quad
        self._tables = {}

    def _table(self, alpha):
        table = self._tables.get(alpha)
        if table is None:
            table = logpdf_table(alpha, self.z_max, self.quad)
            if len(self._tables) >= 2:
                self._tables.pop(next(iter(self._tables)))
            self._tables[alpha] = table
        return table

    def __call__(self, alpha, sigma):
        if not _in_support(alpha, sigma):
            return -math.inf
        if alpha < 0.3:
            return mh_log_likelihood(self.raw, alpha, sigma, self.quad)
        logp = self._table(alpha)(self.x / sigma)
        return float(np.sum(logp) - self.x.size * math.log(sigma))


def estimate_alpha_mcmc(samples, cfg=McmcConfig(), quad=DEFAULT_QUADRATURE, exact=False):
    """Random-walk Metropolis-Hastings on (alpha, log sigma).

    Each iteration proposes a Gaussian move of alpha (sigma fixed) and then
    of log sigma (alpha fixed), accepting each by the Metropolis rule.  The
    acceptance rate counts both moves.  ``exact=True`` evaluates every
    likelihood by direct quadrature instead of the interpolated table.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ConfigError("no samples")
    if not np.all(np.isfinite(x)):
        raise ConfigError("samples must be finite")
    loglik = (lambda a, s: mh_log_likelihood(x, a, s, quad)) if exact else _TableLikelihood(x, quad)
    rng = np.random.default_rng(cfg.seed)
    a, ls = cfg.init_alpha, math.log(cfg.init_sigma)
    cur = loglik(a, math.exp(ls))
    chain = np.empty((cfg.iterations, 2))
    lls = np.empty(cfg.iterations)
    accepted = 0
    failed = 0
    for i in range(cfg.iterations):
        for coord in (0, 1):
            if coord == 0:
                a_new, ls_new = a + cfg.proposal_std_alpha * rng.standard_normal(), ls
            else:
                a_new, ls_new = a, ls + cfg.proposal_std_log_sigma * rng.standard_normal()
            log_u = math.log(rng.random() or 1e-300)
            try:
                new = loglik(a_new, math.exp(ls_new))
            except NumericalError:
                # a proposal whose density cannot be evaluated is rejected
                new = -math.inf
                failed += 1
            if new > -math.inf and log_u < new - cur:
                a, ls, cur = a_new, ls_new, new
                accepted += 1
        chain[i] = a, math.exp(ls)
        lls[i] = cur
    post = chain[cfg.burn_in :]
    rate = accepted / (2 * cfg.iterations)
    flags = []
    if not (0.05 < rate < 0.8):
        flags.append(f"acceptance rate {rate:.3f} outside (0.05, 0.8)")
    if failed:
        flags.append(f"{failed} proposals rejected because the density could not be evaluated")
    counts, edges = np.histogram(post[:, 0], bins=cfg.histogram_bins)
    return McmcResult(
        chain,
        lls,
        cfg.burn_in,
        float(post[:, 0].mean()),
        float(post[:, 1].mean()),
        rate,
        (counts, edges),
        flags,
    )


def increments_from_trajectory(traj):
    """Successive differences of a path given as (t, x) pairs.

    Returns (increments, time steps).  An increment over a step dt of a
    standard motion is S_alpha(dt^(1/alpha), 0, 0); rescaling is left to
    the caller.
    """
    if len(traj) == 0:
        return np.empty(0), np.empty(0)
    arr = np.asarray(traj, dtype=float)
    t, x = arr[:, 0], arr[:, 1]
    dt = np.diff(t)
    if np.any(dt <= 0.0):
        raise DomainError("trajectory times must be strictly increasing")
    return np.diff(x), dt


def standardized_group_residuals(ds, min_group=5):
    """Residuals about each x0 group's central location, divided by the
    group's median absolute residual.

    For symmetric stable noise every group then shares one scale whatever
    g(x0) is, so the pooled values suit :func:`estimate_alpha_mcmc`.
    Only the first component is used for multi-dimensional data.
    """
    from .estimator import _central_ranks

    if ds.group_bounds is None:
        raise ConfigError("residual extraction needs grouped data (repeated x0)")
    out = []
    for sl in ds.groups():
        v = ds.x1[sl, 0]
        if v.size < min_group:
            continue
        loc = np.sort(v)[_central_ranks(v.size)].mean()
        r = v - loc
        scale = np.median(np.abs(r))
        if scale > 0.0:
            out.append(r / scale)
    if not out:
        raise ConfigError(f"no group has at least {min_group} records with spread")
    return np.concatenate(out)
