"""Independent reference computations shared by the test modules.

Nothing here calls the density code under test: CDFs come from a separate
scipy quadrature of the Zolotarev CDF integral (or the Cauchy closed form).
"""

import math

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator


def _log_v(theta, alpha):
    r = alpha / (alpha - 1.0)
    return (
        r * (math.log(math.cos(theta)) - math.log(math.sin(alpha * theta)))
        + math.log(math.cos((alpha - 1.0) * theta))
        - math.log(math.cos(theta))
    )


def stable_cdf_scalar(x, alpha):
    """CDF of S_alpha(1, 0, 0) at x by adaptive quadrature."""
    if alpha == 1.0:
        return 0.5 + math.atan(x) / math.pi
    if x == 0.0:
        return 0.5
    ax = abs(x)
    lx = alpha / (alpha - 1.0) * math.log(ax)

    def integrand(theta):
        arg = lx + _log_v(theta, alpha)
        return 0.0 if arg > 700.0 else math.exp(-math.exp(arg))

    # theta = e^v near 0 and theta = pi/2 - e^v near pi/2, so mass packed
    # against either endpoint is resolved
    lo_part = integrate.quad(lambda v: integrand(math.exp(v)) * math.exp(v),
                             -60.0, math.log(math.pi / 4), epsabs=1e-13, epsrel=1e-10, limit=400)[0]
    hi_part = integrate.quad(lambda v: integrand(math.pi / 2 - math.exp(v)) * math.exp(v),
                             -60.0, math.log(math.pi / 4), epsabs=1e-13, epsrel=1e-10, limit=400)[0]
    val = lo_part + hi_part
    upper = 1.0 - val / math.pi if alpha > 1.0 else 0.5 + val / math.pi
    return upper if x > 0 else 1.0 - upper


def stable_cdf(alpha, x_max=1e12, n=801):
    """Vectorized CDF by monotone interpolation in asinh(x)."""
    u = np.linspace(-math.asinh(x_max), math.asinh(x_max), n)
    f = np.array([stable_cdf_scalar(math.sinh(v), alpha) for v in u])
    interp = PchipInterpolator(u, f)

    def cdf(x):
        return np.clip(interp(np.clip(np.arcsinh(x), u[0], u[-1])), 0.0, 1.0)

    return cdf


def tail_slope(samples, lo=10.0, hi=1e3, n=20, min_count=10):
    """Least-squares slope of log P(|X| > y) against log y over [lo, hi]."""
    a = np.sort(np.abs(np.asarray(samples)))
    ys = np.geomspace(lo, hi, n)
    counts = a.size - np.searchsorted(a, ys, side="right")
    keep = counts >= min_count
    slope, _ = np.polyfit(np.log(ys[keep]), np.log(counts[keep] / a.size), 1)
    return slope


def central_diff(fn, params, eps=1e-6):
    """Central-difference gradient of a scalar function of a list of arrays."""
    out = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + eps
            up = fn()
            p[i] = old - eps
            down = fn()
            p[i] = old
            g[i] = (up - down) / (2 * eps)
        out.append(g)
    return out


def rel_err(a, b, floor=1e-8):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))
