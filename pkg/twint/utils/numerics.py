"""
Quadrature and root-finding helpers shared by the distribution families.

Densities with polynomial tails are integrated after mapping the real line
onto (-1, 1) with x = t / (1 - t^2), which turns the tails into integrable
end behaviour on a compact interval. Callers pass LOG densities so the
mapped integrand exp(log f(x) + log dx/dt) never overflows near t = +-1.
"""
import logging
import math
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev
from scipy import integrate, optimize

from twint.core.config import settings
from twint.core.exceptions import IterationError, QuadratureError

logger = logging.getLogger("Numerics")

LogDensity = Callable[[np.ndarray], np.ndarray]

# smallest relative tolerance brentq accepts
BRENT_RTOL = 4.0 * np.finfo(float).eps


def t_to_x(t):
    t = np.asarray(t, dtype=float)
    return t / (1.0 - t * t)


def x_to_t(x):
    """Inverse of t_to_x; the 2x / (1 + sqrt(1 + 4x^2)) form has no cancellation."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        small = 2.0 * x / (1.0 + np.sqrt(1.0 + 4.0 * x * x))
        large = np.sign(x) * 2.0 / (1.0 / ax + np.sqrt(1.0 / (ax * ax) + 4.0))
    return np.where(ax <= 1.0, small, large)


def _mapped_integrand(log_density: LogDensity):
    def g(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        ti = t[inside]
        one_m = 1.0 - ti * ti
        log_jac = np.log1p(ti * ti) - 2.0 * np.log(one_m)
        with np.errstate(over="ignore", under="ignore"):
            out[inside] = np.exp(log_density(ti / one_m) + log_jac)
        return out

    def g_scalar(t: float) -> float:
        return float(g(np.array([t]))[0])

    return g, g_scalar


def _checked_quad(func, a: float, b: float, what: str, abs_tol: float, points=None) -> float:
    value, abserr = integrate.quad(
        func, a, b, epsabs=abs_tol, epsrel=1e-12, limit=settings.QUAD_LIMIT, points=points
    )
    if not math.isfinite(value) or abserr > 10.0 * max(abs_tol, 1e-12 * abs(value)):
        raise QuadratureError(what, abserr, abs_tol)
    return value


def integrate_real_line(log_density: LogDensity, what: str = "density", abs_tol: float | None = None) -> float:
    """Integral of exp(log_density) over the whole real line."""
    tol = settings.QUAD_ABS_TOL if abs_tol is None else abs_tol
    _, g = _mapped_integrand(log_density)
    return _checked_quad(g, -1.0, 1.0, what, tol, points=[0.0])


def integrate_interval(log_density: LogDensity, lo: float, hi: float, what: str = "density",
                       abs_tol: float | None = None) -> float:
    """Integral of exp(log_density) over [lo, hi]; infinite limits allowed."""
    tol = settings.QUAD_ABS_TOL if abs_tol is None else abs_tol
    _, g = _mapped_integrand(log_density)
    return _checked_quad(g, float(x_to_t(lo)) if math.isfinite(lo) else math.copysign(1.0, lo),
                         float(x_to_t(hi)) if math.isfinite(hi) else math.copysign(1.0, hi), what, tol)


class ChebyshevCdf:
    """
    Numeric cdf of a density known only up to its log-pdf.

    The mapped integrand is interpolated by a Chebyshev series on each
    interior piece of a uniform partition of (-1, 1) and integrated
    analytically; the two end pieces, where the integrand may carry an
    integrable endpoint singularity, are left to adaptive quadrature.
    The table is built once per instance.
    """

    def __init__(self, log_density: LogDensity, pieces: int = 64, degree: int = 32, what: str = "cdf"):
        self.what = what
        self._g, self._g_scalar = _mapped_integrand(log_density)
        self.knots = np.linspace(-1.0, 1.0, pieces + 1)
        self._antiderivatives: list[Chebyshev | None] = []
        masses = np.empty(pieces)
        for i in range(pieces):
            lo, hi = self.knots[i], self.knots[i + 1]
            if i == 0 or i == pieces - 1:
                self._antiderivatives.append(None)
                masses[i] = _checked_quad(self._g_scalar, lo, hi, what, settings.QUAD_ABS_TOL)
            else:
                series = Chebyshev.interpolate(self._g, degree, domain=[lo, hi])
                anti = series.integ(lbnd=lo)
                self._antiderivatives.append(anti)
                masses[i] = anti(hi)
        self._cumulative = np.concatenate([[0.0], np.cumsum(masses)])
        self.total = float(self._cumulative[-1])
        logger.debug(f"{what}: {pieces} pieces, total mass {self.total:.15g}")

    def __call__(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        t = x_to_t(x_arr)
        idx = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.knots) - 2)
        out = np.empty_like(x_arr)
        for j, (tj, i) in enumerate(zip(t, idx)):
            lo = self.knots[i]
            anti = self._antiderivatives[i]
            if anti is None:
                partial = integrate.quad(self._g_scalar, lo, tj, epsabs=settings.QUAD_ABS_TOL,
                                         epsrel=1e-12, limit=settings.QUAD_LIMIT)[0] if tj > lo else 0.0
            else:
                partial = float(anti(tj))
            out[j] = (self._cumulative[i] + partial) / self.total
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if np.ndim(x) == 0 else out


def bracketed_root(func: Callable[[float], float], target: float, start: float = 1.0,
                   tol: float | None = None, what: str = "root") -> float:
    """
    Solve func(x) = target for a nondecreasing func: the bracket [-x_hi, x_hi]
    is grown by doubling from `start`, then refined with Brent's method.
    """
    xtol = settings.QUANTILE_TOL if tol is None else tol
    x_hi = start
    for _ in range(2000):
        if func(-x_hi) <= target <= func(x_hi):
            break
        x_hi *= 2.0
    else:
        raise IterationError(f"could not bracket {what} for target {target}")
    try:
        return float(optimize.brentq(lambda x: func(x) - target, -x_hi, x_hi, xtol=xtol, rtol=BRENT_RTOL,
                                     maxiter=settings.QUANTILE_MAX_ITER * 5))
    except (ValueError, RuntimeError) as e:
        raise IterationError(f"{what} for target {target}: {e}") from e
