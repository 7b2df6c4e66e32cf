"""
Skewed twin-t variants: two-piece, Jones-style and Azzalini-style.

All three are built on the weight p(x) = 1/2 + C^(1/2) (x/sqrt(nu)) / (C + S),
which satisfies p(-x) = 1 - p(x) and p (1 - p) = 1 / (4 (C + S)^4).
"""
import logging
import math
from functools import cached_property
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from twint.core.exceptions import DomainError, EnvelopeError
from twint.models.twin_t import TwinT, _scalar_or_array, log_c_plus_s
from twint.utils.numerics import ChebyshevCdf, bracketed_root, integrate_interval, integrate_real_line
from twint.utils.random_streams import RandomSource, make_rng

logger = logging.getLogger("SkewFamily")

LN2 = math.log(2.0)
LN4 = math.log(4.0)
# covers the body and, through the logspace part, the polynomial tails
ENVELOPE_GRID = np.concatenate([
    np.linspace(-50.0, 50.0, 4001),
    -np.logspace(1.7, 8.0, 400),
    np.logspace(1.7, 8.0, 400),
])
ENVELOPE_SAFETY = 1.05


def _half_offset(x, nu: float):
    # r = p - 1/2 for x >= 0, written as 1 / (sqrt(C/S) + sqrt(S/C)) with C/S = sqrt(1 + 1/S^2)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        s = x * x / nu
        ratio = np.sqrt(1.0 + 1.0 / (s * s))
        root = np.sqrt(ratio)
        return 1.0 / (root + 1.0 / root)


def skew_weight(d: TwinT, x):
    """p(x) in (0, 1) for the base twin-t d."""
    x = np.asarray(x, dtype=float)
    out = 0.5 + np.sign(x) * _half_offset(x, d.nu)
    return _scalar_or_array(out, x)


def log_skew_weights(d: TwinT, x) -> tuple[np.ndarray, np.ndarray]:
    """(log p(x), log(1 - p(x))); the small factor comes from p(1-p) = (C+S)^-4 / 4."""
    x = np.asarray(x, dtype=float)
    log_large = np.log1p(2.0 * _half_offset(x, d.nu)) - LN2
    log_small = -LN4 - 4.0 * log_c_plus_s(x, d.nu) - log_large
    log_p = np.where(x >= 0, log_large, log_small)
    log_q = np.where(x >= 0, log_small, log_large)
    return log_p, log_q


class TwoPieceTwinT(BaseModel):
    """
    f(x/gamma) on the right, f(gamma x) on the left, scaled by 2/(gamma + 1/gamma).
    The mode stays at 0; the second derivative jumps there unless gamma = 1.
    """
    model_config = ConfigDict(frozen=True)

    base: TwinT
    gamma: float = Field(gt=0, allow_inf_nan=False)

    @property
    def positive_probability(self) -> float:
        g2 = self.gamma * self.gamma
        return g2 / (1.0 + g2)

    def _standardized(self, x: np.ndarray) -> np.ndarray:
        return np.where(x >= 0, x / self.gamma, x * self.gamma)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        g = self.gamma
        out = LN2 - math.log(g + 1.0 / g) + np.asarray(self.base.log_pdf(self._standardized(x)))
        return _scalar_or_array(out, x)

    def pdf(self, x):
        return _scalar_or_array(np.exp(self.log_pdf(x)), x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = self._standardized(x)
        g2 = self.gamma * self.gamma
        left = 2.0 / (1.0 + g2) * np.asarray(self.base.cdf(z))
        right = 1.0 - 2.0 * g2 / (1.0 + g2) * np.asarray(self.base.sf(z))
        return _scalar_or_array(np.where(x < 0, left, right), x)

    def quantile(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            raise DomainError(f"quantile requires 0 < u < 1, got {u}")
        g2 = self.gamma * self.gamma
        if u < 1.0 / (1.0 + g2):
            return self.base.quantile(u * (1.0 + g2) / 2.0) / self.gamma
        return self.gamma * self.base.quantile(1.0 - (1.0 - u) * (1.0 + g2) / (2.0 * g2))

    def moment(self, r: int) -> Optional[float]:
        """E(X^r) = M_r (gamma^(r+1) + (-1)^r gamma^(-r-1)) / (gamma + 1/gamma), M_r = E|X|^r of the base."""
        if r < 1 or int(r) != r:
            raise DomainError("r must be a positive integer")
        m_r = self.base.abs_moment(r)
        if m_r is None:
            return None
        g = self.gamma
        return m_r * (g ** (r + 1) + (-1) ** r * g ** (-r - 1)) / (g + 1.0 / g)

    def mean(self) -> Optional[float]:
        return self.moment(1)

    def sample(self, n: int, seed: RandomSource = None) -> np.ndarray:
        """
        1. |t(nu)| proposal; 2. sign + with probability gamma^2/(1+gamma^2);
        3. keep with the symmetric acceptance probability; 4. gamma X if positive, X/gamma if not.
        """
        if n < 0:
            raise DomainError("n must be >= 0")
        rng = make_rng(seed)
        base = self.base
        out = np.empty(n)
        filled = 0
        rate = 1.0 if base.normal_limit else base.proposals_per_draw()
        while filled < n:
            need = n - filled
            batch = int(need * rate * 1.05) + 16
            if base.normal_limit:
                mag = np.abs(rng.standard_normal(batch))
                keep = np.ones(batch, dtype=bool)
            else:
                mag = np.abs(rng.standard_normal(batch) / np.sqrt(rng.chisquare(base.nu, batch) / base.nu))
                keep = rng.uniform(size=batch) < base.acceptance_probability(mag)
            positive = rng.uniform(size=batch) < self.positive_probability
            draws = np.where(positive, self.gamma * mag, -mag / self.gamma)[keep][:need]
            out[filled:filled + draws.size] = draws
            filled += draws.size
        return out


class JonesTwinT(BaseModel):
    """
    c 2^((nu+1)/4) p^((a+1/2)/4) (1-p)^((b+1/2)/4) with a + b = nu.
    The right tail decays like x^(-2b-1), the left like x^(-2a-1); c is found by quadrature.
    """
    model_config = ConfigDict(frozen=True)

    base: TwinT
    a: float = Field(gt=0, allow_inf_nan=False)
    b: float = Field(gt=0, allow_inf_nan=False)

    _log_norm: float = PrivateAttr(default=0.0)

    @field_validator("base")
    @classmethod
    def _finite_base(cls, v: TwinT) -> TwinT:
        if v.normal_limit:
            raise ValueError("Jones skewing needs a finite nu")
        return v

    @model_validator(mode="after")
    def _check_split(self) -> "JonesTwinT":
        if abs(self.a + self.b - self.base.nu) > 1e-9 * max(1.0, self.base.nu):
            raise ValueError(f"a + b must equal nu ({self.a} + {self.b} != {self.base.nu})")
        return self

    @classmethod
    def from_fraction(cls, nu: float, fraction: float) -> "JonesTwinT":
        """a = fraction * nu, b = nu - a."""
        return cls(base=TwinT(nu=nu), a=fraction * nu, b=(1.0 - fraction) * nu)

    def model_post_init(self, __context: Any) -> None:
        integral = integrate_real_line(self._log_kernel, what="Jones normalizing constant")
        self._log_norm = -math.log(integral)
        logger.debug(f"Jones(a={self.a}, b={self.b}): log c = {self._log_norm:.15g}")

    def _log_kernel(self, x):
        log_p, log_q = log_skew_weights(self.base, x)
        return ((self.base.nu + 1.0) / 4.0 * LN2
                + (self.a + 0.5) / 4.0 * log_p + (self.b + 0.5) / 4.0 * log_q)

    @property
    def log_norm(self) -> float:
        return self._log_norm

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(self._log_norm + self._log_kernel(x), x)

    def pdf(self, x):
        return _scalar_or_array(np.exp(self.log_pdf(x)), x)

    @cached_property
    def cdf_table(self) -> ChebyshevCdf:
        return ChebyshevCdf(self.log_pdf, what="Jones cdf")

    def cdf(self, x):
        return self.cdf_table(x)

    def quantile(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            raise DomainError(f"quantile requires 0 < u < 1, got {u}")
        return bracketed_root(self.cdf, u, what="Jones quantile")

    def sample(self, n: int, seed: RandomSource = None) -> np.ndarray:
        envelope = TwinT(nu=2.0 * min(self.a, self.b))
        m = envelope_constant(self.log_pdf, envelope)
        return skew_generic_sample(self.log_pdf, envelope, n, seed, m=m)


class AzzaliniTwinT(BaseModel):
    """
    2 G(x) f(x) with G = (1 - phi)/2 + phi p(x). Even moments equal the symmetric ones.
    phi = +-1 is kept as the limiting member 2 p(x) f(x) (or 2 (1 - p(x)) f(x)).
    """
    model_config = ConfigDict(frozen=True)

    base: TwinT
    phi: float = Field(ge=-1.0, le=1.0, allow_inf_nan=False)

    @field_validator("base")
    @classmethod
    def _finite_base(cls, v: TwinT) -> TwinT:
        if v.normal_limit:
            raise ValueError("Azzalini skewing needs a finite nu")
        return v

    def log_skew_factor(self, x):
        """log G(x; phi)."""
        log_p, log_q = log_skew_weights(self.base, x)
        phi = self.phi
        with np.errstate(divide="ignore"):
            if phi >= 0:
                return np.logaddexp(math.log((1.0 - phi) / 2.0) if phi < 1 else -np.inf,
                                    (math.log(phi) if phi > 0 else -np.inf) + log_p)
            return np.logaddexp(math.log((1.0 + phi) / 2.0) if phi > -1 else -np.inf,
                                math.log(-phi) + log_q)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = LN2 + self.log_skew_factor(x) + np.asarray(self.base.log_pdf(x))
        return _scalar_or_array(out, x)

    def pdf(self, x):
        return _scalar_or_array(np.exp(self.log_pdf(x)), x)

    @cached_property
    def cdf_table(self) -> ChebyshevCdf:
        return ChebyshevCdf(self.log_pdf, what="Azzalini cdf")

    def cdf(self, x):
        return self.cdf_table(x)

    def quantile(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            raise DomainError(f"quantile requires 0 < u < 1, got {u}")
        return bracketed_root(self.cdf, u, what="Azzalini quantile")

    def moment(self, r: int) -> Optional[float]:
        """
        E(X^r): the symmetric even moment for even r; for odd r the quadrature
        phi * 2 * int_0^inf x^r f(x) (2 p(x) - 1) dx. None when nu <= r.
        """
        if r < 1 or int(r) != r:
            raise DomainError("r must be a positive integer")
        nu = self.base.nu
        if nu <= r:
            return None
        if r % 2 == 0:
            return self.base.even_moment(r // 2)
        if self.phi == 0:
            return 0.0

        def log_integrand(x):
            with np.errstate(divide="ignore"):
                return (r * np.log(x) + np.asarray(self.base.log_pdf(x))
                        + np.log(2.0 * _half_offset(x, nu)))

        return 2.0 * self.phi * integrate_interval(log_integrand, 0.0, math.inf, what=f"Azzalini moment r={r}")

    def sample(self, n: int, seed: RandomSource = None) -> np.ndarray:
        return skew_generic_sample(self.log_pdf, self.base, n, seed, m=2.0)


def envelope_constant(log_density, envelope: TwinT, scale: float = 1.0, grid: np.ndarray = ENVELOPE_GRID) -> float:
    """Largest density / (scaled envelope) ratio on the grid, times a safety margin."""
    log_ratio = np.asarray(log_density(grid)) - (np.asarray(envelope.log_pdf(grid / scale)) - math.log(scale))
    return float(np.exp(np.max(log_ratio))) * ENVELOPE_SAFETY


def rejection_sample_with_stats(log_density, envelope: TwinT, n: int, seed: RandomSource = None,
                                m: float = 1.0, scale: float = 1.0,
                                grid: np.ndarray = ENVELOPE_GRID) -> tuple[np.ndarray, int]:
    """
    Exact draws from exp(log_density) by rejection from scale * envelope,
    after checking density <= m * envelope on `grid`. Returns (draws, proposals used).
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    if not m > 0 or not scale > 0:
        raise DomainError("envelope constant and scale must be > 0")
    log_m = math.log(m)

    def log_envelope(x):
        return log_m + np.asarray(envelope.log_pdf(x / scale)) - math.log(scale)

    excess = np.asarray(log_density(grid)) - log_envelope(grid)
    worst = int(np.argmax(excess))
    if excess[worst] > 1e-12:
        raise EnvelopeError(float(grid[worst]), float(math.exp(excess[worst])))

    rng = make_rng(seed)
    out = np.empty(n)
    filled = 0
    proposals = 0
    while filled < n:
        need = n - filled
        batch = int(need * m * 1.05) + 16
        y = scale * envelope.sample(batch, rng)
        u = rng.uniform(size=batch)
        kept = np.flatnonzero(np.log(u) < np.asarray(log_density(y)) - log_envelope(y))
        if kept.size >= need:
            kept = kept[:need]
            proposals += int(kept[-1]) + 1
        else:
            proposals += batch
        out[filled:filled + kept.size] = y[kept]
        filled += kept.size
    logger.debug(f"rejection sampler: {n} draws from {proposals} proposals (m={m:.6g})")
    return out, proposals


def skew_generic_sample(log_density, envelope: TwinT, n: int, seed: RandomSource = None,
                        m: float = 1.0, scale: float = 1.0) -> np.ndarray:
    return rejection_sample_with_stats(log_density, envelope, n, seed, m=m, scale=scale)[0]
