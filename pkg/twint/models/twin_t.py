"""
The standard symmetric twin-t distribution and the location-scale wrapper.

Kernel: (x^2/nu + sqrt(1 + (x^2/nu)^2))^(-(nu+1)/2), evaluated as
exp(-((nu+1)/2) * asinh(x^2/nu)). Normal-like in the body, t-like power tails.
"""
import logging
import math
from typing import Any, Optional, Protocol, runtime_checkable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator
from scipy import stats

from twint.core.config import settings
from twint.core.exceptions import DomainError, IterationError
from twint.models.extended import log_generalized_abs_moment
from twint.utils.numerics import bracketed_root
from twint.utils.random_streams import RandomSource, make_rng
from twint.utils.special_functions import BetaParams, log_beta, log_gamma, log_gamma_ratio, reg_inc_beta

logger = logging.getLogger("TwinT")

LN2 = math.log(2.0)
LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# asinh(S) is replaced by its asymptote ln(2S) beyond this S (exact to double precision)
ASINH_ASYMPTOTE = 1e150


def log_c_plus_s(x, nu: float):
    """ln(C + S) = asinh(x^2/nu), finite for every finite x."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    with np.errstate(over="ignore", divide="ignore"):
        s = x * x / nu
        asym = LN2 + 2.0 * np.log(ax) - math.log(nu)
    return np.where(s < ASINH_ASYMPTOTE, np.arcsinh(np.minimum(s, ASINH_ASYMPTOTE)), asym)


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


@runtime_checkable
class StandardDistribution(Protocol):
    """What LocationScaleModel and the estimators need from a standardized law."""

    def log_pdf(self, x): ...

    def pdf(self, x): ...

    def cdf(self, x): ...

    def sample(self, n: int, seed: RandomSource = None) -> np.ndarray: ...


class KernelTerms(BaseModel):
    """S = x^2/nu, C = sqrt(1 + S^2) and p = (C + S)^-2 at one or many points."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    S: Any
    C: Any
    p: Any


class TwinTMoments(BaseModel):
    """Closed-form moments; None marks a moment that does not exist for this nu."""
    variance: Optional[float] = None
    fourth: Optional[float] = None
    abs_mean: Optional[float] = None


class TwinT(BaseModel):
    """
    Standard twin-t with nu degrees of freedom.

    nu must be > 0: a negative nu only reproduces the nu - 2 law rescaled.
    nu above settings.NU_NORMAL_LIMIT (or infinite) is the exact standard normal.
    """
    model_config = ConfigDict(frozen=True)

    nu: float = Field(description="degrees of freedom")

    _log_k: float = PrivateAttr(default=0.0)

    @field_validator("nu")
    @classmethod
    def _check_nu(cls, v: float) -> float:
        if math.isnan(v) or v <= 0:
            raise ValueError("nu must be > 0")
        if v < settings.NU_MIN:
            raise ValueError(f"nu must be >= {settings.NU_MIN:g}")
        return v

    def model_post_init(self, __context: Any) -> None:
        self._log_k = -LN_SQRT_2PI if self.normal_limit else self.log_norm_const_for(self.nu)

    @property
    def normal_limit(self) -> bool:
        return self.nu > settings.NU_NORMAL_LIMIT

    # --- Normalization ---

    @staticmethod
    def log_norm_const_for(nu: float) -> float:
        """ln k, k = 2^(5/2) Gamma(nu/4 + 3/2) / (sqrt(pi nu) Gamma(nu/4) (nu + 1))."""
        if not nu > 0:
            raise DomainError("nu must be > 0")
        if math.isinf(nu):
            return -LN_SQRT_2PI
        return (2.5 * LN2 + log_gamma_ratio(nu / 4.0, 1.5)
                - 0.5 * math.log(math.pi * nu) - math.log(nu + 1.0))

    @staticmethod
    def log_norm_const_beta_form(nu: float) -> float:
        """Same constant written as 2^(3/2) / (sqrt(nu) (nu + 1) B(nu/4, 3/2))."""
        if not nu > 0:
            raise DomainError("nu must be > 0")
        return (1.5 * LN2 - 0.5 * math.log(nu) - math.log(nu + 1.0)
                - log_beta(BetaParams(a=nu / 4.0, b=1.5)))

    def log_norm_const(self) -> float:
        return self._log_k

    # --- Density ---

    def kernel_terms(self, x) -> KernelTerms:
        x = np.asarray(x, dtype=float)
        s = x * x / self.nu
        c = np.hypot(1.0, s)
        p = np.exp(-2.0 * log_c_plus_s(x, self.nu))
        return KernelTerms(S=_scalar_or_array(s, x), C=_scalar_or_array(c, x), p=_scalar_or_array(p, x))

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.normal_limit:
            out = -LN_SQRT_2PI - 0.5 * x * x
        else:
            out = self._log_k - 0.5 * (self.nu + 1.0) * log_c_plus_s(x, self.nu)
        return _scalar_or_array(out, x)

    def pdf(self, x):
        return _scalar_or_array(np.exp(self.log_pdf(x)), x)

    def logpdf_series(self, x, terms: int = 3):
        """Taylor expansion of ln f about 0, truncated after `terms` (1..3) terms."""
        if not 1 <= terms <= 3:
            raise DomainError("terms must be 1, 2 or 3")
        x = np.asarray(x, dtype=float)
        s = x * x / self.nu
        series = [s, -s ** 3 / 6.0, 3.0 * s ** 5 / 40.0]
        out = self._log_k - 0.5 * (self.nu + 1.0) * sum(series[:terms])
        return _scalar_or_array(out, x)

    # --- Distribution function ---

    def _upper_tail(self, ax: np.ndarray) -> np.ndarray:
        # 1 - F(x) for x >= 0: (1/2) I(q; nu/4, 3/2) - 2^(3/2) x (C+S)^(-(nu+1)/2) / (sqrt(nu)(nu+1)B)
        nu = self.nu
        log_cs = log_c_plus_s(ax, nu)
        q = np.exp(-2.0 * log_cs)
        half_i = 0.5 * reg_inc_beta(q, BetaParams(a=nu / 4.0, b=1.5))
        with np.errstate(divide="ignore"):
            log_term = (self.log_norm_const_beta_form(nu) + np.log(ax) - 0.5 * (nu + 1.0) * log_cs)
        return np.clip(half_i - np.exp(log_term), 0.0, 0.5)

    def sf(self, x):
        """Upper-tail probability 1 - F(x), accurate in both tails."""
        x = np.asarray(x, dtype=float)
        if self.normal_limit:
            return _scalar_or_array(stats.norm.sf(x), x)
        ax = np.abs(x)
        upper = self._upper_tail(ax)
        out = np.where(x >= 0, upper, 1.0 - upper)
        return _scalar_or_array(out, x)

    def cdf(self, x):
        """F(x); x < 0 by symmetry, F(-x) = 1 - F(x)."""
        x = np.asarray(x, dtype=float)
        if self.normal_limit:
            return _scalar_or_array(stats.norm.cdf(x), x)
        upper = self._upper_tail(np.abs(x))
        out = np.where(x >= 0, 1.0 - upper, upper)
        return _scalar_or_array(out, x)

    def cdf_reflected_form(self, x):
        """F(x) for x > 0 through I(1 - q; 3/2, nu/4); a cross-check of cdf()."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        log_cs = log_c_plus_s(ax, self.nu)
        q = np.exp(-2.0 * log_cs)
        with np.errstate(divide="ignore"):
            term = np.exp(self.log_norm_const_beta_form(self.nu) + np.log(ax) - 0.5 * (self.nu + 1.0) * log_cs)
        upper_cdf = 0.5 + term + 0.5 * reg_inc_beta(1.0 - q, BetaParams(a=1.5, b=self.nu / 4.0))
        out = np.where(x >= 0, upper_cdf, 1.0 - upper_cdf)
        return _scalar_or_array(out, x)

    @staticmethod
    def closed_form_cdf(nu: int, x):
        """Elementary cdfs available at nu = 2 and nu = 4."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        s = ax * ax / nu
        cs = np.hypot(1.0, s) + s
        if nu == 2:
            upper_cdf = 1.0 + ax * cs ** -1.5 / (3.0 * math.pi) - np.arcsin(1.0 / cs) / math.pi
        elif nu == 4:
            upper_cdf = 0.5 + 0.6 * 2.0 ** -0.5 * ax * cs ** -2.5 + 2.0 ** -2.5 * ax ** 3 * cs ** -1.5
        else:
            raise DomainError("closed-form cdf exists here only for nu = 2 and nu = 4")
        out = np.where(x >= 0, upper_cdf, 1.0 - upper_cdf)
        return _scalar_or_array(out, x)

    # --- Quantile ---

    def _newton_upper(self, tail: float, tol: float) -> Optional[float]:
        # Newton on 1 - F(x) = tail from x = 0; None when it stalls or leaves the finite range
        x_old = 0.0
        for _ in range(settings.QUANTILE_MAX_ITER):
            density = self.pdf(x_old)
            if density <= 0.0 or not math.isfinite(density):
                return None
            x_new = x_old + (self.sf(x_old) - tail) / density
            if not math.isfinite(x_new):
                return None
            if abs(x_new - x_old) <= tol * max(1.0, abs(x_new)):
                return x_new
            x_old = x_new
        return None

    def quantile(self, u: float) -> float:
        """x with |F(x) - u| <= tol: Newton from 0, bisection-type fallback on failure."""
        if not 0.0 < u < 1.0:
            raise DomainError(f"quantile requires 0 < u < 1, got {u}")
        if self.normal_limit:
            return float(stats.norm.ppf(u))
        tol = settings.QUANTILE_TOL
        # 1 - u is exact for u >= 1/2, so the upper tail probability carries full precision
        tail, sign = (u, -1.0) if u < 0.5 else (1.0 - u, 1.0)
        if tail == 0.5:
            return 0.0
        x = self._newton_upper(tail, tol)
        if x is None or abs(self.sf(x) - tail) > tol:
            logger.debug(f"Newton quantile failed for nu={self.nu}, u={u}; bracketing instead")
            x = bracketed_root(lambda z: -self.sf(z), -tail, tol=tol * 1e-2, what="twin-t quantile")
            if abs(self.sf(x) - tail) > tol:
                raise IterationError(f"quantile did not converge for nu={self.nu}, u={u}")
        return sign * x

    # --- Random numbers ---

    def acceptance_probability(self, x):
        """{(1 + S)/(C + S)}^((nu+1)/2), the chance a t(nu) proposal at x is kept."""
        x = np.asarray(x, dtype=float)
        s = x * x / self.nu
        out = np.exp(0.5 * (self.nu + 1.0) * (np.log1p(s) - log_c_plus_s(x, self.nu)))
        return _scalar_or_array(out, x)

    def proposals_per_draw(self) -> float:
        """Expected t(nu) proposals per accepted draw, f(0)/g(0)."""
        return math.exp(self._log_k - float(stats.t.logpdf(0.0, self.nu)))

    def sample_with_stats(self, n: int, seed: RandomSource = None) -> tuple[np.ndarray, int]:
        """n draws by rejection from t(nu), plus the number of proposals consumed."""
        if n < 0:
            raise DomainError("n must be >= 0")
        rng = make_rng(seed)
        if self.normal_limit:
            return rng.standard_normal(n), n
        out = np.empty(n)
        filled = 0
        proposals = 0
        rate = self.proposals_per_draw()
        while filled < n:
            need = n - filled
            batch = int(need * rate * 1.05) + 16
            z = rng.standard_normal(batch)
            chi2 = rng.chisquare(self.nu, batch)
            x = z / np.sqrt(chi2 / self.nu)
            u = rng.uniform(size=batch)
            kept = np.flatnonzero(u < self.acceptance_probability(x))
            if kept.size >= need:
                kept = kept[:need]
                proposals += int(kept[-1]) + 1
            else:
                proposals += batch
            out[filled:filled + kept.size] = x[kept]
            filled += kept.size
        return out, proposals

    def sample(self, n: int, seed: RandomSource = None) -> np.ndarray:
        return self.sample_with_stats(n, seed)[0]

    # --- Moments ---

    def even_moment(self, m: int) -> Optional[float]:
        """E(X^(2m)) for integer m >= 1; None unless nu > 2m."""
        if m < 1:
            raise DomainError("m must be >= 1")
        if self.normal_limit:
            return float(math.prod(range(1, 2 * m, 2)))
        nu = self.nu
        if nu <= 2 * m:
            return None
        log_value = ((3 - 3 * m) * LN2 + m * math.log(nu) + log_gamma(2 * m)
                     + log_gamma(nu / 4.0 - m / 2.0) + log_gamma(nu / 4.0 + 1.5)
                     - math.log(nu + 2 * m + 2) - log_gamma(m)
                     - log_gamma(nu / 4.0) - log_gamma(nu / 4.0 + m / 2.0 + 0.5))
        return math.exp(log_value)

    def abs_moment(self, r: float) -> Optional[float]:
        """E|X|^r for real 0 <= r < nu (generalized-family formula at beta=2, gamma=nu/2, scaled by 2^(r/2))."""
        if r < 0:
            raise DomainError("r must be >= 0")
        if self.normal_limit:
            return math.exp(0.5 * r * LN2 + log_gamma((r + 1.0) / 2.0) - 0.5 * math.log(math.pi))
        if r >= self.nu:
            return None
        return math.exp(0.5 * r * LN2 + log_generalized_abs_moment(2.0, self.nu / 2.0, r))

    def moments(self) -> TwinTMoments:
        if self.normal_limit:
            return TwinTMoments(variance=1.0, fourth=3.0, abs_mean=math.sqrt(2.0 / math.pi))
        nu = self.nu
        variance = fourth = abs_mean = None
        if nu > 2:
            variance = (4.0 * (nu + 2.0) / ((nu + 4.0) * (nu - 2.0))
                        * math.exp(2.0 * log_gamma_ratio(nu / 4.0, 0.5)))
        if nu > 4:
            fourth = 3.0 * nu * nu / ((nu - 4.0) * (nu + 6.0))
        if nu > 1:
            abs_mean = math.exp(3.5 * LN2 + 0.5 * math.log(nu) + log_gamma_ratio(nu / 4.0, 1.5)
                                - 0.5 * math.log(math.pi) - math.log(nu - 1.0) - math.log(nu + 3.0))
        return TwinTMoments(variance=variance, fourth=fourth, abs_mean=abs_mean)


class LocationScaleModel(BaseModel):
    """Y = mu + sigma X with X drawn from a standardized `base`; density base.pdf((y - mu)/sigma)/sigma."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mu: float = Field(default=0.0, allow_inf_nan=False)
    sigma: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    base: Any

    @field_validator("base")
    @classmethod
    def _check_base(cls, v: Any) -> Any:
        if not isinstance(v, StandardDistribution):
            raise ValueError("base must provide log_pdf, pdf, cdf and sample")
        return v

    def _standardize(self, y):
        return (np.asarray(y, dtype=float) - self.mu) / self.sigma

    def log_pdf(self, y):
        out = np.asarray(self.base.log_pdf(self._standardize(y))) - math.log(self.sigma)
        return _scalar_or_array(out, y)

    def pdf(self, y):
        return _scalar_or_array(np.exp(self.log_pdf(y)), y)

    def cdf(self, y):
        return self.base.cdf(self._standardize(y))

    def quantile(self, u: float) -> float:
        if not hasattr(self.base, "quantile"):
            raise DomainError(f"{type(self.base).__name__} has no quantile function")
        return self.mu + self.sigma * self.base.quantile(u)

    def sample(self, n: int, seed: RandomSource = None) -> np.ndarray:
        return self.mu + self.sigma * self.base.sample(n, seed)
