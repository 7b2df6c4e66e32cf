"""
Multivariate and generalized twin-t laws.

Both families share the substitution q = (sqrt(1 + T^2) + T)^-2: for
T = r^beta / gamma the radial law becomes a two-term beta mixture,
(1 + q) q^(a-1) (1 - q)^(c-1), which gives the normalizers, the cdf and
an exact sampler (propose Beta(a, c), keep with probability (1 + q)/2).
"""
import logging
import math
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator
from scipy import linalg

from twint.core.config import settings
from twint.core.exceptions import DimensionError, DomainError, FactorizationError, SingularCovarianceError
from twint.utils.numerics import bracketed_root
from twint.utils.random_streams import RandomSource, make_rng
from twint.utils.special_functions import BetaParams, log_beta, log_gamma, reg_inc_beta

logger = logging.getLogger("ExtendedFamily")

LN2 = math.log(2.0)
LOG_ASINH_ASYMPTOTE = math.log(1e150)


def asinh_of_exp(log_t):
    """asinh(exp(log_t)) without overflow; ln(2T) once T is past 1e150."""
    log_t = np.asarray(log_t, dtype=float)
    with np.errstate(over="ignore"):
        direct = np.arcsinh(np.exp(np.minimum(log_t, LOG_ASINH_ASYMPTOTE)))
    return np.where(log_t < LOG_ASINH_ASYMPTOTE, direct, LN2 + log_t)


def log_generalized_abs_moment(beta: float, gam: float, r: float) -> float:
    """
    ln E|X|^r of the generalized twin-t, valid for 0 <= r < beta * gam:
    (gam/2)^(r/beta) (gam + 2/beta) B(gam/2 - r/(2 beta), (r+1)/beta)
    / ((gam + r/beta + 2/beta) B(gam/2, 1/beta)).
    """
    if not 0 <= r < beta * gam:
        raise DomainError(f"E|X|^r needs 0 <= r < beta*gamma = {beta * gam:g}, got r={r}")
    return ((r / beta) * math.log(gam / 2.0) + math.log(gam + 2.0 / beta)
            + log_beta(BetaParams(a=gam / 2.0 - r / (2.0 * beta), b=(r + 1.0) / beta))
            - math.log(gam + r / beta + 2.0 / beta)
            - log_beta(BetaParams(a=gam / 2.0, b=1.0 / beta)))


def sample_radial_t(a: float, c: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw T = (q^-1/2 - q^1/2)/2 where q has density proportional to
    (1 + q) q^(a-1) (1 - q)^(c-1): Beta(a, c) proposals accepted with probability (1 + q)/2.
    """
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        batch = 2 * need + 16
        q = np.maximum(rng.beta(a, c, batch), np.finfo(float).tiny)
        u = rng.uniform(size=batch)
        kept = q[u < 0.5 * (1.0 + q)][:need]
        out[filled:filled + kept.size] = (1.0 - kept) / (2.0 * np.sqrt(kept))
        filled += kept.size
    return out


def _uniform_directions(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, p))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


class GeneralizedTwinT(BaseModel):
    """
    Generalized twin-t with kernel (sqrt(1 + T^2) + T)^-(gam + 1/beta), T = |x|^beta / gam.
    beta = 2, gam = nu/2 is the twin-t variate divided by sqrt(2).
    """
    model_config = ConfigDict(frozen=True)

    beta: float = Field(gt=0, allow_inf_nan=False, description="tail-shape power")
    gam: float = Field(gt=0, allow_inf_nan=False, description="gamma of the generalized kernel")

    _log_norm: float = PrivateAttr(default=0.0)

    def model_post_init(self, __context: Any) -> None:
        b, g = self.beta, self.gam
        self._log_norm = -((1.0 / b) * math.log(g / 2.0) + math.log(g + 1.0 / b)
                           + log_beta(BetaParams(a=g / 2.0, b=1.0 / b + 1.0)))

    @property
    def exponent(self) -> float:
        return self.gam + 1.0 / self.beta

    def _log_c_plus_t(self, ax):
        with np.errstate(divide="ignore"):
            return asinh_of_exp(self.beta * np.log(ax) - math.log(self.gam))

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = self._log_norm - self.exponent * self._log_c_plus_t(np.abs(x))
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        out = np.exp(self.log_pdf(x))
        return float(out) if np.ndim(out) == 0 else out

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        log_ct = self._log_c_plus_t(ax)
        q = np.exp(-2.0 * log_ct)
        half_i = 0.5 * reg_inc_beta(q, BetaParams(a=self.gam / 2.0, b=1.0 / self.beta + 1.0))
        with np.errstate(divide="ignore"):
            term = np.exp(self._log_norm + np.log(ax) - self.exponent * log_ct)
        upper = np.clip(half_i - term, 0.0, 0.5)
        out = np.where(x >= 0, upper, 1.0 - upper)
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        """For x > 0: 1 + x K(x)/N - (1/2) I(q(x); gam/2, 1/beta + 1); x < 0 by symmetry."""
        return self.sf(-np.asarray(x, dtype=float))

    def quantile(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            raise DomainError(f"quantile requires 0 < u < 1, got {u}")
        return bracketed_root(self.cdf, u, what="generalized twin-t quantile")

    def abs_moment(self, r: float) -> Optional[float]:
        """E|X|^r; None once r >= beta * gam."""
        if r < 0:
            raise DomainError("r must be >= 0")
        if r >= self.beta * self.gam:
            return None
        return math.exp(log_generalized_abs_moment(self.beta, self.gam, r))

    def sample(self, n: int, seed: RandomSource = None) -> np.ndarray:
        if n < 0:
            raise DomainError("n must be >= 0")
        rng = make_rng(seed)
        t = sample_radial_t(self.gam / 2.0, 1.0 / self.beta, n, rng)
        radius = (self.gam * t) ** (1.0 / self.beta)
        return np.where(rng.uniform(size=n) < 0.5, -radius, radius)


class EllipticalBase(BaseModel):
    """Location vector mu and SPD scale matrix V, with the Cholesky factor cached at construction."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mu: np.ndarray
    V: np.ndarray

    _chol: np.ndarray = PrivateAttr(default=None)
    _log_sqrt_det: float = PrivateAttr(default=0.0)

    @field_validator("mu", mode="before")
    @classmethod
    def _as_vector(cls, v: Any) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        if arr.ndim != 1 or arr.size < 1 or not np.all(np.isfinite(arr)):
            raise ValueError("mu must be a finite vector of length >= 1")
        return arr

    @field_validator("V", mode="before")
    @classmethod
    def _as_matrix(cls, v: Any) -> np.ndarray:
        arr = np.atleast_2d(np.asarray(v, dtype=float))
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("V must be a square matrix")
        if not np.all(np.isfinite(arr)) or not np.allclose(arr, arr.T, rtol=1e-12, atol=0.0):
            raise ValueError("V must be a finite symmetric matrix")
        return arr

    def model_post_init(self, __context: Any) -> None:
        if self.V.shape[0] != self.mu.size:
            raise DimensionError("V", (self.mu.size, self.mu.size), self.V.shape)
        try:
            chol = np.linalg.cholesky(self.V)
        except np.linalg.LinAlgError as e:
            raise FactorizationError(str(e)) from e
        self._chol = chol
        self._log_sqrt_det = float(np.sum(np.log(np.diag(chol))))

    @property
    def dim(self) -> int:
        return self.mu.size

    @property
    def cholesky_factor(self) -> np.ndarray:
        return self._chol

    def mahalanobis(self, x) -> np.ndarray:
        """Q = (x - mu)^T V^-1 (x - mu) for one point (shape (p,)) or rows of an (n, p) array."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        rows = np.atleast_2d(x)
        if rows.shape[-1] != self.dim:
            raise DimensionError("x", self.dim, rows.shape[-1])
        z = linalg.solve_triangular(self._chol, (rows - self.mu).T, lower=True)
        q = np.sum(z * z, axis=0)
        return q[0] if single else q

    def _map_standard(self, y: np.ndarray) -> np.ndarray:
        return self.mu + y @ self._chol.T


class MultivariateTwinT(EllipticalBase):
    """p-dimensional twin-t; p = 1 with V = [[1]] is the univariate law."""

    nu: float

    _log_k: float = PrivateAttr(default=0.0)

    @field_validator("nu")
    @classmethod
    def _check_nu(cls, v: float) -> float:
        if math.isnan(v) or v <= 0:
            raise ValueError("nu must be > 0")
        return v

    def model_post_init(self, __context: Any) -> None:
        super().model_post_init(__context)
        nu, p = self.nu, self.dim
        if self.normal_limit:
            self._log_k = -0.5 * p * math.log(2.0 * math.pi) - self._log_sqrt_det
        else:
            self._log_k = ((2.0 + p / 2.0) * LN2 + log_gamma(nu / 4.0 + p / 2.0 + 1.0)
                           - self._log_sqrt_det - (p / 2.0) * math.log(nu * math.pi)
                           - log_gamma(nu / 4.0) - math.log(nu + p))

    @property
    def normal_limit(self) -> bool:
        return self.nu > settings.NU_NORMAL_LIMIT

    def log_pdf(self, x):
        q = np.asarray(self.mahalanobis(x))
        if self.normal_limit:
            out = self._log_k - 0.5 * q
        else:
            with np.errstate(divide="ignore"):
                out = self._log_k - 0.5 * (self.nu + self.dim) * asinh_of_exp(np.log(q) - math.log(self.nu))
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        out = np.exp(self.log_pdf(x))
        return float(out) if np.ndim(out) == 0 else out

    @staticmethod
    def second_moment_coefficient(nu: float, p: int) -> Optional[float]:
        """c with E{(x - mu)(x - mu)^T} = c V; None for nu <= 2."""
        if nu <= 2:
            return None
        if nu > settings.NU_NORMAL_LIMIT:
            return 1.0
        return nu / (nu - 2.0) * math.exp(
            log_gamma(nu / 4.0 + 0.5) + log_gamma(nu / 4.0 + p / 2.0 + 1.0)
            - log_gamma(nu / 4.0) - log_gamma(nu / 4.0 + p / 2.0 + 1.5))

    @staticmethod
    def bivariate_coefficient(nu: float) -> Optional[float]:
        """The p = 2 simplification nu^2 (nu + 4) / ((nu + 6)(nu + 2)(nu - 2))."""
        if nu <= 2:
            return None
        return nu * nu * (nu + 4.0) / ((nu + 6.0) * (nu + 2.0) * (nu - 2.0))

    def second_moment(self) -> Optional[np.ndarray]:
        coef = self.second_moment_coefficient(self.nu, self.dim)
        return None if coef is None else coef * self.V

    def sample(self, n: int, seed: RandomSource = None) -> np.ndarray:
        """n x p draws: radius from the q-variable sampler, uniform direction, then mu + L y."""
        if n < 0:
            raise DomainError("n must be >= 0")
        rng = make_rng(seed)
        if self.normal_limit:
            return self._map_standard(rng.standard_normal((n, self.dim)))
        s = sample_radial_t(self.nu / 4.0, self.dim / 2.0, n, rng)
        radius = np.sqrt(self.nu * s)
        y = radius[:, None] * _uniform_directions(n, self.dim, rng)
        return self._map_standard(y)

    @classmethod
    def mom_init(cls, data, nu_fixed: float) -> tuple[np.ndarray, np.ndarray]:
        """Method-of-moments (mu, V) at a fixed nu > 2: column means and covariance / coefficient."""
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        n, p = data.shape
        if n <= p:
            raise DimensionError("data rows", f"> {p}", n)
        if not nu_fixed > 2:
            raise DomainError("nu_fixed must be > 2 for the second moment to exist")
        cov = np.atleast_2d(np.cov(data, rowvar=False))
        rank = int(np.linalg.matrix_rank(cov))
        if rank < p:
            raise SingularCovarianceError(rank, p)
        coef = cls.second_moment_coefficient(nu_fixed, p)
        logger.debug(f"mom_init: n={n}, p={p}, nu={nu_fixed}, coefficient={coef:.6g}")
        return data.mean(axis=0), cov / coef


class MultivariateGeneralizedTwinT(EllipticalBase):
    """Generalized twin-t in p dimensions: Q^(beta/2)/gam replaces |x|^beta/gam."""

    beta: float = Field(gt=0, allow_inf_nan=False)
    gam: float = Field(gt=0, allow_inf_nan=False)

    _log_k: float = PrivateAttr(default=0.0)

    def model_post_init(self, __context: Any) -> None:
        super().model_post_init(__context)
        b, g, p = self.beta, self.gam, self.dim
        self._log_k = (math.log(b) + log_gamma(p / 2.0 + 1.0) + math.log(g + 2.0 * p / b)
                       - math.log(g + p / b) - (p / b) * math.log(g / 2.0) - math.log(p)
                       - (p / 2.0) * math.log(math.pi) - log_beta(BetaParams(a=g / 2.0, b=p / b))
                       - self._log_sqrt_det)

    def log_pdf(self, x):
        q = np.asarray(self.mahalanobis(x))
        with np.errstate(divide="ignore"):
            log_t = 0.5 * self.beta * np.log(q) - math.log(self.gam)
        out = self._log_k - (self.gam + self.dim / self.beta) * asinh_of_exp(log_t)
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        out = np.exp(self.log_pdf(x))
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, n: int, seed: RandomSource = None) -> np.ndarray:
        if n < 0:
            raise DomainError("n must be >= 0")
        rng = make_rng(seed)
        t = sample_radial_t(self.gam / 2.0, self.dim / self.beta, n, rng)
        radius = (self.gam * t) ** (1.0 / self.beta)
        return self._map_standard(radius[:, None] * _uniform_directions(n, self.dim, rng))


def gen_mv_log_pdf(beta: float, gam: float, mu, V, x):
    """Log density of the multivariate generalized twin-t at x (one point or rows)."""
    return MultivariateGeneralizedTwinT(beta=beta, gam=gam, mu=mu, V=V).log_pdf(x)
