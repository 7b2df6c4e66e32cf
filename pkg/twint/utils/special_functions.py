"""
Special-function substrate: log-gamma, log-beta and the regularized incomplete beta.

Thin, validated wrappers over scipy.special. Everything downstream keeps its
normalization constants in log space, so only the log forms are exposed for
Gamma and Beta.
"""
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from scipy import special

from twint.core.exceptions import DomainError


class BetaParams(BaseModel):
    """Shape pair (a, b) of a beta function / beta distribution."""
    model_config = ConfigDict(frozen=True)

    a: float = Field(gt=0, allow_inf_nan=False)
    b: float = Field(gt=0, allow_inf_nan=False)

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as e:
            first = e.errors()[0]
            raise DomainError(f"beta shape {first['loc'][0]} {first['msg'].lower()}") from e

    def reflected(self) -> "BetaParams":
        return BetaParams(a=self.b, b=self.a)


def log_gamma(x: float) -> float:
    """ln Gamma(x) for finite x > 0."""
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"log_gamma requires a finite x > 0, got {x}")
    return float(special.gammaln(x))


def log_gamma_ratio(a: float, b: float) -> float:
    """
    ln(Gamma(a + b) / Gamma(a)) through the Pochhammer symbol, which stays
    accurate for large a where gammaln(a + b) - gammaln(a) cancels.
    """
    if not math.isfinite(a) or a <= 0 or not math.isfinite(b) or a + b <= 0:
        raise DomainError(f"log_gamma_ratio requires finite a > 0 and a + b > 0, got a={a}, b={b}")
    ratio = float(special.poch(a, b))
    if 0.0 < ratio < math.inf:
        return math.log(ratio)
    return log_gamma(a + b) - log_gamma(a)


def log_beta(p: BetaParams) -> float:
    """ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b)."""
    return float(special.betaln(p.a, p.b))


def reg_inc_beta(z, p: BetaParams):
    """
    Regularized incomplete beta I(z; a, b).

    Accepts a scalar or an array of z in [0, 1]. Cephes' incbet evaluates the
    continued fraction on whichever side of z = (a + 1)/(a + b + 2) converges,
    which keeps it stable for the small shapes (nu/4) that occur at small nu.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z_arr)) or np.any(z_arr < 0.0) or np.any(z_arr > 1.0):
        raise DomainError("reg_inc_beta requires 0 <= z <= 1")
    out = special.betainc(p.a, p.b, z_arr)
    return float(out) if out.ndim == 0 else out
