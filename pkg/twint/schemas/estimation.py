"""
Model specifications and fit reports for the maximum-likelihood estimators.
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, model_validator

from twint.core.config import settings


class ErrorFamily(str, Enum):
    NORMAL = "normal"
    STUDENT_T = "student_t"
    TWIN_T = "twin_t"


class CurveFamily(str, Enum):
    TWIN_T = "twin_t"
    STUDENT_T = "student_t"


class SkewKind(str, Enum):
    NONE = "none"
    TWO_PIECE = "two_piece"
    JONES = "jones"
    AZZALINI = "azzalini"


class RegressionSpec(BaseModel):
    """
    y = b0 + X b + sigma * e, e from the error family.
    With heteroscedastic=True, log sigma_i^2 = lambda0 + lambda1 * x_i for the
    single dispersion covariate (the first covariate unless named).
    """
    error_family: ErrorFamily = ErrorFamily.TWIN_T
    heteroscedastic: bool = False
    response_column: str
    covariate_columns: list[str] = Field(..., min_length=1)
    dispersion_covariate: Optional[str] = None

    @model_validator(mode="after")
    def validate_columns(self):
        if self.response_column in self.covariate_columns:
            raise ValueError(f"response '{self.response_column}' cannot also be a covariate")
        if len(set(self.covariate_columns)) != len(self.covariate_columns):
            raise ValueError("covariate columns must be distinct")
        if self.dispersion_covariate is not None:
            if not self.heteroscedastic:
                raise ValueError("a dispersion covariate needs heteroscedastic=True")
            if self.dispersion_covariate not in self.covariate_columns:
                raise ValueError(f"dispersion covariate '{self.dispersion_covariate}' must be one of the covariates")
        return self

    @property
    def dispersion_column(self) -> Optional[str]:
        if not self.heteroscedastic:
            return None
        return self.dispersion_covariate or self.covariate_columns[0]

    @property
    def has_nu(self) -> bool:
        return self.error_family != ErrorFamily.NORMAL


class CurveFitSpec(BaseModel):
    """Location-scale(-skew) fit of one column."""
    family: CurveFamily = CurveFamily.TWIN_T
    skew: SkewKind = SkewKind.NONE
    column: str

    @model_validator(mode="after")
    def validate_skew(self):
        if self.skew != SkewKind.NONE and self.family != CurveFamily.TWIN_T:
            raise ValueError(f"skew '{self.skew.value}' is only defined for the twin_t family")
        return self


class OptimizerSettings(BaseModel):
    """Tolerances and multistart values; defaults come from settings."""
    ftol: float = Field(default_factory=lambda: settings.OPT_FTOL, gt=0)
    xtol: float = Field(default_factory=lambda: settings.OPT_XTOL, gt=0)
    max_simplex_iter: int = Field(default_factory=lambda: settings.OPT_MAX_SIMPLEX_ITER, ge=1)
    max_quasi_newton_iter: int = Field(default_factory=lambda: settings.OPT_MAX_QUASI_NEWTON_ITER, ge=0)
    nu_starts: tuple[float, ...] = Field(default_factory=lambda: tuple(settings.OPT_NU_STARTS), min_length=1)


class OptimizeResult(BaseModel):
    x: list[float]
    value: float
    iterations: int
    converged: bool


class FitReport(BaseModel):
    """
    Estimates on their natural scales. std_errors is empty unless the
    negative Hessian at the optimum was positive definite.
    """
    family: str
    skew: str = SkewKind.NONE.value
    estimates: dict[str, float]
    std_errors: dict[str, float] = Field(default_factory=dict)
    loglik: float
    aic: float
    n_obs: int
    n_params: int
    converged: bool
    iterations: int
    hessian_ok: bool
    nu_interval: Optional[tuple[float, float]] = None
    bootstrap_std_errors: Optional[dict[str, float]] = None
    notes: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_consistency(self):
        if self.std_errors and not self.hessian_ok:
            raise ValueError("standard errors require a usable Hessian")
        if abs(self.aic - (2.0 * self.n_params - 2.0 * self.loglik)) > 1e-9 * max(1.0, abs(self.aic)):
            raise ValueError("aic must equal 2k - 2 loglik")
        return self
