"""
One validated command invocation, assembled from the parsed command line.
"""
from enum import Enum
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from twint.core.config import settings
from twint.schemas.estimation import CurveFitSpec, OptimizerSettings, RegressionSpec
from twint.schemas.simulation import ScenarioConfig


class DistFamily(str, Enum):
    TWIN_T = "twin-t"
    TWO_PIECE = "two-piece"
    JONES = "jones"
    AZZALINI = "azzalini"
    GENERALIZED = "generalized"
    MULTIVARIATE = "multivariate"
    MULTIVARIATE_GENERALIZED = "multivariate-generalized"


class DistAction(str, Enum):
    PDF = "pdf"
    LOGPDF = "logpdf"
    CDF = "cdf"
    QUANTILE = "quantile"
    SAMPLE = "sample"


MULTIVARIATE_FAMILIES = {DistFamily.MULTIVARIATE, DistFamily.MULTIVARIATE_GENERALIZED}


class DistRequest(BaseModel):
    """Family parameters and the evaluation points (or draw count) of a `dist` call."""
    family: DistFamily
    action: DistAction
    nu: Optional[float] = None
    gamma: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    phi: Optional[float] = None
    beta: Optional[float] = None
    gamma_param: Optional[float] = None
    loc: float = 0.0
    scale: float = Field(default=1.0, gt=0)
    mu: Optional[list[float]] = None
    scale_matrix: Optional[list[list[float]]] = None
    points: list[list[float]] = Field(default_factory=list)
    n: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_required(self):
        needs = {
            DistFamily.TWIN_T: ["nu"],
            DistFamily.TWO_PIECE: ["nu", "gamma"],
            DistFamily.JONES: ["a", "b"],
            DistFamily.AZZALINI: ["nu", "phi"],
            DistFamily.GENERALIZED: ["beta", "gamma_param"],
            DistFamily.MULTIVARIATE: ["nu", "scale_matrix"],
            DistFamily.MULTIVARIATE_GENERALIZED: ["beta", "gamma_param", "scale_matrix"],
        }[self.family]
        missing = [f"--{name.replace('_', '-')}" for name in needs if getattr(self, name) is None]
        if missing:
            raise ValueError(f"family {self.family.value} requires {', '.join(missing)}")
        if self.family in MULTIVARIATE_FAMILIES and self.action in (DistAction.CDF, DistAction.QUANTILE):
            raise ValueError(f"action {self.action.value} is not available for family {self.family.value}")
        if self.action == DistAction.SAMPLE:
            if self.n < 1:
                raise ValueError("action sample requires --n >= 1")
        elif not self.points:
            raise ValueError(f"action {self.action.value} requires --x")
        return self


class RunConfig(BaseModel):
    """Exactly one command with the options it needs."""
    command: Literal["dist", "fit_regress", "fit_curve", "simulate"]
    input_path: Optional[Path] = None
    output_path: Optional[Path] = None
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)
    json_output: bool = False
    dist: Optional[DistRequest] = None
    regression: Optional[RegressionSpec] = None
    curve: Optional[CurveFitSpec] = None
    scenarios: list[ScenarioConfig] = Field(default_factory=list)
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    bootstrap_replicates: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_command_options(self):
        if self.command == "dist" and self.dist is None:
            raise ValueError("dist needs a distribution request")
        if self.command in ("fit_regress", "fit_curve") and self.input_path is None:
            raise ValueError("fit needs --data")
        if self.command == "fit_regress" and self.regression is None:
            raise ValueError("fit regress needs a regression specification")
        if self.command == "fit_curve" and self.curve is None:
            raise ValueError("fit curve needs a curve specification")
        if self.command == "simulate":
            if not self.scenarios:
                raise ValueError("simulate needs at least one scenario")
            if self.output_path is None:
                raise ValueError("simulate needs --out")
        return self
