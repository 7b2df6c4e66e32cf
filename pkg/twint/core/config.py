import math
from typing import Literal

from pydantic import computed_field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # App Config
    PROJECT_NAME: str = "twint"
    ENVIRONMENT: Literal["dev", "prod"] = "dev"
    LOG_LEVEL: str = "INFO"

    # Reproducibility: used whenever a command is run without --seed
    DEFAULT_SEED: int = 20140101

    # Degrees-of-freedom domain
    NU_MIN: float = 1e-3
    NU_NORMAL_LIMIT: float = 1e7
    NU_FIT_CAP: float = 1e4

    # Root finding / quadrature
    QUANTILE_TOL: float = 1e-10
    QUANTILE_MAX_ITER: int = 200
    QUAD_ABS_TOL: float = 1e-10
    QUAD_LIMIT: int = 500

    # Optimizer
    OPT_FTOL: float = 1e-10
    OPT_XTOL: float = 1e-8
    OPT_MAX_SIMPLEX_ITER: int = 5000
    OPT_MAX_QUASI_NEWTON_ITER: int = 500
    OPT_NU_STARTS: tuple[float, ...] = (5.0, 1.0, 10.0, 100.0)
    BOOTSTRAP_REPLICATES: int = 200

    # Simulation harness
    SIM_REPLICATES: int = 200
    SIM_WORKERS: int = 1
    NEAR_ZERO_THRESHOLD: float = 1e-3
    NEAR_ZERO_SENSITIVITY: tuple[float, ...] = (1e-4, 1e-2)

    # Output
    OUTPUT_SIGNIFICANT_DIGITS: int = 15

    @computed_field
    @property
    def LOG_NU_BOUNDS(self) -> tuple[float, float]:
        """Box the optimizer keeps ln(nu) inside; beyond the upper edge the law is normal."""
        return (math.log(self.NU_MIN), math.log(self.NU_NORMAL_LIMIT))

    @computed_field
    @property
    def FLOAT_FORMAT(self) -> str:
        """printf-style format for every number written by the CLI."""
        return f"%.{self.OUTPUT_SIGNIFICANT_DIGITS}g"

    model_config = SettingsConfigDict(
        env_prefix="TWINT_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore"
    )


# Globally accessible settings instance
settings = Settings()
