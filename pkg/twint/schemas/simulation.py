import math
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from twint.core.config import settings

# Models fitted to every replicate, in table order
SIM_MODELS = ("ols", "student_t", "twin_t")


class ScenarioConfig(BaseModel):
    """One cell of the simulation grid: sample size, true error df (inf = normal), replicates."""
    n: int = Field(default=100, ge=3)
    true_df: float = Field(default=math.inf, gt=0)
    replicates: int = Field(default_factory=lambda: settings.SIM_REPLICATES, ge=1)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0, lt=2 ** 64)
    stream: int = Field(default=0, ge=0, description="scenario index within a grid")
    workers: int = Field(default_factory=lambda: settings.SIM_WORKERS, ge=1)

    @property
    def label(self) -> str:
        df = "inf" if math.isinf(self.true_df) else f"{self.true_df:g}"
        return f"n{self.n}_df{df}"


class EcdfCurve(BaseModel):
    """Step function of sorted values; probs are k/N for k = 1..N."""
    sorted_values: list[float]
    probs: list[float]

    @model_validator(mode="after")
    def validate_steps(self):
        if len(self.sorted_values) != len(self.probs):
            raise ValueError("sorted_values and probs must have equal length")
        if not self.sorted_values:
            raise ValueError("an ecdf needs at least one value")
        if any(b < a for a, b in zip(self.sorted_values, self.sorted_values[1:])):
            raise ValueError("sorted_values must be nondecreasing")
        if any(b <= a for a, b in zip(self.probs, self.probs[1:])) or abs(self.probs[-1] - 1.0) > 1e-12:
            raise ValueError("probs must increase strictly to 1")
        return self

    @classmethod
    def from_values(cls, values) -> "EcdfCurve":
        v = np.sort(np.asarray(values, dtype=float))
        n = v.size
        return cls(sorted_values=v.tolist(), probs=(np.arange(1, n + 1) / n).tolist())

    @property
    def size(self) -> int:
        return len(self.sorted_values)

    def evaluate(self, x):
        """Right-continuous ecdf: fraction of values <= x."""
        out = np.searchsorted(np.asarray(self.sorted_values), np.asarray(x, dtype=float), side="right") / self.size
        return float(out) if np.ndim(out) == 0 else out

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"abs_diff": self.sorted_values, "prob": self.probs})


class ScenarioResult(BaseModel):
    """Per-replicate estimate table: replicate, then {model}_b0, {model}_b1, {model}_converged."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: ScenarioConfig
    table: pd.DataFrame

    @field_validator("table")
    @classmethod
    def _check_columns(cls, v: Any) -> pd.DataFrame:
        expected = ["replicate"] + [f"{m}_{c}" for m in SIM_MODELS for c in ("b0", "b1", "converged")]
        if list(v.columns) != expected:
            raise ValueError(f"estimate table columns must be {expected}")
        return v

    @property
    def failures(self) -> dict[str, int]:
        return {m: int((~self.table[f"{m}_converged"].astype(bool)).sum()) for m in SIM_MODELS}
