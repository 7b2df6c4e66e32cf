from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from twint.core.exceptions import MissingColumnError


class Dataset(BaseModel):
    """
    Named numeric columns of equal length, all finite.
    Built by io_service.read_csv or directly from arrays.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    column_names: list[str]
    columns: dict[str, np.ndarray]

    @field_validator("columns", mode="before")
    @classmethod
    def _as_float_arrays(cls, v: Any) -> dict[str, np.ndarray]:
        return {str(k): np.asarray(col, dtype=float).ravel() for k, col in dict(v).items()}

    @model_validator(mode="after")
    def validate_shape(self):
        if len(set(self.column_names)) != len(self.column_names):
            raise ValueError("column names must be unique")
        if set(self.column_names) != set(self.columns):
            raise ValueError("column_names must match the keys of columns")
        lengths = {col.size for col in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"all columns must have the same length, got {sorted(lengths)}")
        for name, col in self.columns.items():
            if not np.all(np.isfinite(col)):
                raise ValueError(f"column '{name}' contains non-finite values")
        return self

    @classmethod
    def from_columns(cls, **columns) -> "Dataset":
        return cls(column_names=list(columns), columns=columns)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Dataset":
        names = [str(c) for c in frame.columns]
        return cls(column_names=names, columns={n: frame[c].to_numpy(dtype=float) for n, c in zip(names, frame.columns)})

    @property
    def n_rows(self) -> int:
        if not self.column_names:
            return 0
        return int(self.columns[self.column_names[0]].size)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise MissingColumnError(name, self.column_names)
        return self.columns[name]

    def take(self, rows: np.ndarray) -> "Dataset":
        """Row subset (or resample, with repeated indices)."""
        return Dataset(column_names=self.column_names,
                       columns={n: self.columns[n][rows] for n in self.column_names})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({n: self.columns[n] for n in self.column_names}, columns=self.column_names)
