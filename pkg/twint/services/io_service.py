import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from twint.core.config import settings
from twint.core.exceptions import DataError
from twint.schemas.dataset import Dataset
from twint.schemas.estimation import FitReport

logger = logging.getLogger("IoService")


def format_number(value: float) -> str:
    """15 significant digits; inf and nan spelled out."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return settings.FLOAT_FORMAT % value


def read_csv(path: str | Path) -> Dataset:
    """
    Header row plus numeric rows (RFC 4180 quoting, LF or CRLF). Any missing,
    non-numeric or non-finite cell is rejected with its file line and column.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError as e:
        raise DataError(f"cannot read {path}: file not found") from e
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path}: file is empty (a header row is required)") from e
    except pd.errors.ParserError as e:
        raise DataError(f"{path}: malformed CSV ({e})") from e
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"cannot read {path}: {e}") from e

    if frame.empty:
        raise DataError(f"{path}: no data rows after the header")

    columns: dict[str, np.ndarray] = {}
    first_bad: tuple[int, int, str, str] | None = None
    for pos, name in enumerate(frame.columns):
        raw = frame[name].str.strip()
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            cell = raw.iloc[bad[0]]
            candidate = (int(bad[0]), pos, str(name), cell if isinstance(cell, str) else "")
            if first_bad is None or candidate[:2] < first_bad[:2]:
                first_bad = candidate
        columns[str(name)] = values

    if first_bad is not None:
        row, _, name, cell = first_bad
        # +2: the header is line 1
        problem = "missing value" if cell == "" else f"invalid value '{cell}' (a finite number is required)"
        raise DataError(f"{path}: line {row + 2}, column '{name}': {problem}")

    logger.debug(f"Read {len(frame)} rows x {len(columns)} columns from {path}")
    return Dataset(column_names=list(columns), columns=columns)


def write_csv(data: Dataset | pd.DataFrame, path: str | Path) -> Path:
    """LF line endings, numbers at 15 significant digits, no index column."""
    path = Path(path)
    frame = data.to_frame() if isinstance(data, Dataset) else data
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        frame.to_csv(path, index=False, float_format=settings.FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise DataError(f"cannot write {path}: {e}") from e
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def _rounded(value: Any) -> Any:
    if isinstance(value, float):
        return value if not math.isfinite(value) else float(format_number(value))
    if isinstance(value, dict):
        return {k: _rounded(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    return value


def format_report(report: FitReport, as_json: bool = False) -> str:
    """key=value lines with a stable key order, or the report as JSON."""
    if as_json:
        return json.dumps(_rounded(report.model_dump(mode="python")), indent=2)

    lines = [
        f"family={report.family}",
        f"skew={report.skew}",
        f"converged={str(report.converged).lower()}",
        f"iterations={report.iterations}",
        f"n_obs={report.n_obs}",
        f"n_params={report.n_params}",
        f"loglik={format_number(report.loglik)}",
        f"aic={format_number(report.aic)}",
        f"hessian_ok={str(report.hessian_ok).lower()}",
    ]
    lines += [f"estimate.{k}={format_number(v)}" for k, v in report.estimates.items()]
    lines += [f"std_error.{k}={format_number(v)}" for k, v in report.std_errors.items()]
    if report.nu_interval is not None:
        lines.append(f"nu_interval.lower={format_number(report.nu_interval[0])}")
        lines.append(f"nu_interval.upper={format_number(report.nu_interval[1])}")
    if report.bootstrap_std_errors:
        lines += [f"bootstrap_std_error.{k}={format_number(v)}" for k, v in report.bootstrap_std_errors.items()]
    lines += [f"note={note}" for note in report.notes]
    return "\n".join(lines)
