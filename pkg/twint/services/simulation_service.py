"""
Simulation study of regression estimators under heavy-tailed and normal errors.

Design: x_i = 0.1 + 9.9 (i-1)/(n-1), y_i = -0.5 + 2 x_i + e_i with e_i from
t(df) (standard normal for df = inf). Every replicate is fitted by OLS, a
t-errors regression and a twin-t-errors regression.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from twint.core.config import settings
from twint.core.exceptions import DomainError, MissingColumnError, TwinTError
from twint.schemas.dataset import Dataset
from twint.schemas.estimation import ErrorFamily, OptimizerSettings, RegressionSpec
from twint.schemas.simulation import SIM_MODELS, EcdfCurve, ScenarioConfig, ScenarioResult
from twint.services.estimation_service import EstimationService, ols
from twint.utils.random_streams import make_rng

logger = logging.getLogger("SimulationHarness")

TRUE_B0 = -0.5
TRUE_B1 = 2.0
DEFAULT_SIZES = (50, 100, 200)
DEFAULT_DFS = (3.0, 5.0, 8.0, math.inf)


def make_design(n: int) -> np.ndarray:
    """x_i = 0.1 + 9.9 (i - 1)/(n - 1), i = 1..n."""
    if n < 2:
        raise DomainError(f"design needs n >= 2, got {n}")
    i = np.arange(n, dtype=float)
    return 0.1 + 9.9 * i / (n - 1)


def simulate_dataset(cfg: ScenarioConfig, replicate_index: int) -> Dataset:
    """Replicate `replicate_index` of the scenario; same (seed, stream, index) gives the same data."""
    rng = make_rng(cfg.seed, cfg.stream, replicate_index)
    x = make_design(cfg.n)
    if math.isinf(cfg.true_df):
        eps = rng.standard_normal(cfg.n)
    else:
        eps = rng.standard_t(cfg.true_df, cfg.n)
    return Dataset.from_columns(y=TRUE_B0 + TRUE_B1 * x + eps, x=x)


class SimulationHarness:
    """Runs scenarios replicate by replicate; replicates may run on a thread pool."""

    def __init__(self, config: Optional[OptimizerSettings] = None):
        """
        Args:
            config: Optimizer settings shared by every regression fit.
        """
        self.estimator = EstimationService(config)
        self._specs = {
            family: RegressionSpec(error_family=family, response_column="y", covariate_columns=["x"])
            for family in (ErrorFamily.STUDENT_T, ErrorFamily.TWIN_T)
        }

    def _fit_replicate(self, cfg: ScenarioConfig, index: int) -> dict:
        data = simulate_dataset(cfg, index)
        X = np.column_stack([np.ones(cfg.n), data.column("x")])
        b_ols = ols(X, data.column("y"))
        row = {"replicate": index, "ols_b0": float(b_ols[0]), "ols_b1": float(b_ols[1]), "ols_converged": True}
        for family, spec in self._specs.items():
            name = family.value
            try:
                fit = self.estimator.fit_regression(spec, data)
                row.update({f"{name}_b0": fit.estimates["b0"], f"{name}_b1": fit.estimates["b1"],
                            f"{name}_converged": fit.converged})
            except TwinTError as e:
                logger.warning(f"{cfg.label} replicate {index}: {name} fit failed ({e})")
                row.update({f"{name}_b0": math.nan, f"{name}_b1": math.nan, f"{name}_converged": False})
        return row

    def run_scenario(self, cfg: ScenarioConfig) -> ScenarioResult:
        logger.info(f"Scenario {cfg.label}: {cfg.replicates} replicates on {cfg.workers} worker(s)")
        indices = range(cfg.replicates)
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                rows = list(pool.map(lambda i: self._fit_replicate(cfg, i), indices))
        else:
            rows = [self._fit_replicate(cfg, i) for i in indices]
        columns = ["replicate"] + [f"{m}_{c}" for m in SIM_MODELS for c in ("b0", "b1", "converged")]
        result = ScenarioResult(config=cfg, table=pd.DataFrame(rows, columns=columns))
        failures = {m: c for m, c in result.failures.items() if c}
        if failures:
            logger.warning(f"Scenario {cfg.label}: non-converged fits {failures}")
        return result

    def run_grid(self, seed: int, replicates: int, ns: Iterable[int] = DEFAULT_SIZES,
                 dfs: Iterable[float] = DEFAULT_DFS, workers: Optional[int] = None) -> list[ScenarioResult]:
        """Every (n, df) pair as its own scenario stream, in n-major order."""
        configs = [
            ScenarioConfig(n=n, true_df=df, replicates=replicates, seed=seed, stream=k,
                           workers=workers or settings.SIM_WORKERS)
            for k, (n, df) in enumerate((n, df) for n in ns for df in dfs)
        ]
        return [self.run_scenario(cfg) for cfg in configs]


def abs_diff_ecdf(table: pd.DataFrame, model_a: str, model_b: str, parameter: str = "b1") -> EcdfCurve:
    """Ecdf of |a - b| over replicates where both fits converged."""
    if table.empty:
        raise DomainError("estimate table is empty")
    for model in (model_a, model_b):
        column = f"{model}_{parameter}"
        if column not in table.columns:
            raise MissingColumnError(column, list(table.columns))
    ok = table[f"{model_a}_converged"].astype(bool) & table[f"{model_b}_converged"].astype(bool)
    diffs = (table.loc[ok, f"{model_a}_{parameter}"] - table.loc[ok, f"{model_b}_{parameter}"]).abs()
    if diffs.empty:
        raise DomainError(f"no replicate has converged fits for both {model_a} and {model_b}")
    return EcdfCurve.from_values(diffs.to_numpy())


def near_zero_rate(curve: EcdfCurve, threshold: Optional[float] = None) -> float:
    """Fraction of replicates with |diff| < threshold."""
    t = settings.NEAR_ZERO_THRESHOLD if threshold is None else threshold
    values = np.asarray(curve.sorted_values)
    return float(np.count_nonzero(values < t) / values.size)


def ecdf_dominates(a: EcdfCurve, b: EcdfCurve, grid) -> bool:
    """True when ecdf a lies on or above ecdf b at every grid point."""
    grid = np.asarray(grid, dtype=float)
    return bool(np.all(np.asarray(a.evaluate(grid)) >= np.asarray(b.evaluate(grid))))


def near_zero_summary(result: ScenarioResult, pairs: Iterable[tuple[str, str]],
                      thresholds: Optional[Iterable[float]] = None) -> pd.DataFrame:
    """Near-zero rates of the b1 differences for each pair at the main and sensitivity thresholds."""
    levels = list(thresholds) if thresholds is not None else [settings.NEAR_ZERO_THRESHOLD,
                                                                *settings.NEAR_ZERO_SENSITIVITY]
    table = result.table
    rows = []
    for a, b in pairs:
        for model in (a, b):
            if f"{model}_converged" not in table.columns:
                raise MissingColumnError(f"{model}_converged", list(table.columns))
        ok = table[f"{a}_converged"].astype(bool) & table[f"{b}_converged"].astype(bool)
        excluded = int((~ok).sum())
        curve = abs_diff_ecdf(table, a, b, "b1") if ok.any() else None
        if curve is None:
            logger.warning(f"Scenario {result.config.label}: no converged {a}/{b} pairs, rate not available")
        for t in levels:
            rows.append({"scenario": result.config.label, "model_a": a, "model_b": b, "threshold": t,
                         "rate": near_zero_rate(curve, t) if curve is not None else math.nan,
                         "replicates_used": curve.size if curve is not None else 0,
                         "replicates_excluded": excluded})
    return pd.DataFrame(rows)
