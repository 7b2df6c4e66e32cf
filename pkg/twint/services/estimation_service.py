import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy import special, stats

from twint.core.config import settings
from twint.core.exceptions import DomainError, TwinTError
from twint.models.skew import AzzaliniTwinT, JonesTwinT, TwoPieceTwinT
from twint.models.twin_t import TwinT
from twint.schemas.dataset import Dataset
from twint.schemas.estimation import (
    CurveFamily,
    CurveFitSpec,
    ErrorFamily,
    FitReport,
    OptimizeResult,
    OptimizerSettings,
    RegressionSpec,
    SkewKind,
)
from twint.services.optimizer import covariance_from_hessian, numerical_hessian, optimize
from twint.utils.random_streams import RandomSource, make_rng

logger = logging.getLogger("EstimationService")

MIN_CURVE_OBS = 8
NORMAL_LIMIT_NOTE = "normal limit reached"
TWO_PIECE_NOTE = ("two-piece Hessian standard errors are approximate (the density's second "
                  "derivative jumps at the mode); bootstrap standard errors are recommended")
NOT_CONVERGED_NOTE = "optimizer did not converge"
HESSIAN_NOTE = "negative Hessian is not positive definite; standard errors omitted"

Objective = Callable[[np.ndarray], float]


def ols(X, y) -> np.ndarray:
    """Least-squares coefficients of y on the columns of X."""
    coef, *_ = np.linalg.lstsq(np.asarray(X, dtype=float), np.asarray(y, dtype=float), rcond=None)
    return coef


def wald_interval(estimate_log: float, se_log: float, level: float = 0.95) -> tuple[float, float]:
    """Natural-scale interval exp(est -+ z se) from a Wald interval on the log scale."""
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    if not se_log >= 0:
        raise DomainError("standard error must be >= 0")
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    return math.exp(estimate_log - z * se_log), math.exp(estimate_log + z * se_log)


def clip_log_nu(log_nu: float) -> float:
    lo, hi = settings.LOG_NU_BOUNDS
    return min(max(log_nu, lo), hi)


def standard_log_pdf(family: ErrorFamily, nu: Optional[float] = None) -> Callable:
    """Standardized error log-density of the family at nu."""
    if family == ErrorFamily.NORMAL:
        return stats.norm.logpdf
    if family == ErrorFamily.STUDENT_T:
        return lambda z: stats.t.logpdf(z, nu)
    return TwinT(nu=nu).log_pdf


def curve_log_pdf(spec: CurveFitSpec, nu: float, skew_theta: Optional[float] = None) -> Callable:
    """Standardized log-density of a curve model; skew_theta is on the unconstrained scale."""
    if spec.family == CurveFamily.STUDENT_T:
        return lambda z: stats.t.logpdf(z, nu)
    base = TwinT(nu=nu)
    if spec.skew == SkewKind.TWO_PIECE:
        return TwoPieceTwinT(base=base, gamma=math.exp(skew_theta)).log_pdf
    if spec.skew == SkewKind.JONES:
        fraction = float(special.expit(skew_theta))
        return JonesTwinT(base=base, a=fraction * nu, b=(1.0 - fraction) * nu).log_pdf
    if spec.skew == SkewKind.AZZALINI:
        return AzzaliniTwinT(base=base, phi=math.tanh(skew_theta)).log_pdf
    return base.log_pdf


class EstimationService:
    """
    Maximum-likelihood fits of linear regressions and location-scale(-skew) curves.

    Parameters are optimized on unconstrained scales (log sigma or the
    log-variance line, log nu, and log gamma / logit(a/nu) / atanh(phi) for the
    skew) and reported on their natural scales with delta-method standard errors.
    """

    def __init__(self, config: Optional[OptimizerSettings] = None):
        """
        Args:
            config: Optimizer tolerances and nu multistart values (defaults from settings).
        """
        self.config = config or OptimizerSettings()

    # --- Regression ---

    @staticmethod
    def parameter_names(spec: RegressionSpec) -> list[str]:
        names = [f"b{i}" for i in range(len(spec.covariate_columns) + 1)]
        names += ["lambda0", "lambda1"] if spec.heteroscedastic else ["log_sigma"]
        if spec.has_nu:
            names.append("log_nu")
        return names

    @staticmethod
    def _regression_arrays(spec: RegressionSpec, data: Dataset):
        y = data.column(spec.response_column)
        X = np.column_stack([np.ones(data.n_rows)] + [data.column(c) for c in spec.covariate_columns])
        z = data.column(spec.dispersion_column) if spec.heteroscedastic else None
        return y, X, z

    @staticmethod
    def _regression_objective(spec: RegressionSpec, y: np.ndarray, X: np.ndarray,
                              z: Optional[np.ndarray]) -> Objective:
        k = X.shape[1]

        def loglik(theta: np.ndarray) -> float:
            beta = theta[:k]
            if spec.heteroscedastic:
                log_sigma = 0.5 * (theta[k] + theta[k + 1] * z)
                nxt = k + 2
            else:
                log_sigma = theta[k]
                nxt = k + 1
            nu = math.exp(clip_log_nu(theta[nxt])) if spec.has_nu else None
            with np.errstate(all="ignore"):
                std_resid = (y - X @ beta) * np.exp(-log_sigma)
                return float(np.sum(standard_log_pdf(spec.error_family, nu)(std_resid) - log_sigma))

        return loglik

    def regress_loglik(self, spec: RegressionSpec, params, data: Dataset) -> float:
        """
        sum_i [-ln sigma_i + ln f((y_i - x_i b) / sigma_i)]; params ordered as parameter_names(spec).
        A non-finite value is returned as is and treated as -inf by the optimizer.
        """
        params = np.asarray(params, dtype=float)
        expected = len(self.parameter_names(spec))
        if params.size != expected:
            raise DomainError(f"expected {expected} parameters, got {params.size}")
        return self._regression_objective(spec, *self._regression_arrays(spec, data))(params)

    def fit_regression(self, spec: RegressionSpec, data: Dataset) -> FitReport:
        y, X, z = self._regression_arrays(spec, data)
        n, k = X.shape
        names = self.parameter_names(spec)
        if n <= len(names):
            raise DomainError(f"need more observations ({n}) than free parameters ({len(names)})")
        logger.info(f"Fitting {spec.error_family.value} regression "
                    f"({'heteroscedastic' if spec.heteroscedastic else 'homoscedastic'}), n={n}")

        objective = self._regression_objective(spec, y, X, z)
        beta0 = ols(X, y)
        resid = y - X @ beta0
        sigma_floor = 1e-10 * max(1.0, float(np.max(np.abs(y))))

        if spec.error_family == ErrorFamily.NORMAL and not spec.heteroscedastic:
            sigma = math.sqrt(max(float(resid @ resid) / n, sigma_floor ** 2))
            theta = np.append(beta0, math.log(sigma))
            result = OptimizeResult(x=theta.tolist(), value=objective(theta), iterations=0, converged=True)
        else:
            log_sd = math.log(max(float(np.std(resid)), sigma_floor))
            scale_start = [2.0 * log_sd, 0.0] if spec.heteroscedastic else [log_sd]
            base = list(beta0) + scale_start
            starts = [base + [math.log(v)] for v in self.config.nu_starts] if spec.has_nu else [base]
            result = self._multistart(objective, starts)

        def natural(theta: np.ndarray) -> dict[str, float]:
            out = {f"b{i}": float(theta[i]) for i in range(k)}
            if spec.heteroscedastic:
                out["lambda0"], out["lambda1"] = float(theta[k]), float(theta[k + 1])
            else:
                out["sigma"] = math.exp(theta[k])
            if spec.has_nu:
                out["nu"] = math.exp(clip_log_nu(theta[-1]))
            return out

        report = self._build_report(
            objective, result, names, natural, n_obs=n, family=spec.error_family.value,
            skew=SkewKind.NONE.value, nu_index=len(names) - 1 if spec.has_nu else None,
        )
        logger.info(f"Regression fit finished: loglik={report.loglik:.10g}, converged={report.converged}")
        return report

    # --- Curve fitting ---

    @staticmethod
    def curve_parameter_names(spec: CurveFitSpec) -> list[str]:
        names = ["mu", "log_sigma", "log_nu"]
        skew_name = {
            SkewKind.TWO_PIECE: "log_gamma",
            SkewKind.JONES: "logit_a_fraction",
            SkewKind.AZZALINI: "atanh_phi",
        }.get(spec.skew)
        return names + [skew_name] if skew_name else names

    @staticmethod
    def _curve_objective(spec: CurveFitSpec, y: np.ndarray) -> Objective:
        n = y.size
        skewed = spec.skew != SkewKind.NONE

        def loglik(theta: np.ndarray) -> float:
            mu, log_sigma = theta[0], theta[1]
            nu = math.exp(clip_log_nu(theta[2]))
            try:
                log_pdf = curve_log_pdf(spec, nu, theta[3] if skewed else None)
                with np.errstate(all="ignore"):
                    return float(np.sum(log_pdf((y - mu) * math.exp(-log_sigma))) - n * log_sigma)
            except (ValueError, OverflowError, TwinTError):
                return -math.inf

        return loglik

    def curve_loglik(self, spec: CurveFitSpec, params, data) -> float:
        y = self._curve_values(spec, data)
        return self._curve_objective(spec, y)(np.asarray(params, dtype=float))

    @staticmethod
    def _curve_values(spec: CurveFitSpec, data) -> np.ndarray:
        if isinstance(data, Dataset):
            return data.column(spec.column)
        return np.asarray(data, dtype=float).ravel()

    def fit_curve(self, spec: CurveFitSpec, data, bootstrap_replicates: int = 0,
                  seed: RandomSource = None) -> FitReport:
        """
        ML fit of mu, sigma, nu and the skew parameter. `data` is a Dataset
        (spec.column is used) or a plain sample.
        """
        y = self._curve_values(spec, data)
        n = y.size
        if n < MIN_CURVE_OBS:
            raise DomainError(f"curve fitting needs at least {MIN_CURVE_OBS} observations, got {n}")
        if not np.all(np.isfinite(y)):
            raise DomainError("sample contains non-finite values")
        logger.info(f"Fitting {spec.family.value} curve (skew={spec.skew.value}), n={n}")

        objective = self._curve_objective(spec, y)
        names = self.curve_parameter_names(spec)
        sd = float(np.std(y, ddof=1))
        log_sd = math.log(sd) if sd > 0 else math.log(1e-10 * max(1.0, float(np.max(np.abs(y)))))
        base = [float(np.median(y)), log_sd]
        skew_start = [0.0] if spec.skew != SkewKind.NONE else []
        starts = [base + [math.log(v)] + skew_start for v in self.config.nu_starts]
        result = self._multistart(objective, starts)

        def natural(theta: np.ndarray) -> dict[str, float]:
            nu = math.exp(clip_log_nu(theta[2]))
            out = {"mu": float(theta[0]), "sigma": math.exp(theta[1]), "nu": nu}
            if spec.skew == SkewKind.TWO_PIECE:
                out["gamma"] = math.exp(theta[3])
            elif spec.skew == SkewKind.JONES:
                out["a"] = nu * float(special.expit(theta[3]))
                out["b"] = nu - out["a"]
            elif spec.skew == SkewKind.AZZALINI:
                out["phi"] = math.tanh(theta[3])
            return out

        notes = [TWO_PIECE_NOTE] if spec.skew == SkewKind.TWO_PIECE else []
        if notes:
            logger.warning(TWO_PIECE_NOTE)
        report = self._build_report(objective, result, names, natural, n_obs=n, family=spec.family.value,
                                    skew=spec.skew.value, nu_index=2, notes=notes)
        if bootstrap_replicates > 0:
            boot = self.bootstrap_std_errors(spec, y, bootstrap_replicates, seed,
                                             nu_start=report.estimates["nu"])
            report = report.model_copy(update={"bootstrap_std_errors": boot})
        logger.info(f"Curve fit finished: loglik={report.loglik:.10g}, converged={report.converged}")
        return report

    # --- Shared machinery ---

    def _multistart(self, objective: Objective, starts: list[list[float]]) -> OptimizeResult:
        best: Optional[OptimizeResult] = None
        for x0 in starts:
            candidate = optimize(objective, x0, self.config)
            logger.debug(f"start {np.round(x0, 4).tolist()}: loglik={candidate.value:.10g}, "
                         f"converged={candidate.converged}")
            if best is None or candidate.value > best.value:
                best = candidate
        return best

    def _build_report(self, objective: Objective, result: OptimizeResult, names: list[str],
                      natural: Callable[[np.ndarray], dict[str, float]], n_obs: int, family: str,
                      skew: str, nu_index: Optional[int], notes: Optional[list[str]] = None) -> FitReport:
        notes = list(notes or [])
        theta = np.asarray(result.x, dtype=float)
        estimates = natural(theta)

        capped = nu_index is not None and estimates["nu"] > settings.NU_FIT_CAP
        if capped:
            estimates["nu"] = settings.NU_FIT_CAP
            notes.append(NORMAL_LIMIT_NOTE)
            logger.warning(f"nu estimate beyond {settings.NU_FIT_CAP:g}: {NORMAL_LIMIT_NOTE}")
        free = [i for i in range(theta.size) if not (capped and i == nu_index)]

        def sub_objective(sub: np.ndarray) -> float:
            full = theta.copy()
            full[free] = sub
            return objective(full)

        cov = None
        if math.isfinite(result.value):
            cov = covariance_from_hessian(numerical_hessian(sub_objective, theta[free]))
        hessian_ok = cov is not None

        std_errors: dict[str, float] = {}
        nu_interval = None
        if hessian_ok:
            jac = self._natural_jacobian(natural, theta, free)
            variances = np.einsum("ij,jk,ik->i", jac, cov, jac)
            std_errors = {name: math.sqrt(max(v, 0.0)) for name, v in zip(estimates, variances)}
            if capped:
                std_errors.pop("nu", None)
            if nu_index is not None and not capped:
                se_log_nu = math.sqrt(cov[free.index(nu_index), free.index(nu_index)])
                nu_interval = wald_interval(float(theta[nu_index]), se_log_nu)
        else:
            notes.append(HESSIAN_NOTE)
            logger.warning(HESSIAN_NOTE)
        if not result.converged:
            notes.append(NOT_CONVERGED_NOTE)
            logger.warning(f"{family} fit did not converge after {result.iterations} iterations")

        k = len(names)
        return FitReport(
            family=family, skew=skew, estimates=estimates, std_errors=std_errors,
            loglik=result.value, aic=2.0 * k - 2.0 * result.value, n_obs=n_obs, n_params=k,
            converged=result.converged, iterations=result.iterations, hessian_ok=hessian_ok,
            nu_interval=nu_interval, notes=notes,
        )

    @staticmethod
    def _natural_jacobian(natural: Callable[[np.ndarray], dict[str, float]], theta: np.ndarray,
                          free: list[int]) -> np.ndarray:
        # d(natural)/d(theta_free) by central differences; the maps are smooth and cheap
        names = list(natural(theta))
        jac = np.zeros((len(names), len(free)))
        for col, j in enumerate(free):
            h = 1e-6 * max(1.0, abs(theta[j]))
            up, down = theta.copy(), theta.copy()
            up[j] += h
            down[j] -= h
            hi, lo = natural(up), natural(down)
            jac[:, col] = [(hi[name] - lo[name]) / (2.0 * h) for name in names]
        return jac

    def bootstrap_std_errors(self, spec: RegressionSpec | CurveFitSpec, data, replicates: Optional[int] = None,
                             seed: RandomSource = None, nu_start: Optional[float] = None) -> dict[str, float]:
        """
        Row-resampling bootstrap: replicate r refits the rows drawn from stream
        (seed, r). Non-converged refits are skipped; empty if fewer than two remain.
        """
        reps = settings.BOOTSTRAP_REPLICATES if replicates is None else replicates
        if reps < 2:
            raise DomainError("bootstrap needs at least 2 replicates")
        refit = self
        if nu_start is not None:
            refit = EstimationService(self.config.model_copy(update={"nu_starts": (min(nu_start, settings.NU_FIT_CAP),)}))
        seed_value = settings.DEFAULT_SEED if seed is None else seed
        if isinstance(spec, RegressionSpec):
            n = data.n_rows
        else:
            data = self._curve_values(spec, data)
            n = data.size

        draws: list[dict[str, float]] = []
        for r in range(reps):
            rows = make_rng(seed_value, r).integers(0, n, n)
            try:
                if isinstance(spec, RegressionSpec):
                    fit = refit.fit_regression(spec, data.take(rows))
                else:
                    fit = refit.fit_curve(spec, data[rows])
            except TwinTError as e:
                logger.debug(f"bootstrap replicate {r} failed: {e}")
                continue
            if fit.converged:
                draws.append(fit.estimates)
        logger.info(f"Bootstrap: {len(draws)}/{reps} replicates converged")
        if len(draws) < 2:
            return {}
        return {name: float(np.std([d[name] for d in draws], ddof=1)) for name in draws[0]}
