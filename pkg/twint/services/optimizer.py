"""
Maximization for the likelihood fits: a Nelder-Mead simplex run followed by
a BFGS polish with finite-difference gradients, plus a central-difference
Hessian for standard errors.
"""
import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy import optimize as sp_optimize

from twint.schemas.estimation import OptimizeResult, OptimizerSettings

logger = logging.getLogger("Optimizer")

Objective = Callable[[np.ndarray], float]


def _negated(objective: Objective) -> Objective:
    # non-finite objective values count as -inf
    def neg(x):
        value = objective(np.asarray(x, dtype=float))
        return -value if math.isfinite(value) else math.inf
    return neg


def optimize(objective: Objective, x0, config: Optional[OptimizerSettings] = None) -> OptimizeResult:
    """
    Maximize `objective` starting at x0. Deterministic for a given x0 and config.
    converged is False when neither stage met its tolerance (iteration exhaustion).
    """
    cfg = config or OptimizerSettings()
    x0 = np.asarray(x0, dtype=float)
    neg = _negated(objective)
    f0 = neg(x0)
    if not math.isfinite(f0):
        logger.warning(f"objective is not finite at the start point {x0.tolist()}")
        return OptimizeResult(x=x0.tolist(), value=-math.inf, iterations=0, converged=False)

    with np.errstate(all="ignore"):
        simplex = sp_optimize.minimize(
            neg, x0, method="Nelder-Mead",
            options={
                "xatol": cfg.xtol,
                "fatol": cfg.ftol * max(1.0, abs(f0)),
                "maxiter": cfg.max_simplex_iter,
                "maxfev": 2 * cfg.max_simplex_iter,
                "adaptive": x0.size > 4,
            },
        )
    best_x, best_f = simplex.x, simplex.fun
    iterations = int(simplex.nit)
    converged = bool(simplex.success)
    logger.debug(f"simplex: f={-simplex.fun:.10g} after {simplex.nit} iterations ({simplex.message})")

    if cfg.max_quasi_newton_iter > 0:
        with np.errstate(all="ignore"):
            polish = sp_optimize.minimize(
                neg, best_x, method="BFGS",
                options={"maxiter": cfg.max_quasi_newton_iter, "gtol": 1e-6},
            )
        iterations += int(polish.nit)
        logger.debug(f"BFGS polish: f={-polish.fun:.10g} after {polish.nit} iterations ({polish.message})")
        if math.isfinite(polish.fun) and polish.fun <= best_f and np.all(np.isfinite(polish.x)):
            best_x, best_f = polish.x, polish.fun
            converged = converged or bool(polish.success)

    return OptimizeResult(x=np.asarray(best_x, dtype=float).tolist(), value=-float(best_f),
                          iterations=iterations, converged=converged)


def hessian_steps(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.maximum(1e-4, 1e-4 * np.abs(x))


def numerical_hessian(objective: Objective, x, steps: Optional[np.ndarray] = None) -> np.ndarray:
    """Central-difference Hessian, h_j = max(1e-4, 1e-4 |x_j|), averaged with its transpose."""
    x = np.asarray(x, dtype=float)
    h = hessian_steps(x) if steps is None else np.asarray(steps, dtype=float)
    k = x.size
    f0 = objective(x)
    H = np.empty((k, k))

    def f_at(*moves):
        y = x.copy()
        for j, step in moves:
            y[j] += step
        return objective(y)

    for i in range(k):
        H[i, i] = (f_at((i, h[i])) - 2.0 * f0 + f_at((i, -h[i]))) / (h[i] * h[i])
        for j in range(i):
            H[i, j] = (f_at((i, h[i]), (j, h[j])) - f_at((i, h[i]), (j, -h[j]))
                       - f_at((i, -h[i]), (j, h[j])) + f_at((i, -h[i]), (j, -h[j]))) / (4.0 * h[i] * h[j])
            H[j, i] = H[i, j]
    return 0.5 * (H + H.T)


def covariance_from_hessian(H: np.ndarray) -> Optional[np.ndarray]:
    """Inverse of -H, or None when -H is not positive definite (or not finite)."""
    if not np.all(np.isfinite(H)):
        return None
    info = -np.asarray(H, dtype=float)
    try:
        chol = np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        return None
    inv_chol = np.linalg.inv(chol)
    return inv_chol.T @ inv_chol
