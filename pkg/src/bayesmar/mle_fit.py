"""Frequentist point fits feeding the BIC: exact L1 regression and least squares.

The L1 fit solves the median-regression problem

    min_beta  sum_t |y_t - (1, y_{t-1}, ..., y_{t-p}) beta| / 2

exactly, as a linear program with split residual variables (u, v >= 0 and
residual = u - v).  The closed-form scale estimate divides the optimal
half-absolute residual sum by the number of residual terms plus one; the
literal likelihood maximizer would divide by the term count instead, and both
conventions are exposed through ``tau_denominator``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import Coefficients, ErrorFamily, ScaleParam, TimeSeries, lag_design

__all__ = ["MleFit", "fit_l1", "fit_ols", "SCALE_FLOOR"]

# Noiseless inputs give a zero objective; the scale is floored before any log.
SCALE_FLOOR = 1e-10


@dataclass(frozen=True)
class MleFit:
    """Point fit: coefficients, scale, attained objective, and window size."""

    coeff: Coefficients
    scale: ScaleParam
    objective: float
    n_used: int
    family: ErrorFamily

    def __post_init__(self) -> None:
        if self.objective < 0:
            raise ValueError("objective must be nonnegative")
        if self.n_used < 1:
            raise ValueError("n_used must be at least 1")


def _check_window(n: int, order: int) -> None:
    if n < order + 2:
        raise ValueError(
            f"window too small: {n} usable rows cannot identify order {order} "
            f"(need at least {order + 2})"
        )


def fit_l1(
    y: TimeSeries,
    order: int,
    start: int,
    tau_denominator: str = "paper",
) -> MleFit:
    """Exact L1 (median regression) fit on rows t = start..T.

    Parameters
    ----------
    y, order, start : series, AR order, and 1-based first scored index.
    tau_denominator : "paper" divides the objective by n_used + 1,
        "mle" by n_used (the literal likelihood maximizer).

    The LP is solved to global optimality; with a rank-deficient design the
    optimum is non-unique, a warning is emitted, and one optimal vertex is
    returned.
    """
    if tau_denominator not in ("paper", "mle"):
        raise ValueError(f"unknown tau_denominator {tau_denominator!r}")
    X, targets = lag_design(y.values, order, start)
    n, k = X.shape
    _check_window(n, order)
    if np.linalg.matrix_rank(X) < k:
        warnings.warn(
            "rank-deficient design: L1 optimum is non-unique, returning one optimal vertex",
            RuntimeWarning,
            stacklevel=2,
        )

    # minimize sum(u + v)  s.t.  X beta + u - v = y,  u, v >= 0, beta free
    cost = np.concatenate([np.zeros(k), np.ones(2 * n)])
    a_eq = np.hstack([X, np.eye(n), -np.eye(n)])
    bounds = [(None, None)] * k + [(0.0, None)] * (2 * n)
    res = linprog(cost, A_eq=a_eq, b_eq=targets, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"L1 linear program failed: {res.message}")
    beta = res.x[:k]

    objective = 0.5 * float(np.abs(targets - X @ beta).sum())
    denom = n + 1 if tau_denominator == "paper" else n
    tau = max(objective / denom, SCALE_FLOOR)
    return MleFit(
        coeff=Coefficients(beta=beta, order=order),
        scale=ScaleParam(tau=tau),
        objective=objective,
        n_used=n,
        family=ErrorFamily.LAPLACE,
    )


def fit_ols(y: TimeSeries, order: int, start: int) -> MleFit:
    """Gaussian MLE on rows t = start..T via the normal equations.

    The scale slot carries sigma = sqrt(RSS / n_used); the objective is the RSS.
    """
    X, targets = lag_design(y.values, order, start)
    n, k = X.shape
    _check_window(n, order)
    if np.linalg.matrix_rank(X) < k:
        raise np.linalg.LinAlgError("singular normal equations: design not full column rank")
    beta = np.linalg.solve(X.T @ X, X.T @ targets)
    resid = targets - X @ beta
    rss = float(resid @ resid)
    sigma = max(math.sqrt(rss / n), SCALE_FLOOR)
    return MleFit(
        coeff=Coefficients(beta=beta, order=order),
        scale=ScaleParam(tau=sigma),
        objective=rss,
        n_used=n,
        family=ErrorFamily.GAUSSIAN,
    )
