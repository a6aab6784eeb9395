"""Domain types and probability kernels for median autoregression.

A median autoregression of order p (MAR(p)) keeps the usual AR recursion

    y_t = beta_0 + beta_1 y_{t-1} + ... + beta_p y_{t-p} + eps_t

but draws the error from a Laplace distribution centered at zero, so the
conditional *median* of y_t is the linear predictor.  The Laplace scale is
parametrized so that the error density is (1/(4 tau)) exp(-|x| / (2 tau)),
i.e. a standard Laplace with scale b = 2 tau.

Everything in this module is a pure function of its inputs; the dataclasses
are frozen and can be shared freely across threads or processes.

Time indices follow the time-series convention: a series of length T is
indexed t = 1..T, and ``start`` arguments name the first 1-based index that
contributes a residual term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "DegenerateDataError",
    "ErrorFamily",
    "TimeSeries",
    "Coefficients",
    "ScaleParam",
    "PosteriorDraws",
    "laplace_logpdf",
    "asymmetric_laplace_logpdf",
    "gaussian_logpdf",
    "lag_design",
    "sum_abs_residuals",
    "log_likelihood",
    "log_marginal_posterior_beta",
    "diff1",
    "undiff1",
    "as_seed_tuple",
]


class DegenerateDataError(ValueError):
    """The data admit a perfect linear fit, so the scale posterior is improper."""


class ErrorFamily(str, Enum):
    """Distribution of the AR innovation: Laplace (median model) or Gaussian."""

    LAPLACE = "laplace"
    GAUSSIAN = "gaussian"


def as_seed_tuple(seed: int | Sequence[int]) -> tuple[int, ...]:
    """Normalize a seed (int or sequence of ints) to a tuple for composition."""
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def _frozen_array(obj, values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Ordered real-valued observations with optional period labels."""

    values: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("TimeSeries requires a non-empty 1-D value sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("TimeSeries values must all be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != arr.size:
                raise ValueError(
                    f"labels length {len(labels)} != series length {arr.size}"
                )
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class Coefficients:
    """AR coefficient vector (intercept first) together with its order p."""

    beta: np.ndarray
    order: int

    def __post_init__(self) -> None:
        arr = np.array(self.beta, dtype=float)
        if arr.ndim != 1:
            raise ValueError("beta must be 1-D")
        if self.order < 1:
            raise ValueError("order must be a positive integer")
        if arr.size != self.order + 1:
            raise ValueError(
                f"beta has {arr.size} entries, expected order+1 = {self.order + 1}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("beta entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "beta", arr)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "Coefficients":
        arr = np.asarray(values, dtype=float)
        return cls(beta=arr, order=arr.size - 1)


@dataclass(frozen=True)
class ScaleParam:
    """Laplace scale tau (error scale b = 2*tau); carries sigma for Gaussians."""

    tau: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"scale must be finite and positive, got {self.tau}")


@dataclass(frozen=True)
class PosteriorDraws:
    """Retained joint (beta, tau) MCMC samples plus sampler diagnostics."""

    beta_draws: np.ndarray
    tau_draws: np.ndarray
    acceptance_rate: float
    step_size: float
    order: int
    n_total: int
    n_burn: int

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta_draws, dtype=float)
        tau = np.asarray(self.tau_draws, dtype=float)
        n_kept = self.n_total - self.n_burn
        if n_kept <= 0:
            raise ValueError("n_total must exceed n_burn")
        if beta.ndim != 2 or beta.shape != (n_kept, self.order + 1):
            raise ValueError(
                f"beta_draws shape {beta.shape} != ({n_kept}, {self.order + 1})"
            )
        if tau.shape != (n_kept,):
            raise ValueError(f"tau_draws shape {tau.shape} != ({n_kept},)")
        if not np.all(tau > 0):
            raise ValueError("all tau draws must be positive")
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError("acceptance_rate must lie in [0, 1]")
        object.__setattr__(self, "beta_draws", beta)
        object.__setattr__(self, "tau_draws", tau)

    @property
    def n_kept(self) -> int:
        return self.n_total - self.n_burn


def laplace_logpdf(x: float, tau: float) -> float:
    """log of the Laplace(0, 2*tau) density: -log(4 tau) - |x| / (2 tau)."""
    if not (tau > 0 and math.isfinite(tau)):
        raise ValueError(f"tau must be positive and finite, got {tau}")
    return -math.log(4.0 * tau) - abs(x) / (2.0 * tau)


def asymmetric_laplace_logpdf(x: float, mu: float, tau: float, theta: float) -> float:
    """log density of AL(mu, tau, theta).

    The density is theta(1-theta)/tau * exp(-(x-mu)(theta - 1[x<mu])/tau);
    at theta = 0.5 and mu = 0 it coincides with the Laplace(0, 2*tau') density
    for tau' = tau/2.
    """
    if not (tau > 0 and math.isfinite(tau)):
        raise ValueError(f"tau must be positive and finite, got {tau}")
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    indicator = 1.0 if x < mu else 0.0
    return math.log(theta * (1.0 - theta) / tau) - (x - mu) * (theta - indicator) / tau


def gaussian_logpdf(x: float, sigma: float) -> float:
    """log of the N(0, sigma^2) density at x."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    return -0.5 * math.log(2.0 * math.pi * sigma * sigma) - (x * x) / (2.0 * sigma * sigma)


def lag_design(values: np.ndarray, order: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Build the AR design for rows t = start..T (1-based).

    Returns (X, targets) with X[i] = (1, y_{t-1}, ..., y_{t-p}) and
    targets[i] = y_t for t = start + i.
    """
    values = np.asarray(values, dtype=float)
    T = values.size
    if order < 1:
        raise ValueError("order must be >= 1")
    if start <= order:
        raise ValueError(
            f"insufficient history: start={start} must exceed order={order}"
        )
    if start > T:
        raise ValueError(f"start={start} beyond series length T={T}")
    targets = values[start - 1 : T]
    cols = [np.ones(T - start + 1)]
    for j in range(1, order + 1):
        cols.append(values[start - 1 - j : T - j])
    return np.column_stack(cols), targets


def sum_abs_residuals(y: TimeSeries, coeff: Coefficients, start: int) -> float:
    """Half-absolute residual sum S(beta) = sum_{t=start..T} |y_t - y'_{t-1} beta| / 2."""
    X, targets = lag_design(y.values, coeff.order, start)
    resid = targets - X @ coeff.beta
    return 0.5 * float(np.abs(resid).sum())


def log_likelihood(
    y: TimeSeries,
    coeff: Coefficients,
    scale: ScaleParam,
    family: ErrorFamily,
    start: int,
) -> float:
    """Joint log likelihood of observations t = start..T under the AR recursion."""
    X, targets = lag_design(y.values, coeff.order, start)
    resid = targets - X @ coeff.beta
    n = resid.size
    if family is ErrorFamily.LAPLACE:
        return -n * math.log(4.0 * scale.tau) - float(np.abs(resid).sum()) / (2.0 * scale.tau)
    var = scale.tau * scale.tau
    return -0.5 * n * math.log(2.0 * math.pi * var) - float((resid * resid).sum()) / (2.0 * var)


def log_marginal_posterior_beta(y: TimeSeries, coeff: Coefficients, start: int) -> float:
    """Marginal log posterior of beta with the Laplace scale integrated out.

    Equals -n * log(S(beta)) with n = T - start + 1 residual terms, up to an
    additive constant fixed at zero.  Returns +inf when S(beta) = 0: the
    posterior is improper there and callers must treat the data as degenerate.
    """
    s = sum_abs_residuals(y, coeff, start)
    n = len(y) - start + 1
    if s == 0.0:
        return math.inf
    return -n * math.log(s)


def diff1(y: TimeSeries) -> TimeSeries:
    """Lag-1 differences (y_2 - y_1, ..., y_T - y_{T-1}); length T - 1."""
    if len(y) < 2:
        raise ValueError("differencing needs at least 2 observations")
    labels = y.labels[1:] if y.labels is not None else None
    return TimeSeries(values=np.diff(y.values), labels=labels)


def undiff1(deltas: Sequence[float], last_level: float) -> np.ndarray:
    """Re-integrate change forecasts: out_h = last_level + sum_{i<=h} delta_i."""
    return last_level + np.cumsum(np.asarray(deltas, dtype=float))
