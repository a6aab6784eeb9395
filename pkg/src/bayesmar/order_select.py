"""BIC order scoring on an aligned window, MAP selection, and BMA weights.

Candidate orders p = 1..K are made comparable by evaluating every fit on the
same last T-K observations (start = K+1), so the likelihoods share a sample
size.  The per-order criterion is

    BIC_p = (p + 2) log(T - K) - 2 log L(beta_hat, scale_hat)

with p + 2 counting the intercept, the p lag coefficients, and the scale.
Model weights are exp(-BIC/2) normalized across orders, computed after
subtracting the minimum BIC so that realistic magnitudes cannot underflow.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ErrorFamily, TimeSeries
from .mle_fit import MleFit, fit_l1, fit_ols

__all__ = [
    "OrderEnsemble",
    "bic",
    "bma_weights",
    "build_ensemble",
    "laplace_bic_value",
    "gaussian_bic_value",
    "ensemble_to_csv",
]


@dataclass(frozen=True)
class OrderEnsemble:
    """Per-order fits with their BIC values and normalized model weights."""

    max_order: int
    fits: tuple[MleFit, ...]
    bics: np.ndarray
    weights: np.ndarray
    map_order: int
    family: ErrorFamily

    def __post_init__(self) -> None:
        if len(self.fits) != self.max_order:
            raise ValueError("need one fit per candidate order")
        if self.bics.shape != (self.max_order,) or self.weights.shape != (self.max_order,):
            raise ValueError("bics and weights must have one entry per order")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        if not 1 <= self.map_order <= self.max_order:
            raise ValueError("map_order out of range")


def laplace_bic_value(n: int, order: int, tau: float, s_aligned: float) -> float:
    """BIC from an aligned Laplace fit: penalty minus twice the log likelihood.

    The likelihood term is (4 tau)^(-n) exp(-s / tau) with s the aligned
    half-absolute residual sum.
    """
    return (order + 2) * math.log(n) + 2.0 * n * math.log(4.0 * tau) + 2.0 * s_aligned / tau


def gaussian_bic_value(n: int, order: int, sigma: float, rss_aligned: float) -> float:
    """Gaussian analogue with the maximized N(0, sigma^2) likelihood."""
    return (
        (order + 2) * math.log(n)
        + n * math.log(2.0 * math.pi * sigma * sigma)
        + rss_aligned / (sigma * sigma)
    )


def _bic_from_fit(fit: MleFit, n: int) -> float:
    if fit.family is ErrorFamily.LAPLACE:
        return laplace_bic_value(n, fit.coeff.order, fit.scale.tau, fit.objective)
    return gaussian_bic_value(n, fit.coeff.order, fit.scale.tau, fit.objective)


def _check_alignment(T: int, order: int, max_order: int) -> None:
    if not 1 <= order <= max_order:
        raise ValueError(f"order {order} outside 1..{max_order}")
    if max_order >= T:
        raise ValueError(f"max_order {max_order} must be below series length {T}")
    if T - max_order < order + 2:
        raise ValueError(
            f"aligned window of {T - max_order} rows too small for order {order}"
        )


def bic(
    y: TimeSeries,
    order: int,
    max_order: int,
    family: ErrorFamily,
    tau_denominator: str = "paper",
) -> float:
    """BIC of the order-p fit evaluated on the last T - max_order observations."""
    _check_alignment(len(y), order, max_order)
    if family is ErrorFamily.LAPLACE:
        fit = fit_l1(y, order, start=max_order + 1, tau_denominator=tau_denominator)
    else:
        fit = fit_ols(y, order, start=max_order + 1)
    return _bic_from_fit(fit, len(y) - max_order)


def bma_weights(bics: np.ndarray) -> np.ndarray:
    """Normalized exp(-BIC/2) weights, stabilized by subtracting the minimum BIC."""
    bics = np.asarray(bics, dtype=float)
    if bics.size == 0 or not np.all(np.isfinite(bics)):
        raise ValueError("BIC vector must be non-empty and finite")
    shifted = -(bics - bics.min()) / 2.0
    w = np.exp(shifted)
    return w / w.sum()


def build_ensemble(
    y: TimeSeries,
    max_order: int,
    family: ErrorFamily,
    tau_denominator: str = "paper",
) -> OrderEnsemble:
    """Fit every order 1..max_order on the aligned window and weight by BIC.

    Ties in the BIC break toward the smaller order.
    """
    T = len(y)
    _check_alignment(T, max_order, max_order)
    n = T - max_order
    fits: list[MleFit] = []
    bics = np.empty(max_order)
    for p in range(1, max_order + 1):
        if family is ErrorFamily.LAPLACE:
            fit = fit_l1(y, p, start=max_order + 1, tau_denominator=tau_denominator)
        else:
            fit = fit_ols(y, p, start=max_order + 1)
        fits.append(fit)
        bics[p - 1] = _bic_from_fit(fit, n)
    weights = bma_weights(bics)
    map_order = int(np.argmin(bics)) + 1
    return OrderEnsemble(
        max_order=max_order,
        fits=tuple(fits),
        bics=bics,
        weights=weights,
        map_order=map_order,
        family=family,
    )


def ensemble_to_csv(ensemble: OrderEnsemble, path: str | Path, header_lines: tuple[str, ...] = ()) -> None:
    """Write `order, bic, weight, beta_0..beta_K, tau` rows (betas padded with blanks)."""
    k_max = ensemble.max_order
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["order", "bic", "weight"] + [f"beta_{j}" for j in range(k_max + 1)] + ["tau"]
        )
        for p, fit in enumerate(ensemble.fits, start=1):
            betas = [repr(float(b)) for b in fit.coeff.beta]
            betas += [""] * (k_max + 1 - len(betas))
            writer.writerow(
                [p, repr(float(ensemble.bics[p - 1])), repr(float(ensemble.weights[p - 1]))]
                + betas
                + [repr(float(fit.scale.tau))]
            )
