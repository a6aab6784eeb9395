"""Random-walk Metropolis sampling of AR coefficients on their marginal posterior.

The scale parameter is integrated out analytically, so the chain moves only in
beta space: the Laplace family targets S(beta)^(-n) with
S(beta) = sum |residual| / 2, and the Gaussian family targets RSS(beta)^(-n/2).
Proposals add a * Uniform(-0.1, 0.1) noise to every coefficient including the
intercept.  The step size a is adapted in multiplicative nudges during burn-in
until the window acceptance rate sits inside the target band, then frozen so
the retained draws come from a fixed kernel.

For each retained beta the matching scale is reconstituted by an exact draw
from its conditional posterior (inverse gamma), which makes the retained
(beta, tau) pairs joint posterior samples.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import (
    Coefficients,
    DegenerateDataError,
    ErrorFamily,
    PosteriorDraws,
    TimeSeries,
    as_seed_tuple,
    lag_design,
)

__all__ = ["McmcConfig", "run_mh", "tune_step", "posterior_mean"]

PROPOSAL_HALF_WIDTH = 0.1


@dataclass(frozen=True)
class McmcConfig:
    """Sampler budget, proposal tuning targets, and seed."""

    n_total: int = 40_000
    n_burn: int = 25_000
    initial_step: float = 1.0
    target_band: tuple[float, float] = (0.20, 0.50)
    seed: int | tuple[int, ...] = 0
    adapt_window: int = 200

    def __post_init__(self) -> None:
        if self.n_total <= 0 or self.n_burn < 0:
            raise ValueError("n_total must be positive and n_burn nonnegative")
        if self.n_burn >= self.n_total:
            raise ValueError("n_burn must be smaller than n_total")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        lo, hi = self.target_band
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"target_band must satisfy 0 <= lo < hi <= 1, got {self.target_band}")
        if self.adapt_window <= 0:
            raise ValueError("adapt_window must be positive")


def tune_step(current_a: float, window_acceptance: float, band: tuple[float, float]) -> float:
    """Multiplicative step-size update from one adaptation window.

    Too many acceptances mean the chain is taking timid steps, so widen; too
    few mean it is overreaching, so shrink.  Inside the band the step is kept.
    """
    if current_a <= 0:
        raise ValueError("current_a must be positive")
    lo, hi = band
    if window_acceptance > hi:
        return current_a * 1.25
    if window_acceptance < lo:
        return current_a * 0.8
    return current_a


def _mh_chain(
    log_target: Callable[[np.ndarray], float],
    beta0: np.ndarray,
    config: McmcConfig,
    rng: np.random.Generator,
    ratio_sink: list[float] | None = None,
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Run the random-walk chain; returns (kept, kept_accept_flags, acc_rate, final_a).

    Adaptation happens only during burn-in, once per ``adapt_window`` block.
    The acceptance decision compares the target log ratio against log-uniform
    noise; the symmetric proposal contributes nothing to the ratio.
    ``ratio_sink``, when given, records the log ratio used at every iteration.
    """
    dim = beta0.size
    n_total, n_burn = config.n_total, config.n_burn
    n_kept = n_total - n_burn
    steps = rng.uniform(-PROPOSAL_HALF_WIDTH, PROPOSAL_HALF_WIDTH, size=(n_total, dim))
    log_accept_noise = np.log(rng.random(n_total))

    a = config.initial_step
    current = np.array(beta0, dtype=float)
    current_lp = log_target(current)
    kept = np.empty((n_kept, dim))
    kept_accepted = np.zeros(n_kept, dtype=bool)
    accepted_post = 0
    window_accepts = 0
    window_count = 0

    for i in range(n_total):
        proposal = current + a * steps[i]
        proposal_lp = log_target(proposal)
        log_ratio = proposal_lp - current_lp
        if ratio_sink is not None:
            ratio_sink.append(log_ratio)
        accept = log_ratio >= 0.0 or log_accept_noise[i] < log_ratio
        if accept:
            current = proposal
            current_lp = proposal_lp
        if i < n_burn:
            window_accepts += accept
            window_count += 1
            if window_count == config.adapt_window:
                a = tune_step(a, window_accepts / window_count, config.target_band)
                window_accepts = 0
                window_count = 0
        else:
            k = i - n_burn
            kept[k] = current
            kept_accepted[k] = accept
            accepted_post += accept

    return kept, kept_accepted, accepted_post / n_kept, a


def _laplace_log_marginal(X: np.ndarray, targets: np.ndarray) -> Callable[[np.ndarray], float]:
    n = targets.size

    def logpost(beta: np.ndarray) -> float:
        s = 0.5 * float(np.abs(targets - X @ beta).sum())
        if s <= 0.0:
            raise DegenerateDataError(
                "zero residual sum: data admit a perfect fit and the posterior is improper"
            )
        return -n * math.log(s)

    return logpost


def _gaussian_log_marginal(X: np.ndarray, targets: np.ndarray) -> Callable[[np.ndarray], float]:
    n = targets.size

    def logpost(beta: np.ndarray) -> float:
        resid = targets - X @ beta
        rss = float(resid @ resid)
        if rss <= 0.0:
            raise DegenerateDataError(
                "zero residual sum of squares: data admit a perfect fit"
            )
        return -0.5 * n * math.log(rss)

    return logpost


def run_mh(
    y: TimeSeries,
    order: int,
    family: ErrorFamily,
    config: McmcConfig,
    trace_path: str | Path | None = None,
) -> PosteriorDraws:
    """Sample the joint posterior of (beta, scale) for an order-p fit of ``y``.

    The chain targets the marginal posterior of beta on the full usable window
    t = p+1..T; beta starts at independent Uniform(0, 1) coordinates.  After
    burn-in, each retained beta_i gets an exact conditional scale draw:
    Laplace tau_i ~ InvGamma(shape T-p, rate S(beta_i)), Gaussian
    sigma_i^2 ~ InvGamma((T-p)/2, RSS(beta_i)/2).

    ``trace_path`` exports the retained draws as CSV with columns
    iter, beta_0..beta_p, tau, accepted.
    """
    X, targets = lag_design(y.values, order, order + 1)
    n = targets.size
    if n < order + 2:
        raise ValueError(
            f"series too short to identify order {order}: {n} usable rows, need {order + 2}"
        )
    # A perfect fit anywhere in beta space makes the marginal posterior
    # improper; reject such data up front rather than letting the chain wander.
    lsq_resid = targets - X @ np.linalg.lstsq(X, targets, rcond=None)[0]
    if float(lsq_resid @ lsq_resid) <= 1e-20 * max(1.0, float(targets @ targets)):
        raise DegenerateDataError(
            f"data admit an exact order-{order} fit; the scale posterior is improper"
        )
    rng = np.random.default_rng(as_seed_tuple(config.seed))
    if family is ErrorFamily.LAPLACE:
        log_target = _laplace_log_marginal(X, targets)
    else:
        log_target = _gaussian_log_marginal(X, targets)

    beta0 = rng.random(order + 1)
    kept, kept_accepted, acc_rate, final_a = _mh_chain(log_target, beta0, config, rng)

    resid = targets[None, :] - kept @ X.T
    if family is ErrorFamily.LAPLACE:
        s = 0.5 * np.abs(resid).sum(axis=1)
        if np.any(s <= 0.0):
            raise DegenerateDataError("retained draw with zero residual sum")
        tau = s / rng.gamma(shape=float(n), scale=1.0, size=s.size)
    else:
        rss = (resid * resid).sum(axis=1)
        if np.any(rss <= 0.0):
            raise DegenerateDataError("retained draw with zero residual sum of squares")
        tau = np.sqrt(0.5 * rss / rng.gamma(shape=0.5 * n, scale=1.0, size=rss.size))

    draws = PosteriorDraws(
        beta_draws=kept,
        tau_draws=tau,
        acceptance_rate=acc_rate,
        step_size=final_a,
        order=order,
        n_total=config.n_total,
        n_burn=config.n_burn,
    )
    if trace_path is not None:
        _write_trace(Path(trace_path), draws, kept_accepted)
    return draws


def posterior_mean(draws: PosteriorDraws) -> Coefficients:
    """Componentwise mean of the retained beta draws (the Bayes estimate)."""
    if draws.n_kept < 1:
        raise ValueError("no retained draws")
    return Coefficients(beta=draws.beta_draws.mean(axis=0), order=draws.order)


def _write_trace(path: Path, draws: PosteriorDraws, accepted: np.ndarray) -> None:
    header = ["iter"] + [f"beta_{j}" for j in range(draws.order + 1)] + ["tau", "accepted"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(draws.n_kept):
            row = [draws.n_burn + k + 1]
            row.extend(repr(v) for v in draws.beta_draws[k])
            row.append(repr(float(draws.tau_draws[k])))
            row.append(int(accepted[k]))
            writer.writerow(row)
