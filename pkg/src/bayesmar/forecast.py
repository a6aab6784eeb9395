"""Predictive path sampling, credible intervals, BMA mixing, and level rebuild.

Each retained posterior draw (beta_i, tau_i) seeds one simulated future path:
the next value is drawn from the error distribution centered at the linear
predictor, appended to the lag window, and the recursion continues to the
requested horizon.  Point forecasts and equal-tailed intervals are read off
the per-horizon sample columns; mixing across orders keeps the path-matrix
representation by resampling pooled paths with the model weights.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import ErrorFamily, PosteriorDraws, TimeSeries, as_seed_tuple
from .mcmc import McmcConfig, run_mh
from .order_select import OrderEnsemble, build_ensemble

__all__ = [
    "ForecastResult",
    "sample_paths",
    "point_forecast",
    "credible_interval",
    "result_from_paths",
    "bma_forecast",
    "forecast_levels",
    "per_order_forecasts",
    "fit_and_forecast",
    "PipelineForecast",
    "forecast_to_json",
    "paths_to_csv",
]

SCALE_DIFFERENCED = "differenced"
SCALE_LEVEL = "level"


@dataclass(frozen=True)
class ForecastResult:
    """Per-horizon point forecasts, predictive sample paths, and intervals."""

    horizons: int
    point: np.ndarray
    paths: np.ndarray
    intervals: np.ndarray
    interval_level: float
    scale_note: str

    def __post_init__(self) -> None:
        if self.scale_note not in (SCALE_DIFFERENCED, SCALE_LEVEL):
            raise ValueError(f"unknown scale_note {self.scale_note!r}")
        if self.paths.ndim != 2 or self.paths.shape[1] != self.horizons:
            raise ValueError("paths must be (n_paths, horizons)")
        if self.point.shape != (self.horizons,):
            raise ValueError("point must have one entry per horizon")
        if self.intervals.shape != (self.horizons, 2):
            raise ValueError("intervals must be (horizons, 2)")
        if np.any(self.intervals[:, 0] > self.intervals[:, 1]):
            raise ValueError("interval lower bounds must not exceed uppers")

    @property
    def n_paths(self) -> int:
        return int(self.paths.shape[0])


def sample_paths(
    y: TimeSeries,
    draws: PosteriorDraws,
    horizon: int,
    family: ErrorFamily,
    seed: int | Sequence[int],
    thin: int = 1,
) -> np.ndarray:
    """One simulated future path per retained draw; returns (n_paths, horizon).

    Paths iterate the AR recursion forward from the last observed lags, feeding
    each sampled value back in as a lag.  Laplace scales are 2 * tau (the
    standard Laplace scale matching the error density); Gaussian scales are
    sigma.  ``thin`` keeps every thin-th draw.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if thin < 1:
        raise ValueError("thin must be at least 1")
    p = draws.order
    if len(y) < p:
        raise ValueError(f"series shorter than order {p}")
    beta = draws.beta_draws[::thin]
    tau = draws.tau_draws[::thin]
    m = beta.shape[0]
    rng = np.random.default_rng(as_seed_tuple(seed))

    # lags[:, j] holds y_{t-j-1} for the value about to be drawn
    lags = np.tile(y.values[-1 : -p - 1 : -1], (m, 1))
    paths = np.empty((m, horizon))
    for h in range(horizon):
        location = beta[:, 0] + np.einsum("ij,ij->i", beta[:, 1:], lags)
        if family is ErrorFamily.LAPLACE:
            draws_h = rng.laplace(location, 2.0 * tau)
        else:
            draws_h = rng.normal(location, tau)
        paths[:, h] = draws_h
        if p > 1:
            lags = np.column_stack([draws_h, lags[:, :-1]])
        else:
            lags = draws_h[:, None]
    return paths


def point_forecast(paths: np.ndarray, statistic: str = "mean") -> np.ndarray:
    """Per-horizon summary of the path samples (predictive mean by default)."""
    paths = np.asarray(paths, dtype=float)
    if paths.size == 0:
        raise ValueError("paths must be non-empty")
    if statistic == "mean":
        return paths.mean(axis=0)
    if statistic == "median":
        return np.median(paths, axis=0)
    raise ValueError(f"unknown point statistic {statistic!r}")


def credible_interval(paths: np.ndarray, level: float) -> np.ndarray:
    """Equal-tailed per-horizon interval, linearly interpolated quantiles."""
    paths = np.asarray(paths, dtype=float)
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if paths.shape[0] < 2:
        raise ValueError("need at least 2 paths for an interval")
    alpha = (1.0 - level) / 2.0
    qs = np.quantile(paths, [alpha, 1.0 - alpha], axis=0, method="linear")
    return qs.T


def result_from_paths(
    paths: np.ndarray,
    interval_level: float,
    scale_note: str,
    statistic: str = "mean",
) -> ForecastResult:
    """Assemble a ForecastResult by summarizing a path matrix."""
    paths = np.asarray(paths, dtype=float)
    return ForecastResult(
        horizons=paths.shape[1],
        point=point_forecast(paths, statistic),
        paths=paths,
        intervals=credible_interval(paths, interval_level),
        interval_level=interval_level,
        scale_note=scale_note,
    )


def bma_forecast(
    per_order_results: Sequence[ForecastResult],
    weights: np.ndarray,
    seed: int | Sequence[int],
) -> ForecastResult:
    """Mix per-order forecasts with model weights.

    The point forecast is the exact weighted sum of the per-order points.  The
    mixture density is represented by resampling the pooled paths: each order
    contributes floor(weight * n_paths) paths deterministically and the
    leftover slots are drawn from the fractional remainders (residual
    resampling), which keeps the mixing noise small.  Intervals are recomputed
    from the mixed paths.
    """
    if len(per_order_results) == 0:
        raise ValueError("need at least one forecast to mix")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(per_order_results),):
        raise ValueError("one weight per forecast required")
    if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    first = per_order_results[0]
    for r in per_order_results[1:]:
        if r.horizons != first.horizons:
            raise ValueError("mismatched horizons across forecasts")
        if r.n_paths != first.n_paths:
            raise ValueError("mismatched path counts across forecasts")
        if r.scale_note != first.scale_note or r.interval_level != first.interval_level:
            raise ValueError("forecasts must share scale and interval level")

    point = np.zeros(first.horizons)
    for w, r in zip(weights, per_order_results):
        point += w * r.point

    n_paths = first.n_paths
    raw = weights / weights.sum() * n_paths
    counts = np.floor(raw).astype(int)
    leftover = n_paths - int(counts.sum())
    rng = np.random.default_rng(as_seed_tuple(seed))
    if leftover > 0:
        frac = raw - counts
        total = frac.sum()
        probs = frac / total if total > 0 else weights / weights.sum()
        counts += rng.multinomial(leftover, probs)

    blocks = []
    for count, r in zip(counts, per_order_results):
        if count > 0:
            rows = rng.integers(0, r.n_paths, size=count)
            blocks.append(r.paths[rows])
    mixed = np.vstack(blocks)

    return ForecastResult(
        horizons=first.horizons,
        point=point,
        paths=mixed,
        intervals=credible_interval(mixed, first.interval_level),
        interval_level=first.interval_level,
        scale_note=first.scale_note,
    )


def forecast_levels(
    diff_result: ForecastResult,
    last_level: float,
    statistic: str = "mean",
) -> ForecastResult:
    """Rebuild level-scale forecasts from change-scale ones.

    Every path is cumulatively summed and shifted by the last observed level;
    points and intervals are recomputed from the level paths.
    """
    if diff_result.scale_note != SCALE_DIFFERENCED:
        raise ValueError("input forecast is not on the differenced scale")
    level_paths = last_level + np.cumsum(diff_result.paths, axis=1)
    return result_from_paths(
        level_paths, diff_result.interval_level, SCALE_LEVEL, statistic
    )


def per_order_forecasts(
    y: TimeSeries,
    family: ErrorFamily,
    orders: Sequence[int],
    horizon: int,
    config: McmcConfig,
    interval_level: float,
    scale_note: str,
    seed_base: Sequence[int],
    statistic: str = "mean",
    thin: int = 1,
) -> dict[int, ForecastResult]:
    """Run the sampler and path simulation for each requested order.

    Seeds derive from (seed_base..., order) for the chain and
    (seed_base..., order, 1) for the path noise, so results for one order do
    not depend on which other orders are requested.
    """
    results: dict[int, ForecastResult] = {}
    base = tuple(seed_base)
    for p in sorted(set(int(o) for o in orders)):
        cfg = replace(config, seed=base + (p,))
        draws = run_mh(y, p, family, cfg)
        paths = sample_paths(y, draws, horizon, family, seed=base + (p, 1), thin=thin)
        results[p] = result_from_paths(paths, interval_level, scale_note, statistic)
    return results


@dataclass(frozen=True)
class PipelineForecast:
    """Forecast produced by the order-selection pipeline, with its ensemble."""

    result: ForecastResult
    ensemble: OrderEnsemble | None
    per_order: Mapping[int, ForecastResult]


def fit_and_forecast(
    y: TimeSeries,
    family: ErrorFamily,
    horizon: int,
    order_rule: str,
    max_order: int,
    config: McmcConfig,
    interval_level: float = 0.95,
    fixed_order: int | None = None,
    scale_note: str = SCALE_LEVEL,
    statistic: str = "mean",
    thin: int = 1,
    seed: int | Sequence[int] | None = None,
) -> PipelineForecast:
    """Order selection plus forecasting for a single series.

    ``order_rule`` is "bma" (mix all orders 1..max_order by BIC weight),
    "map" (forecast the minimum-BIC order only), or "fixed" (no selection,
    use ``fixed_order``).
    """
    base = as_seed_tuple(config.seed if seed is None else seed)
    if order_rule == "fixed":
        if fixed_order is None:
            raise ValueError("order_rule 'fixed' requires fixed_order")
        ensemble = None
        orders: Sequence[int] = [fixed_order]
    elif order_rule in ("bma", "map"):
        ensemble = build_ensemble(y, max_order, family)
        orders = range(1, max_order + 1) if order_rule == "bma" else [ensemble.map_order]
    else:
        raise ValueError(f"unknown order_rule {order_rule!r}")

    by_order = per_order_forecasts(
        y, family, orders, horizon, config, interval_level, scale_note, base,
        statistic=statistic, thin=thin,
    )
    if order_rule == "bma":
        assert ensemble is not None
        result = bma_forecast(
            [by_order[p] for p in range(1, max_order + 1)],
            ensemble.weights,
            seed=base + (0, 2),
        )
    elif order_rule == "map":
        assert ensemble is not None
        result = by_order[ensemble.map_order]
    else:
        result = by_order[orders[0]]
    return PipelineForecast(result=result, ensemble=ensemble, per_order=by_order)


def forecast_to_json(result: ForecastResult) -> list[dict[str, float]]:
    """Per-horizon `{horizon, point, lower, upper}` records."""
    return [
        {
            "horizon": h + 1,
            "point": float(result.point[h]),
            "lower": float(result.intervals[h, 0]),
            "upper": float(result.intervals[h, 1]),
        }
        for h in range(result.horizons)
    ]


def paths_to_csv(result: ForecastResult, path: str | Path) -> None:
    """Raw predictive paths as `path_id, h1..hH` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id"] + [f"h{h + 1}" for h in range(result.horizons)])
        for i, row in enumerate(result.paths):
            writer.writerow([i] + [repr(float(v)) for v in row])
