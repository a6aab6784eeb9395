"""Experimental protocols: simulation studies and recursive backtesting.

The simulation study generates AR(2) data with Gaussian or Laplace noise,
re-estimates the coefficients by several fitters over many replications, and
reports per-coefficient mean squared errors with their standard errors.  The
order study repeats the generation and records the BIC-selected order.

The backtest walks a series of levels forward one period at a time: at each
origin t it differences the history up to t, fits every configured method on
the changes, simulates predictive paths out to the horizon, rebuilds levels,
and scores the point and density forecasts against the realized values.  All
randomness derives from one master seed via per-unit seed tuples, so runs are
reproducible and independent of evaluation order.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.signal import lfilter

from .core import (
    Coefficients,
    ErrorFamily,
    TimeSeries,
    as_seed_tuple,
)
from .forecast import (
    SCALE_DIFFERENCED,
    SCALE_LEVEL,
    ForecastResult,
    bma_forecast,
    forecast_levels,
    per_order_forecasts,
)
from .mcmc import McmcConfig, posterior_mean, run_mh
from .mle_fit import fit_l1, fit_ols
from .order_select import build_ensemble
from .scoring import MetricTable, crps_sample, mae, rmse

__all__ = [
    "SimStudyConfig",
    "simulate_series",
    "MseStudyReport",
    "run_mse_study",
    "OrderStudyReport",
    "run_order_study",
    "MethodSpec",
    "BacktestSpec",
    "BacktestReport",
    "run_backtest",
]

_DEFAULT_TRUE_BETA = (0.3, 0.75, -0.35)


@dataclass(frozen=True)
class SimStudyConfig:
    """Design of the replicated AR(2) estimation experiment."""

    true_beta: Coefficients = field(
        default_factory=lambda: Coefficients.from_values(_DEFAULT_TRUE_BETA)
    )
    error: ErrorFamily = ErrorFamily.LAPLACE
    series_length: int = 200
    replications: int = 100
    max_order: int = 20
    seed: int = 0
    # The replicated studies generate from zero initial lags (burn = 0); the
    # transient is part of the protocol being reproduced.
    burn: int = 0
    noise_scale: float = 1.0
    mcmc: McmcConfig = field(default_factory=McmcConfig)

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.series_length <= 2 * self.max_order:
            raise ValueError("series_length must exceed twice the maximum order")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")


def simulate_series(
    beta: Coefficients,
    error: ErrorFamily,
    length: int,
    burn: int = 200,
    seed: int | Sequence[int] = 0,
    scale: float = 1.0,
) -> TimeSeries:
    """Iterate the AR recursion from zero initial lags and keep the last values.

    Laplace errors use the standard scale (density exp(-|x|/scale)/(2 scale));
    Gaussian errors use the standard deviation.  ``scale`` = 0 turns the noise
    off, which makes the recursion deterministic (a test hook).
    """
    if length < 1 or burn < 0:
        raise ValueError("length must be positive and burn nonnegative")
    rng = np.random.default_rng(as_seed_tuple(seed))
    total = length + burn
    if scale == 0.0:
        eps = np.zeros(total)
    elif error is ErrorFamily.LAPLACE:
        eps = rng.laplace(0.0, scale, total)
    else:
        eps = rng.normal(0.0, scale, total)
    ar_poly = np.concatenate([[1.0], -beta.beta[1:]])
    values = lfilter([1.0], ar_poly, beta.beta[0] + eps)
    return TimeSeries(values[burn:])


@dataclass(frozen=True)
class MseStudyReport:
    """Replicated-estimation summary: per-method MSE and SE per coefficient."""

    methods: tuple[str, ...]
    true_beta: np.ndarray
    estimates: dict[str, np.ndarray]
    mse: dict[str, np.ndarray]
    se: dict[str, np.ndarray]
    acceptance_rates: np.ndarray
    config: SimStudyConfig

    def to_csv(self, path: str | Path, header_lines: tuple[str, ...] = ()) -> None:
        """Method-by-coefficient MSE/SE table, scaled by 100 like the reference layout."""
        n_coef = self.true_beta.size
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            cols = ["method"]
            for j in range(n_coef):
                cols += [f"mse_beta{j}_x100", f"se_beta{j}_x100"]
            writer.writerow(cols)
            for m in self.methods:
                row: list[str] = [m]
                for j in range(n_coef):
                    row.append(repr(float(self.mse[m][j] * 100.0)))
                    row.append(repr(float(self.se[m][j] * 100.0)))
                writer.writerow(row)


def _mse_replication(args: tuple[SimStudyConfig, int, tuple[str, ...]]):
    config, i, methods = args
    series = simulate_series(
        config.true_beta,
        config.error,
        config.series_length,
        burn=config.burn,
        seed=(config.seed, i),
        scale=config.noise_scale,
    )
    p = config.true_beta.order
    estimates: dict[str, np.ndarray] = {}
    acc = np.nan
    if "BayesMAR" in methods:
        cfg = replace(config.mcmc, seed=(config.seed, i, 1))
        draws = run_mh(series, p, ErrorFamily.LAPLACE, cfg)
        estimates["BayesMAR"] = posterior_mean(draws).beta
        acc = draws.acceptance_rate
    if "QAR" in methods:
        estimates["QAR"] = fit_l1(series, p, start=p + 1).coeff.beta
    if "AR" in methods:
        estimates["AR"] = fit_ols(series, p, start=p + 1).coeff.beta
    return i, estimates, acc


def run_mse_study(
    config: SimStudyConfig,
    methods: tuple[str, ...] = ("BayesMAR", "QAR", "AR"),
    n_jobs: int = 1,
) -> MseStudyReport:
    """Replicate simulation + estimation and summarize squared-error losses.

    Methods: "BayesMAR" (posterior mean at the true order), "QAR" (the L1
    point fit, which at the median is the same estimator quantile regression
    uses), "AR" (Gaussian least squares).
    """
    known = {"BayesMAR", "QAR", "AR"}
    if not methods or not set(methods) <= known:
        raise ValueError(f"methods must be a non-empty subset of {sorted(known)}")
    tasks = [(config, i, methods) for i in range(config.replications)]
    results = _run_units(_mse_replication, tasks, n_jobs)

    reps = config.replications
    n_coef = config.true_beta.order + 1
    estimates = {m: np.empty((reps, n_coef)) for m in methods}
    acceptance = np.full(reps, np.nan)
    for i, est, acc in results:
        for m in methods:
            estimates[m][i] = est[m]
        acceptance[i] = acc

    true = config.true_beta.beta
    mse = {}
    se = {}
    for m in methods:
        sq = (estimates[m] - true[None, :]) ** 2
        mse[m] = sq.mean(axis=0)
        se[m] = sq.std(axis=0, ddof=1) / np.sqrt(reps) if reps > 1 else np.zeros(n_coef)
    return MseStudyReport(
        methods=tuple(methods),
        true_beta=true.copy(),
        estimates=estimates,
        mse=mse,
        se=se,
        acceptance_rates=acceptance,
        config=config,
    )


@dataclass(frozen=True)
class OrderStudyReport:
    """Histogram of BIC-selected orders across replications."""

    counts: np.ndarray
    map_orders: np.ndarray
    accuracy: float
    true_order: int
    config: SimStudyConfig

    def to_csv(self, path: str | Path, header_lines: tuple[str, ...] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["order", "count"])
            for p in range(1, self.counts.size):
                writer.writerow([p, int(self.counts[p])])


def _order_replication(args: tuple[SimStudyConfig, int, ErrorFamily]):
    config, i, ensemble_family = args
    series = simulate_series(
        config.true_beta,
        config.error,
        config.series_length,
        burn=config.burn,
        seed=(config.seed, i),
        scale=config.noise_scale,
    )
    return i, build_ensemble(series, config.max_order, ensemble_family).map_order


def run_order_study(
    config: SimStudyConfig,
    ensemble_family: ErrorFamily = ErrorFamily.LAPLACE,
    n_jobs: int = 1,
) -> OrderStudyReport:
    """Record the BIC-selected order for each simulated replication."""
    tasks = [(config, i, ensemble_family) for i in range(config.replications)]
    results = _run_units(_order_replication, tasks, n_jobs)
    map_orders = np.zeros(config.replications, dtype=int)
    for i, p in results:
        map_orders[i] = p
    counts = np.bincount(map_orders, minlength=config.max_order + 1)
    true_order = config.true_beta.order
    accuracy = float(counts[true_order]) / config.replications
    return OrderStudyReport(
        counts=counts,
        map_orders=map_orders,
        accuracy=accuracy,
        true_order=true_order,
        config=config,
    )


_FAMILY_CODE = {ErrorFamily.LAPLACE: 0, ErrorFamily.GAUSSIAN: 1}
_FAMILY_LABEL = {ErrorFamily.LAPLACE: "BayesMAR", ErrorFamily.GAUSSIAN: "BayesAR"}


@dataclass(frozen=True)
class MethodSpec:
    """One backtested forecaster: an error family plus an order rule."""

    family: ErrorFamily
    order_rule: str
    fixed_order: int | None = None

    def __post_init__(self) -> None:
        if self.order_rule not in ("bma", "map", "fixed"):
            raise ValueError(f"unknown order_rule {self.order_rule!r}")
        if self.order_rule == "fixed" and (self.fixed_order is None or self.fixed_order < 1):
            raise ValueError("fixed order rule requires a positive fixed_order")

    @property
    def name(self) -> str:
        base = _FAMILY_LABEL[self.family]
        if self.order_rule == "fixed":
            return f"{base}-p{self.fixed_order}"
        return f"{base}-{self.order_rule.upper()}"


@dataclass(frozen=True)
class BacktestSpec:
    """Recursive out-of-sample forecasting protocol on a series of levels.

    ``t0`` is the 1-based index of the first forecast target: origins run from
    t0 - 1 to T - 1 and the fit at origin t sees y_1..y_t only.
    """

    series: TimeSeries
    t0: int
    horizons: int = 4
    methods: tuple[MethodSpec, ...] = (MethodSpec(ErrorFamily.LAPLACE, "bma"),)
    mcmc: McmcConfig = field(default_factory=lambda: McmcConfig(n_total=8000, n_burn=4000))
    max_order: int = 8
    interval_level: float = 0.95
    seed: int = 0
    apply_diff: bool = True
    baseline: str | None = None
    thin: int = 1

    def __post_init__(self) -> None:
        T = len(self.series)
        if self.horizons < 1:
            raise ValueError("horizons must be at least 1")
        if not self.methods:
            raise ValueError("at least one method required")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate method names: {names}")
        if self.t0 + self.horizons > T:
            raise ValueError(
                f"t0={self.t0} plus horizon {self.horizons} exceeds series length {T}"
            )
        first_window = self.t0 - 1 - (1 if self.apply_diff else 0)
        for m in self.methods:
            if m.order_rule == "fixed":
                needed = 2 * m.fixed_order + 2
            else:
                needed = 2 * self.max_order + 2
            if first_window < needed:
                raise ValueError(
                    f"t0={self.t0} leaves {first_window} usable observations at the first "
                    f"origin; method {m.name} needs at least {needed}"
                )
        if not 0.0 < self.interval_level < 1.0:
            raise ValueError("interval_level must lie in (0, 1)")
        if self.baseline is not None and self.baseline not in names:
            raise ValueError(f"baseline {self.baseline!r} not among methods {names}")

    def baseline_name(self) -> str:
        if self.baseline is not None:
            return self.baseline
        names = [m.name for m in self.methods]
        return "BayesMAR-BMA" if "BayesMAR-BMA" in names else names[0]

    def config_dict(self) -> dict:
        """Scalar configuration echo for self-describing output files."""
        return {
            "t0": self.t0,
            "horizons": self.horizons,
            "methods": [m.name for m in self.methods],
            "n_total": self.mcmc.n_total,
            "n_burn": self.mcmc.n_burn,
            "max_order": self.max_order,
            "interval_level": self.interval_level,
            "seed": self.seed,
            "apply_diff": self.apply_diff,
            "baseline": self.baseline_name(),
            "thin": self.thin,
            "series_length": len(self.series),
        }


@dataclass(frozen=True)
class BacktestReport:
    """Per-origin forecasts and errors plus the aggregated metric table.

    ``errors`` holds truth - forecast; unrealized targets (origins whose
    horizon extends past the end of the series) are NaN and excluded from the
    aggregation, whose per-horizon term counts are in ``counts``.
    """

    methods: tuple[str, ...]
    horizons: tuple[int, ...]
    origins: tuple[int, ...]
    forecasts: np.ndarray
    truths: np.ndarray
    errors: np.ndarray
    crps: np.ndarray
    counts: np.ndarray
    metrics: MetricTable
    config: dict

    def to_metric_csv(self, path: str | Path) -> None:
        header = (
            f"config: {json.dumps(self.config, sort_keys=True)}",
            f"horizon_counts: {self.counts.tolist()}",
        )
        self.metrics.to_csv(path, header_lines=header)

    def to_long_csv(self, path: str | Path) -> None:
        """Realized (origin, method, horizon) rows with forecast, truth, error, CRPS."""
        with open(path, "w", newline="") as fh:
            fh.write(f"# config: {json.dumps(self.config, sort_keys=True)}\n")
            writer = csv.writer(fh)
            writer.writerow(["origin", "method", "horizon", "forecast", "truth", "error", "crps"])
            for i, t in enumerate(self.origins):
                for mi, m in enumerate(self.methods):
                    for h in self.horizons:
                        if np.isnan(self.truths[i, h - 1]):
                            continue
                        writer.writerow(
                            [
                                t,
                                m,
                                h,
                                repr(float(self.forecasts[mi, i, h - 1])),
                                repr(float(self.truths[i, h - 1])),
                                repr(float(self.errors[mi, i, h - 1])),
                                repr(float(self.crps[mi, i, h - 1])),
                            ]
                        )


DiffForecaster = Callable[[TimeSeries, MethodSpec, int, float], ForecastResult]


def _forecast_origin(
    args: tuple[BacktestSpec, int, DiffForecaster | None]
) -> tuple[int, dict[str, tuple[np.ndarray, np.ndarray]]]:
    """Fit and forecast every method at one origin; returns points and paths scores."""
    spec, t, hook = args
    values = spec.series.values
    window = values[:t]
    if spec.apply_diff:
        work = TimeSeries(np.diff(window))
        last_level = float(window[-1])
        scale_note = SCALE_DIFFERENCED
    else:
        work = TimeSeries(window)
        scale_note = SCALE_LEVEL
    H = spec.horizons
    T = values.size

    level_results: dict[str, ForecastResult] = {}
    if hook is not None:
        for m in spec.methods:
            fc = hook(work, m, H, spec.interval_level)
            level_results[m.name] = (
                forecast_levels(fc, last_level) if spec.apply_diff else fc
            )
    else:
        families = sorted({m.family for m in spec.methods}, key=lambda f: _FAMILY_CODE[f])
        for family in families:
            fam_methods = [m for m in spec.methods if m.family is family]
            need_bma = any(m.order_rule == "bma" for m in fam_methods)
            need_map = any(m.order_rule == "map" for m in fam_methods)
            ensemble = None
            orders: set[int] = set()
            if need_bma or need_map:
                ensemble = build_ensemble(work, spec.max_order, family)
                if need_bma:
                    orders.update(range(1, spec.max_order + 1))
                else:
                    orders.add(ensemble.map_order)
            orders.update(m.fixed_order for m in fam_methods if m.order_rule == "fixed")
            seed_base = (spec.seed, t, _FAMILY_CODE[family])
            by_order = per_order_forecasts(
                work,
                family,
                sorted(orders),
                H,
                spec.mcmc,
                spec.interval_level,
                scale_note,
                seed_base,
                thin=spec.thin,
            )
            for m in fam_methods:
                if m.order_rule == "bma":
                    fc = bma_forecast(
                        [by_order[p] for p in range(1, spec.max_order + 1)],
                        ensemble.weights,
                        seed=seed_base + (0, 2),
                    )
                elif m.order_rule == "map":
                    fc = by_order[ensemble.map_order]
                else:
                    fc = by_order[m.fixed_order]
                level_results[m.name] = (
                    forecast_levels(fc, last_level) if spec.apply_diff else fc
                )

    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name, fc in level_results.items():
        crps_row = np.full(H, np.nan)
        for h in range(1, H + 1):
            if t + h <= T:
                crps_row[h - 1] = crps_sample(fc.paths[:, h - 1], float(values[t + h - 1]))
        out[name] = (fc.point.copy(), crps_row)
    return t, out


def run_backtest(
    spec: BacktestSpec,
    n_jobs: int = 1,
    diff_forecaster: DiffForecaster | None = None,
) -> BacktestReport:
    """Run the recursive backtest and aggregate RMSE, MAE, and CRPS per horizon.

    ``diff_forecaster`` replaces the fit-and-sample stage on the (differenced)
    fitting window with a caller-supplied forecaster; the protocol bookkeeping
    (windowing, level rebuild, scoring) is unchanged.  Hooked runs execute
    serially.
    """
    values = spec.series.values
    T = values.size
    origins = list(range(spec.t0 - 1, T))
    tasks = [(spec, t, diff_forecaster) for t in origins]
    if diff_forecaster is not None:
        results = [_forecast_origin(task) for task in tasks]
    else:
        results = _run_units(_forecast_origin, tasks, n_jobs)

    H = spec.horizons
    names = tuple(m.name for m in spec.methods)
    n_origins = len(origins)
    forecasts = np.full((len(names), n_origins, H), np.nan)
    crps_vals = np.full((len(names), n_origins, H), np.nan)
    truths = np.full((n_origins, H), np.nan)
    by_origin = dict(results)
    for i, t in enumerate(origins):
        per_method = by_origin[t]
        for h in range(1, H + 1):
            if t + h <= T:
                truths[i, h - 1] = values[t + h - 1]
        for mi, name in enumerate(names):
            points, crps_row = per_method[name]
            forecasts[mi, i] = points
            crps_vals[mi, i] = crps_row

    errors = truths[None, :, :] - forecasts
    realized = ~np.isnan(truths)
    counts = realized.sum(axis=0)
    errors[:, ~realized] = np.nan
    crps_vals[:, ~realized] = np.nan

    metric_values = {
        "rmse": np.empty((len(names), H)),
        "mae": np.empty((len(names), H)),
        "crps": np.empty((len(names), H)),
    }
    for mi in range(len(names)):
        for h in range(H):
            errs = errors[mi, realized[:, h], h]
            metric_values["rmse"][mi, h] = rmse(errs)
            metric_values["mae"][mi, h] = mae(errs)
            metric_values["crps"][mi, h] = float(crps_vals[mi, realized[:, h], h].mean())

    table = MetricTable(
        methods=names,
        horizons=tuple(range(1, H + 1)),
        values=metric_values,
        baseline=spec.baseline_name(),
    )
    return BacktestReport(
        methods=names,
        horizons=tuple(range(1, H + 1)),
        origins=tuple(origins),
        forecasts=forecasts,
        truths=truths,
        errors=errors,
        crps=crps_vals,
        counts=counts,
        metrics=table,
        config=spec.config_dict(),
    )


def _run_units(worker: Callable, tasks: list, n_jobs: int) -> list:
    """Run independent units serially or in a process pool; order-insensitive."""
    if n_jobs <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(worker, tasks))
