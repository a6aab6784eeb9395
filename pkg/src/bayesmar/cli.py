"""Command-line front end: CSV ingestion and subcommands over the library.

Subcommands are thin adapters: they parse flags, validate configuration,
delegate to the library, and write self-describing JSON/CSV artifacts (every
output embeds the statistical configuration and the seed, so a table can be
reproduced from its own header).  Exit codes: 0 success, 2 configuration
error, 3 data error, 4 numeric or degeneracy error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .core import DegenerateDataError, ErrorFamily, TimeSeries, diff1
from .forecast import (
    SCALE_DIFFERENCED,
    SCALE_LEVEL,
    fit_and_forecast,
    forecast_levels,
    forecast_to_json,
    paths_to_csv,
)
from .harness import (
    BacktestSpec,
    MethodSpec,
    SimStudyConfig,
    run_backtest,
    run_mse_study,
    run_order_study,
)
from .mcmc import McmcConfig, posterior_mean, run_mh
from .order_select import build_ensemble, ensemble_to_csv

__all__ = ["CsvParseError", "read_series_csv", "build_parser", "main", "entrypoint"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class CsvParseError(ValueError):
    """Malformed series CSV; the message cites the offending row."""


def _parse_value(text: str, row: int) -> float:
    text = text.strip()
    if not text:
        raise CsvParseError(f"row {row}: missing value")
    try:
        value = float(text)
    except ValueError:
        raise CsvParseError(f"row {row}: non-numeric value {text!r}") from None
    if not math.isfinite(value):
        raise CsvParseError(f"row {row}: non-finite value {text!r}")
    return value


def read_series_csv(path: str | Path) -> TimeSeries:
    """Read a series from CSV.

    Accepted layouts: header ``period,value`` with one labeled observation per
    row, header ``value`` with one column, or a headerless single numeric
    column.  Rows are parsed in order; any missing or non-numeric value fails
    with its 1-based row number.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvParseError("empty file")

    first = [c.strip().lower() for c in rows[0]]
    if first == ["period", "value"]:
        labeled, data_rows, offset = True, rows[1:], 2
    elif first == ["value"]:
        labeled, data_rows, offset = False, rows[1:], 2
    else:
        if len(rows[0]) != 1:
            raise CsvParseError(
                "row 1: expected header 'period,value', header 'value', or a single numeric column"
            )
        _parse_value(rows[0][0], 1)
        labeled, data_rows, offset = False, rows, 1

    values: list[float] = []
    labels: list[str] = []
    for i, row in enumerate(data_rows):
        rownum = i + offset
        if labeled:
            if len(row) != 2:
                raise CsvParseError(f"row {rownum}: expected 'period,value', got {row!r}")
            labels.append(row[0].strip())
            values.append(_parse_value(row[1], rownum))
        else:
            if len(row) != 1:
                raise CsvParseError(f"row {rownum}: expected a single value, got {row!r}")
            values.append(_parse_value(row[0], rownum))
    if not values:
        raise CsvParseError("no data rows")
    return TimeSeries(np.array(values), labels=tuple(labels) if labeled else None)


def _family(name: str) -> ErrorFamily:
    return ErrorFamily(name)


def _echo(ns: argparse.Namespace, keys: tuple[str, ...]) -> dict:
    # The echo captures the statistical configuration; output paths are omitted
    # so reruns into different directories stay byte-identical.
    return {k: getattr(ns, k) for k in keys}


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _out_dir(ns: argparse.Namespace) -> Path:
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_methods(spec: str) -> tuple[MethodSpec, ...]:
    known_families = {"mar": ErrorFamily.LAPLACE, "ar": ErrorFamily.GAUSSIAN}
    methods: list[MethodSpec] = []
    for token in (t.strip().lower() for t in spec.split(",")):
        if not token:
            continue
        fam_key, _, rule = token.partition("-")
        if fam_key not in known_families or not rule:
            raise ValueError(f"unknown method token {token!r}")
        family = known_families[fam_key]
        if rule in ("bma", "map"):
            methods.append(MethodSpec(family, rule))
        elif rule.startswith("fixed:"):
            methods.append(MethodSpec(family, "fixed", fixed_order=int(rule.split(":", 1)[1])))
        else:
            raise ValueError(f"unknown method token {token!r}")
    if not methods:
        raise ValueError("no methods given")
    return tuple(methods)


def _resolve_t0(token: str, series: TimeSeries) -> int:
    try:
        return int(token)
    except ValueError:
        pass
    if series.labels is None:
        raise ValueError(f"t0 label {token!r} given but the input CSV has no period column")
    try:
        return series.labels.index(token) + 1
    except ValueError:
        raise ValueError(f"t0 label {token!r} not found in the input periods") from None


def _cmd_fit(ns: argparse.Namespace) -> int:
    series = read_series_csv(ns.input)
    if ns.diff:
        series = diff1(series)
    out = _out_dir(ns)
    config = McmcConfig(n_total=ns.n_total, n_burn=ns.n_burn, initial_step=ns.step, seed=ns.seed)
    trace = out / "trace.csv" if ns.trace else None
    draws = run_mh(series, ns.order, _family(ns.family), config, trace_path=trace)
    mean = posterior_mean(draws)
    payload = {
        "config": _echo(ns, ("input", "order", "family", "diff", "n_total", "n_burn", "step")),
        "seed": ns.seed,
        "order": draws.order,
        "posterior_mean": [float(b) for b in mean.beta],
        "scale_posterior_mean": float(draws.tau_draws.mean()),
        "acceptance_rate": draws.acceptance_rate,
        "step_size": draws.step_size,
        "n_kept": draws.n_kept,
    }
    path = out / "fit.json"
    _write_json(path, payload)
    print(path)
    if trace is not None:
        print(trace)
    return EXIT_OK


def _cmd_forecast(ns: argparse.Namespace) -> int:
    series = read_series_csv(ns.input)
    apply_diff = not ns.no_diff
    work = diff1(series) if apply_diff else series
    out = _out_dir(ns)
    config = McmcConfig(n_total=ns.n_total, n_burn=ns.n_burn, seed=ns.seed)
    pipe = fit_and_forecast(
        work,
        _family(ns.family),
        ns.horizon,
        ns.order_rule,
        ns.max_order,
        config,
        interval_level=ns.level,
        fixed_order=ns.order,
        scale_note=SCALE_DIFFERENCED if apply_diff else SCALE_LEVEL,
        statistic=ns.point_statistic,
        thin=ns.thin,
    )
    result = forecast_levels(pipe.result, float(series.values[-1]), ns.point_statistic) if apply_diff else pipe.result
    payload = {
        "config": _echo(
            ns,
            ("input", "family", "order_rule", "order", "max_order", "horizon",
             "level", "no_diff", "n_total", "n_burn", "thin", "point_statistic"),
        ),
        "seed": ns.seed,
        "horizons": forecast_to_json(result),
    }
    path = out / "forecast.json"
    _write_json(path, payload)
    print(path)
    if ns.paths_csv:
        ppath = out / "forecast_paths.csv"
        paths_to_csv(result, ppath)
        print(ppath)
    return EXIT_OK


def _cmd_select_order(ns: argparse.Namespace) -> int:
    series = read_series_csv(ns.input)
    if ns.diff:
        series = diff1(series)
    out = _out_dir(ns)
    ensemble = build_ensemble(series, ns.max_order, _family(ns.family))
    header = (
        f"config: {json.dumps(_echo(ns, ('input', 'family', 'max_order', 'diff')), sort_keys=True)}",
        f"map_order: {ensemble.map_order}",
    )
    path = out / "ensemble.csv"
    ensemble_to_csv(ensemble, path, header_lines=header)
    print(path)
    return EXIT_OK


def _cmd_backtest(ns: argparse.Namespace) -> int:
    series = read_series_csv(ns.input)
    t0 = _resolve_t0(ns.t0, series)
    methods = _parse_methods(ns.methods)
    if ns.paper_fidelity:
        mcmc = McmcConfig(n_total=40_000, n_burn=25_000, seed=ns.seed)
    else:
        mcmc = McmcConfig(n_total=ns.n_total, n_burn=ns.n_burn, seed=ns.seed)
    spec = BacktestSpec(
        series=series,
        t0=t0,
        horizons=ns.horizon,
        methods=methods,
        mcmc=mcmc,
        max_order=ns.max_order,
        interval_level=ns.level,
        seed=ns.seed,
        apply_diff=not ns.no_diff,
        baseline=ns.baseline,
        thin=ns.thin,
    )
    report = run_backtest(spec, n_jobs=ns.threads)
    out = _out_dir(ns)
    metrics_path = out / "backtest_metrics.csv"
    origins_path = out / "backtest_origins.csv"
    report.to_metric_csv(metrics_path)
    report.to_long_csv(origins_path)
    print(metrics_path)
    print(origins_path)
    return EXIT_OK


def _cmd_simulate(ns: argparse.Namespace) -> int:
    families = (
        [ErrorFamily.LAPLACE, ErrorFamily.GAUSSIAN]
        if ns.error == "both"
        else [_family(ns.error)]
    )
    out = _out_dir(ns)
    echo = json.dumps(
        _echo(ns, ("preset", "error", "replications", "length", "max_order",
                   "n_total", "n_burn", "seed")),
        sort_keys=True,
    )
    for family in families:
        config = SimStudyConfig(
            error=family,
            series_length=ns.length,
            replications=ns.replications,
            max_order=ns.max_order,
            seed=ns.seed,
            mcmc=McmcConfig(n_total=ns.n_total, n_burn=ns.n_burn, seed=ns.seed),
        )
        if ns.preset == "table1":
            report = run_mse_study(config, n_jobs=ns.threads)
            path = out / f"table1_{family.value}.csv"
            report.to_csv(path, header_lines=(f"config: {echo}", f"noise: {family.value}"))
        else:
            report = run_order_study(config, n_jobs=ns.threads)
            path = out / f"orders_{family.value}.csv"
            report.to_csv(
                path,
                header_lines=(
                    f"config: {echo}",
                    f"noise: {family.value}",
                    f"accuracy_at_true_order: {report.accuracy}",
                ),
            )
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayesmar",
        description="Median autoregression forecasting: fit, order selection, "
        "forecasting, backtesting, and simulation studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=0, help="master RNG seed")
        p.add_argument("--out", default=".", help="output directory")

    p_fit = sub.add_parser("fit", help="sample the posterior at a fixed order")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--order", type=int, required=True)
    p_fit.add_argument("--family", choices=["laplace", "gaussian"], default="laplace")
    p_fit.add_argument("--diff", action="store_true", help="model lag-1 changes")
    p_fit.add_argument("--n-total", dest="n_total", type=int, default=40_000)
    p_fit.add_argument("--n-burn", dest="n_burn", type=int, default=25_000)
    p_fit.add_argument("--step", type=float, default=1.0, help="initial proposal step size")
    p_fit.add_argument("--trace", action="store_true", help="export retained draws as CSV")
    add_common(p_fit)
    p_fit.set_defaults(handler=_cmd_fit)

    p_fc = sub.add_parser("forecast", help="point and density forecasts")
    p_fc.add_argument("--input", required=True)
    p_fc.add_argument("--family", choices=["laplace", "gaussian"], default="laplace")
    p_fc.add_argument("--order-rule", dest="order_rule", choices=["bma", "map", "fixed"], default="bma")
    p_fc.add_argument("--order", type=int, default=None, help="order for --order-rule fixed")
    p_fc.add_argument("--k", dest="max_order", type=int, default=8, help="maximum candidate order")
    p_fc.add_argument("--h", dest="horizon", type=int, default=4)
    p_fc.add_argument("--level", type=float, default=0.95)
    p_fc.add_argument("--no-diff", dest="no_diff", action="store_true",
                      help="forecast the series itself instead of lag-1 changes")
    p_fc.add_argument("--n-total", dest="n_total", type=int, default=8000)
    p_fc.add_argument("--n-burn", dest="n_burn", type=int, default=4000)
    p_fc.add_argument("--thin", type=int, default=1)
    p_fc.add_argument("--point-statistic", dest="point_statistic",
                      choices=["mean", "median"], default="mean")
    p_fc.add_argument("--paths-csv", dest="paths_csv", action="store_true",
                      help="also export raw predictive paths")
    add_common(p_fc)
    p_fc.set_defaults(handler=_cmd_forecast)

    p_sel = sub.add_parser("select-order", help="BIC table and model weights")
    p_sel.add_argument("--input", required=True)
    p_sel.add_argument("--family", choices=["laplace", "gaussian"], default="laplace")
    p_sel.add_argument("--k", dest="max_order", type=int, default=8)
    p_sel.add_argument("--diff", action="store_true", help="select on lag-1 changes")
    add_common(p_sel)
    p_sel.set_defaults(handler=_cmd_select_order)

    p_bt = sub.add_parser("backtest", help="recursive out-of-sample evaluation")
    p_bt.add_argument("--input", required=True)
    p_bt.add_argument("--t0", required=True,
                      help="first forecast target: a period label or 1-based index")
    p_bt.add_argument("--h", dest="horizon", type=int, default=4)
    p_bt.add_argument("--k", dest="max_order", type=int, default=8)
    p_bt.add_argument("--methods", default="mar-bma,mar-map,ar-bma,ar-map",
                      help="comma list of mar-bma|mar-map|mar-fixed:P|ar-bma|ar-map|ar-fixed:P")
    p_bt.add_argument("--level", type=float, default=0.95)
    p_bt.add_argument("--n-total", dest="n_total", type=int, default=8000)
    p_bt.add_argument("--n-burn", dest="n_burn", type=int, default=4000)
    p_bt.add_argument("--paper-fidelity", dest="paper_fidelity", action="store_true",
                      help="use the full 40000/25000 sampling budget per fit")
    p_bt.add_argument("--no-diff", dest="no_diff", action="store_true")
    p_bt.add_argument("--baseline", default=None, help="method name for relative changes")
    p_bt.add_argument("--thin", type=int, default=1)
    p_bt.add_argument("--threads", type=int, default=1, help="worker processes")
    add_common(p_bt)
    p_bt.set_defaults(handler=_cmd_backtest)

    p_sim = sub.add_parser("simulate", help="replicated simulation studies")
    p_sim.add_argument("--preset", choices=["table1", "orders"], required=True)
    p_sim.add_argument("--error", choices=["laplace", "gaussian", "both"], default="both")
    p_sim.add_argument("--replications", type=int, default=100)
    p_sim.add_argument("--length", type=int, default=200)
    p_sim.add_argument("--k", dest="max_order", type=int, default=20)
    p_sim.add_argument("--n-total", dest="n_total", type=int, default=40_000)
    p_sim.add_argument("--n-burn", dest="n_burn", type=int, default=25_000)
    p_sim.add_argument("--threads", type=int, default=1)
    add_common(p_sim)
    p_sim.set_defaults(handler=_cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.handler(ns)
    except CsvParseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateDataError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RuntimeError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    raise SystemExit(main())
