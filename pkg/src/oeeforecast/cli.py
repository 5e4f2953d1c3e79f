"""Command-line front end: every subcommand maps onto one module operation.

Configuration comes from an optional key-value file (``key = value`` lines,
keys named after PipelineConfig fields) with flag overrides on top. All
randomized stages take --seed (default 0). Error classes map to distinct
exit codes: 2 usage, 3 data/CSV, 4 numeric, 5 configuration, 1 unexpected.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import sarimax
from .decompose import components_to_csv, decompose
from .pipeline import (
    BENCHMARK_MODELS,
    DecomposedStrategy,
    PipelineConfig,
    benchmark,
    benchmark_table,
    benchmark_to_csv,
    causal_components,
    forecasts_to_csv,
)
from .selection import (
    PsoConfig,
    collinearity_prune,
    correlation_filter,
    pso_bic,
    rfe_sarimax,
    variance_filter,
    write_manifest,
)
from .series import CsvError, load_csv, summary_stats
from .stat_features import extract_stat_features
from .tda.extract import TdaParams, extract_tda_features

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_CONFIG = 5


class ConfigError(ValueError):
    pass


def coerce_config_value(key: str, value: str):
    """Parse a key-value config entry into the PipelineConfig field type."""
    if key in ("dataset", "value_column", "feature_mode", "selection_mode"):
        return value
    if key == "timestamp_column":
        return value or None
    if key == "periods":
        return tuple(int(v) for v in value.split(","))
    if key in ("window", "horizon", "refit_interval", "seed"):
        return int(value)
    if key == "test_fraction":
        return float(value)
    if key == "clamp":
        lo, hi = value.split(",")
        return (float(lo), float(hi))
    if key == "sarimax_spec":
        parts = [int(v) for v in value.split(",")]
        if len(parts) != 7:
            raise ConfigError(f"sarimax_spec needs p,d,q,P,D,Q,s — got {value!r}")
        p, d, q, sp, sd, sq, s = parts
        return sarimax.SarimaxSpec(p=p, d=d, q=q, P=sp, D=sd, Q=sq, s=s)
    raise ConfigError(f"unknown config key {key!r}")


def read_config_file(path) -> dict:
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = coerce_config_value(key, value)
    return values


def build_config(args) -> PipelineConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in (
        "dataset",
        "value_column",
        "timestamp_column",
        "periods",
        "window",
        "horizon",
        "test_fraction",
        "feature_mode",
        "selection_mode",
        "refit_interval",
        "seed",
    ):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = coerce_config_value(key, str(flag)) if isinstance(flag, str) else flag
    if getattr(args, "spec", None):
        values["sarimax_spec"] = coerce_config_value("sarimax_spec", args.spec)
    if "dataset" not in values or not values["dataset"]:
        raise ConfigError("no dataset given (use --input or a config file with 'dataset = ...')")
    try:
        return PipelineConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _load(cfg: PipelineConfig):
    return load_csv(
        cfg.dataset,
        cfg.value_column,
        timestamp_column=cfg.timestamp_column,
        name=os.path.basename(str(cfg.dataset)),
    )


def cmd_stats(args) -> int:
    cfg = build_config(args)
    s = summary_stats(_load(cfg))
    print(f"count    {s.count}")
    print(f"mean     {s.mean:.2f}")
    print(f"std_dev  {s.std_dev:.2f}")
    print(f"min      {s.min:.2f}")
    print(f"q25      {s.q25:.2f}")
    print(f"median   {s.median:.2f}")
    print(f"q75      {s.q75:.2f}")
    print(f"max      {s.max:.2f}")
    if s.moments_degenerate:
        print("skewness undefined (zero variance)")
        print("kurtosis undefined (zero variance)")
    else:
        print(f"skewness {s.skewness:.2f}")
        print(f"kurtosis {s.kurtosis:.2f}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    cfg = build_config(args)
    d = decompose(_load(cfg), cfg.periods)
    components_to_csv(d, args.output)
    resid_std = float(np.std(d.residual.values))
    print(f"wrote {args.output} (periods {','.join(map(str, cfg.periods))}, residual std {resid_std:.3f})")
    return EXIT_OK


def cmd_features(args) -> int:
    cfg = build_config(args)
    series = _load(cfg)
    _, _, residual = causal_components(series, cfg.periods)
    if cfg.feature_mode in ("statistical", "both"):
        fm = extract_stat_features(residual, cfg.window)
        if cfg.feature_mode == "both":
            fm = fm.hstack(extract_tda_features(residual, TdaParams(window=cfg.window)))
    elif cfg.feature_mode == "topological":
        fm = extract_tda_features(residual, TdaParams(window=cfg.window))
    else:
        raise ConfigError("features needs --feature-mode statistical|topological|both")
    fm.to_csv(args.output)
    print(f"wrote {args.output}: {fm.n_rows} rows x {fm.n_cols} columns")
    return EXIT_OK


def cmd_select(args) -> int:
    cfg = build_config(args)
    series = _load(cfg)
    split = int(len(series) * (1 - cfg.test_fraction))
    _, _, residual = causal_components(series.slice(0, split), cfg.periods)
    if cfg.feature_mode == "topological":
        fm = extract_tda_features(residual, TdaParams(window=cfg.window))
    else:
        fm = extract_stat_features(residual, cfg.window)
    w = cfg.window
    r = residual.values
    from .series import TimeSeries

    y = TimeSeries(r[w:])
    fm = fm.select_rows([i for i, j in enumerate(fm.row_index) if j <= len(r) - 2])

    reports = []
    fm, rep = variance_filter(fm)
    reports.append(rep)
    fm, rep = correlation_filter(fm, y.values)
    reports.append(rep)
    fm, rep = collinearity_prune(fm)
    reports.append(rep)
    pso_result = None
    if cfg.selection_mode in ("rfe", "rfe+pso"):
        fm, rep = rfe_sarimax(y, fm, cfg.sarimax_spec)
        reports.append(rep)
    if cfg.selection_mode == "rfe+pso" and fm.n_cols > 1:
        pso_result = pso_bic(y, fm, cfg.sarimax_spec, replace(PsoConfig(), seed=cfg.seed))
        fm = fm.select_columns(pso_result.best_subset or fm.column_names)
    write_manifest(args.output, fm.column_names, reports, pso_result)
    print(f"wrote {args.output}: {fm.n_cols} columns selected")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = build_config(args)
    series = _load(cfg)
    _, _, residual = causal_components(series, cfg.periods)
    fit = sarimax.fit(residual, cfg.sarimax_spec, seed=cfg.seed)
    doc = fit.to_json()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(doc)
        print(f"wrote {args.output}")
    else:
        print(doc)
    return EXIT_OK


def cmd_forecast(args) -> int:
    cfg = build_config(args)
    series = _load(cfg)
    strategy = DecomposedStrategy(cfg)
    strategy.refit(series)
    values = strategy.forecast(series, cfg.horizon)
    for h, v in enumerate(values, start=1):
        print(f"{h} {v:.4f}")
    if args.output:
        import csv as _csv

        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["step", "forecast"])
            for h, v in enumerate(values, start=1):
                w.writerow([h, repr(float(v))])
        print(f"wrote {args.output}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = build_config(args)
    models = tuple(args.models.split(",")) if args.models else BENCHMARK_MODELS
    reports = benchmark(cfg, models=models)
    print(benchmark_table(reports))
    if args.output:
        benchmark_to_csv(reports, args.output)
        print(f"wrote {args.output}")
    if args.json_output:
        with open(args.json_output, "w", encoding="utf-8") as fh:
            fh.write("[" + ",\n".join(r.to_json() for r in reports) + "]")
        print(f"wrote {args.json_output}")
    if args.forecasts_dir:
        os.makedirs(args.forecasts_dir, exist_ok=True)
        for r in reports:
            forecasts_to_csv(r, os.path.join(args.forecasts_dir, f"{r.model_label}.csv"))
        print(f"wrote per-model forecasts under {args.forecasts_dir}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import load_registry, serve

    registry_path = args.registry or os.environ.get("OEEFORECAST_REGISTRY")
    if not registry_path:
        raise ConfigError("no registry (use --registry or OEEFORECAST_REGISTRY)")
    port = args.port if args.port is not None else int(os.environ.get("OEEFORECAST_PORT", "8080"))
    registry = load_registry(registry_path)
    server = serve(registry, port)
    print(f"serving {len(registry.entries)} equipment ids on port {server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def _add_io_flags(p, output=False):
    p.add_argument("--input", dest="dataset", help="CSV dataset path")
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--column", dest="value_column", default=None, help="value column name")
    p.add_argument("--timestamp-column", dest="timestamp_column", default=None)
    p.add_argument("--periods", default=None, help="comma-separated, e.g. 8,24,168")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=None)
    p.add_argument(
        "--feature-mode",
        "--mode",
        dest="feature_mode",
        default=None,
        choices=["none", "statistical", "topological", "both"],
    )
    p.add_argument(
        "--selection-mode",
        dest="selection_mode",
        default=None,
        choices=["none", "rfe", "rfe+pso"],
    )
    p.add_argument("--spec", default=None, help="SARIMAX orders p,d,q,P,D,Q,s")
    p.add_argument("--refit-interval", dest="refit_interval", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="seed for randomized stages (default 0)")
    if output:
        p.add_argument("--output", required=True, help="output file path")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="oeeforecast",
        description="Decomposition + topological-feature SARIMAX forecasting for hourly efficiency series",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="Table-style descriptive statistics")
    _add_io_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("decompose", help="write trend/seasonal/residual CSV")
    _add_io_flags(p, output=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("features", help="extract residual window features to CSV")
    _add_io_flags(p, output=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("select", help="run feature selection, write manifest JSON")
    _add_io_flags(p, output=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("fit", help="fit the residual SARIMAX, print coefficient JSON")
    _add_io_flags(p)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="forecast the next hours from the end of the series")
    _add_io_flags(p)
    p.add_argument("--output", default=None, help="also write step,forecast CSV")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("benchmark", help="run the model comparison harness")
    _add_io_flags(p)
    p.add_argument("--models", default=None, help=f"comma list from {','.join(BENCHMARK_MODELS)}")
    p.add_argument("--output", default=None, help="benchmark CSV path")
    p.add_argument("--json-output", default=None)
    p.add_argument("--forecasts-dir", default=None)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("serve", help="start the read-only forecast HTTP service")
    p.add_argument("--registry", default=None, help="registry file (or OEEFORECAST_REGISTRY)")
    p.add_argument("--port", type=int, default=None, help="port (or OEEFORECAST_PORT, default 8080)")
    p.set_defaults(func=cmd_serve)
    return ap


def cli_run(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CsvError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, np.linalg.LinAlgError, sarimax.CollinearityError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - last resort
        print(f"unexpected error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


def main() -> None:
    sys.exit(cli_run())
