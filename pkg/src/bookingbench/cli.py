"""Command-line front end.

Subcommands mirror the pipeline stages: ``simulate`` writes a labelled
pattern collection plus the controls and forecast behind it; ``detect`` flags
an existing collection; ``extrapolate`` completes truncated patterns;
``benchmark`` runs the configured experiment suite; ``empirical`` runs the
homogenise-and-detect pipeline on external data; ``fixtures`` generates
synthetic railway-like CSVs.

Exit codes: 0 success, 2 usage or configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .controls import HEURISTICS, compute_controls
from .demand import parse_outlier_spec, sample_requests
from .detectors.base import DetectorSpec, available_methods
from .empirical import IngestError, detect_empirical, ingest, make_fixture, write_fixture_csv
from .evaluate import (
    foresight_sweep,
    hindsight_report,
    pool_reports,
    revenue_gain_experiment,
    roc_sweep,
)
from .extrapolate import EXTRAPOLATORS, complete_collection
from .forecast import forecast_demand, scenario_for_demand_factor
from .io import read_patterns_csv
from .rng import rng_from, seed_sequence
from .scenario import default_regular_scenario, scenario_from_dict
from .simulate import build_collection, revenue_comparison


class ConfigError(Exception):
    """Bad or missing configuration; exits with status 2."""


class DataError(Exception):
    """Bad input data; exits with status 3."""


def _load_config(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _require(config: dict, key: str):
    if key not in config:
        raise ConfigError(f"missing config key: {key}")
    return config[key]


def _scenario_from_config(config: dict):
    doc = config.get("scenario", "default")
    if doc == "default":
        base = default_regular_scenario(int(config.get("n_intervals", 30)))
    else:
        try:
            base = scenario_from_dict(doc)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad scenario: {exc}") from exc
    factor = config.get("demand_factor")
    if factor is not None:
        base = scenario_for_demand_factor(base, float(factor))
    return base


def _collection_from_config(config: dict, seed: int, workers: int):
    base = _scenario_from_config(config)
    heuristic = config.get("heuristic", "emsrb_mr")
    if heuristic not in HEURISTICS:
        raise ConfigError(f"unknown heuristic {heuristic!r}; valid: {', '.join(HEURISTICS)}")
    try:
        outliers = [parse_outlier_spec(base, spec) for spec in _require(config, "outlier_kinds")]
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad outlier spec: {exc}") from exc
    forecast_runs = int(config.get("forecast_runs", 100))
    fc = forecast_demand(base, forecast_runs, seed_sequence(seed, 900_001))
    controls = compute_controls(fc, base.fare_structure, heuristic)
    collection = build_collection(
        n_patterns=int(_require(config, "n_patterns")),
        outlier_frequency=float(_require(config, "outlier_frequency")),
        outlier_scenarios=outliers,
        base=base,
        controls=controls,
        seed=seed,
        workers=workers,
    )
    return base, fc, controls, collection


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out)
    base, fc, controls, collection = _collection_from_config(config, args.seed, args.workers)
    out.mkdir(parents=True, exist_ok=True)
    io.write_patterns_csv(collection, out / "patterns.csv")
    io.write_pattern_classes_csv(collection, base.fare_structure, out / "pattern_classes.csv")
    io.write_controls_csv(controls, base.fare_structure, out / "controls.csv")
    io.write_forecast_csv(fc, base.fare_structure, out / "forecast.csv")
    if config.get("dump_streams"):
        io.write_request_stream_csv(
            sample_requests(base, rng_from(args.seed, 0)), out / "stream_example.csv"
        )
    io.write_manifest(out, "simulate", config, args.seed)
    n_out = int(collection.truth().sum())
    print(
        f"wrote {len(collection)} patterns ({n_out} outliers) under "
        f"{controls.heuristic} controls to {out}"
    )
    return 0


def _detector_specs_from_config(entries) -> list[DetectorSpec]:
    methods = available_methods()
    specs = []
    for entry in entries:
        if isinstance(entry, str):
            entry = {"method": entry}
        method = entry.get("method")
        if method not in methods:
            raise ConfigError(
                f"unknown detector {method!r}; valid: {', '.join(sorted(methods))}"
            )
        extrap = entry.get("extrapolate")
        if extrap is not None and extrap not in EXTRAPOLATORS:
            raise ConfigError(
                f"unknown extrapolation {extrap!r}; valid: {', '.join(EXTRAPOLATORS)}"
            )
        specs.append(
            DetectorSpec(method=method, params=entry.get("params", {}), extrapolation=extrap)
        )
    if not specs:
        raise ConfigError("at least one detector required")
    return specs


def cmd_detect(args) -> int:
    methods = available_methods()
    if args.method not in methods:
        raise ConfigError(
            f"unknown detector {args.method!r}; valid: {', '.join(sorted(methods))}"
        )
    if args.extrapolate is not None and args.extrapolate not in EXTRAPOLATORS:
        raise ConfigError(
            f"unknown extrapolation {args.extrapolate!r}; valid: {', '.join(EXTRAPOLATORS)}"
        )
    try:
        collection = read_patterns_csv(args.patterns)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read patterns: {exc}") from exc
    horizon = collection.n_intervals
    tau = args.tau if args.tau is not None else horizon
    if not 2 <= tau <= horizon:
        raise ConfigError(f"--tau must lie in 2..{horizon}")
    spec = DetectorSpec(method=args.method, extrapolation=args.extrapolate)
    report = foresight_sweep(collection, [spec], args.seed, taus=[tau])
    run = report.runs[spec.name]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_flags_csv(run, collection.ids(), out / "flags.csv")
    io.write_report_csv(report.rows(), out / "report.csv")
    if args.method == "functional_depth":
        io.write_depths_csv(run, collection.ids(), out / "depths.csv")
    if args.extrapolate:
        prefix = collection.matrix()[:, :tau].astype(float)
        completed, models = complete_collection(prefix, horizon, args.extrapolate)
        io.write_completions_csv(
            completed, models, collection.ids(), tau, args.extrapolate, out / "completions.csv"
        )
    io.write_manifest(
        out,
        "detect",
        {"method": args.method, "tau": tau, "extrapolate": args.extrapolate},
        args.seed,
    )
    cell = report.cell(spec.name, tau)
    flagged = int(run.flags[:, tau - 1].sum()) if run.evaluated[tau - 1] else 0
    print(f"{spec.name} at tau={tau}: flagged {flagged} of {len(collection)} "
          f"(bcr={cell.rates()['bcr']:.3f})")
    return 0


def cmd_extrapolate(args) -> int:
    if args.method not in EXTRAPOLATORS:
        raise ConfigError(
            f"unknown extrapolation {args.method!r}; valid: {', '.join(EXTRAPOLATORS)}"
        )
    try:
        collection = read_patterns_csv(args.patterns)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read patterns: {exc}") from exc
    horizon = collection.n_intervals
    tau = args.tau if args.tau is not None else horizon
    if not 2 <= tau <= horizon:
        raise ConfigError(f"--tau must lie in 2..{horizon}")
    prefix = collection.matrix()[:, :tau].astype(float)
    completed, models = complete_collection(prefix, horizon, args.method)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_completions_csv(
        completed, models, collection.ids(), tau, args.method, out / "completions.csv"
    )
    io.write_manifest(out, "extrapolate", {"method": args.method, "tau": tau}, args.seed)
    print(f"completed {len(collection)} patterns from tau={tau} to {horizon} with {args.method}")
    return 0


def cmd_benchmark(args) -> int:
    config = _load_config(args.config)
    collection_cfg = _require(config, "collection")
    experiments = _require(config, "experiments")
    detectors = _detector_specs_from_config(config.get("detectors", []))
    known = {"hindsight", "foresight", "roc", "revenue_factors", "revenue_gain"}
    unknown = set(experiments) - known
    if unknown:
        raise ConfigError(f"unknown experiment(s): {', '.join(sorted(unknown))}")
    if args.dry_run:
        print("config ok (dry run); nothing written")
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = _scenario_from_config(collection_cfg)
    capacity = base.fare_structure.capacity

    def fresh_collection(rep: int):
        cfg = dict(collection_cfg)
        _, _, _, coll = _collection_from_config(cfg, args.seed + rep, args.workers)
        return coll

    if "hindsight" in experiments:
        reps = int(experiments["hindsight"].get("replications", 1))
        reports = [
            hindsight_report(fresh_collection(r), detectors, seed_sequence(args.seed, 1, r))
            for r in range(reps)
        ]
        io.write_report_csv(pool_reports(reports).rows(), out / "hindsight_report.csv")

    if "foresight" in experiments:
        cfg = experiments["foresight"]
        reps = int(cfg.get("replications", 1))
        taus = cfg.get("taus")
        reports = [
            foresight_sweep(
                fresh_collection(r),
                detectors,
                seed_sequence(args.seed, 2, r),
                taus=taus,
                capacity=capacity,
            )
            for r in range(reps)
        ]
        io.write_report_csv(pool_reports(reports).rows(), out / "foresight_report.csv")

    if "roc" in experiments:
        cfg = experiments["roc"]
        taus = cfg.get("taus") or [base.n_intervals]
        coll = fresh_collection(10_000)
        report = foresight_sweep(
            coll, detectors, seed_sequence(args.seed, 3), taus=taus, capacity=capacity
        )
        curves = {}
        truth = coll.truth()
        for spec in detectors:
            run = report.runs[spec.name]
            for tau in taus:
                if run.evaluated[tau - 1] and np.isfinite(run.scores[:, tau - 1]).all():
                    curves[(spec.name, tau)] = roc_sweep(run.scores[:, tau - 1], truth)
        io.write_roc_csv(curves, out / "roc.csv")

    if "revenue_factors" in experiments:
        cfg = experiments["revenue_factors"]
        factors = cfg.get("demand_factors", [0.9, 1.2, 1.5])
        reps = int(cfg.get("replications", 2000))
        heuristics = cfg.get("heuristics", list(HEURISTICS))
        forecast_runs = int(cfg.get("forecast_runs", 100))
        scenarios = {f: scenario_for_demand_factor(base, f) for f in factors}
        controls = {}
        for i, (f, scen) in enumerate(sorted(scenarios.items())):
            fc = forecast_demand(scen, forecast_runs, seed_sequence(args.seed, 4, i))
            controls[f] = {
                h: compute_controls(fc, scen.fare_structure, h) for h in heuristics
            }
        rows = revenue_comparison(scenarios, controls, reps, args.seed, workers=args.workers)
        io.write_revenue_rows_csv(rows, out / "revenue_factors.csv")

    if "revenue_gain" in experiments:
        cfg = experiments["revenue_gain"]
        scen = base
        if cfg.get("demand_factor") is not None:
            scen = scenario_for_demand_factor(base, float(cfg["demand_factor"]))
        rows = revenue_gain_experiment(
            scen,
            cfg.get("outlier_pcts", [-0.25, 0.25]),
            cfg.get("correction_intervals", [0]),
            cfg.get("heuristic", "emsrb_mr"),
            int(cfg.get("replications", 500)),
            args.seed + 50_000,
            workers=args.workers,
        )
        io.write_revenue_rows_csv(rows, out / "revenue_gain.csv")

    io.write_manifest(out, "benchmark", config, args.seed)
    print(f"benchmark outputs written to {out}")
    return 0


def cmd_empirical(args) -> int:
    try:
        patterns = ingest(args.data)
    except (OSError, IngestError) as exc:
        raise DataError(str(exc)) from exc
    try:
        result = detect_empirical(patterns, args.seed)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        (p.pattern_id, float(d), int(f))
        for p, d, f in zip(patterns, result["depths"], result["flags"])
    ]
    io.write_simple_csv(out / "residual_depths.csv", ("pattern_id", "depth", "flagged"), rows)
    io.write_manifest(out, "empirical", {"data": str(args.data)}, args.seed)
    n_flagged = int(result["flags"].sum())
    print(
        f"{n_flagged} of {len(patterns)} patterns flagged "
        f"({100 * result['flagged_fraction']:.1f}%)"
    )
    return 0


def cmd_fixtures(args) -> int:
    patterns, _ = make_fixture(
        args.n, args.seed, n_intervals=args.intervals, outlier_fraction=args.outlier_fraction
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_fixture_csv(patterns, out)
    print(f"wrote {len(patterns)} synthetic patterns to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bookingbench",
        description="Simulate booking patterns, optimise booking limits, and "
        "benchmark outlier detectors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=False, patterns=False):
        if config:
            p.add_argument("--config", required=True, help="JSON configuration file")
        if patterns:
            p.add_argument("--patterns", required=True, help="patterns.csv from simulate")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("simulate", help="generate a labelled pattern collection")
    common(p, config=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("detect", help="run one detector on a collection")
    common(p, patterns=True)
    p.add_argument("--method", required=True)
    p.add_argument("--tau", type=int, default=None, help="intervals observed (default: all)")
    p.add_argument("--extrapolate", default=None, choices=sorted(EXTRAPOLATORS), help="complete prefixes first")
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("extrapolate", help="complete truncated patterns")
    common(p, patterns=True)
    p.add_argument("--method", required=True)
    p.add_argument("--tau", type=int, default=None)
    p.set_defaults(fn=cmd_extrapolate)

    p = sub.add_parser("benchmark", help="run the configured experiment suite")
    common(p, config=True)
    p.add_argument("--dry-run", action="store_true", help="validate config, write nothing")
    p.set_defaults(fn=cmd_benchmark)

    p = sub.add_parser("empirical", help="homogenise and detect on external data")
    p.add_argument("--data", required=True, help="empirical booking CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_empirical)

    p = sub.add_parser("fixtures", help="generate synthetic railway-like data")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--intervals", type=int, default=18)
    p.add_argument("--outlier-fraction", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_fixtures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
