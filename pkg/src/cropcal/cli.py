"""Command-line entry point: ``cropcal <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 runtime or numerical error,
3 appendix-check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ConfigurationError
from .enkf import Assimilator
from .harness import (
    ALGORITHMS,
    MODES,
    ExperimentConfig,
    _header,
    _nan_to_none,
    _write_csv,
    appendix_check,
    calibrate,
    compare,
    export,
    export_compare,
    load_results,
    stats_from_results,
)
from .wofost import season_weather, simulate_season, target_trajectory, variety_presets

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file; flags override its values")
    p.add_argument("--algorithm", help=f"one of {sorted(ALGORITHMS)} (comma list for compare)")
    p.add_argument("--variety", help="preset name (comma list for compare)")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), action="append", help="repeatable; default both")


def _weather_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tavg", type=float, help="season mean temperature (default: range midpoint)")
    p.add_argument("--rain", type=float, help="season rainfall total in mm (default: range midpoint)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cropcal",
        description="Crop-model calibration: LAI simulation, EnKF assimilation and optimizer comparisons.",
        epilog="exit codes: 0 success, 1 configuration error, 2 runtime error, 3 appendix-check failure",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="free-running LAI simulation for fixed weather")
    _common(p)
    _weather_flags(p)

    p = sub.add_parser("assimilate", help="EnKF trajectory against a generated target")
    _common(p)
    _weather_flags(p)

    p = sub.add_parser("calibrate", help="calibrate TAVG/RAIN with one optimizer")
    _common(p)

    p = sub.add_parser("compare", help="algorithm x variety x run matrix with statistics")
    _common(p)
    p.add_argument("--stats", action="store_true", help="30 runs per cell unless --runs is given")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("stats", help="summaries and Wilcoxon tests from stored JSON results")
    _common(p)
    p.add_argument("paths", nargs="+", help="result JSON files or directories")

    p = sub.add_parser("appendix-check", help="replay the five-member EnKF worked example")
    p.add_argument("--gain", type=float, help="override the Kalman gain used in the update")
    p.add_argument("--tolerance", type=float, help="override every tolerance")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("presets", help="list the crop variety presets")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    return parser


def _split(value: Optional[str]) -> Optional[list]:
    if value is None:
        return None
    return [v.strip() for v in value.split(",") if v.strip()]


def _config(args, multi: bool = False) -> ExperimentConfig:
    overrides = {"seed": args.seed, "runs": args.runs, "mode": args.mode, "out": args.out}
    if not multi:
        overrides["algorithm"] = args.algorithm
        overrides["variety"] = args.variety
    if args.config:
        return ExperimentConfig.load(args.config, **overrides)
    return ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})


def _formats(args) -> tuple:
    return tuple(args.format) if args.format else ("csv", "json")


def _cmd_simulate(args) -> int:
    cfg = _config(args)
    v = cfg.resolve_variety()
    tavg = v.tavg_mid if args.tavg is None else args.tavg
    rain = v.rain_mid if args.rain is None else args.rain
    traj = simulate_season(v, season_weather(v, tavg, rain, cfg.days), cfg.lai0)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    info = {**cfg.to_dict(), "tavg": tavg, "rain": rain}
    written = []
    if "csv" in _formats(args):
        written.append(
            _write_csv(out / "simulate.csv", _header(info, cfg.seed), ("day", "lai"), enumerate(traj.lai.tolist()))
        )
    if "json" in _formats(args):
        p = out / "simulate.json"
        p.write_text(json.dumps({"seed": cfg.seed, "config": info, "lai": traj.lai.tolist()}, indent=2))
        written.append(p)
    print(f"{v.name}: final LAI {traj.lai[-1]:.4f} at TAVG={tavg:g}, RAIN={rain:g}")
    for p in written:
        print(p)
    return EXIT_OK


def _cmd_assimilate(args) -> int:
    from .harness import _stream

    cfg = _config(args)
    v = cfg.resolve_variety()
    tavg = v.tavg_mid if args.tavg is None else args.tavg
    rain = v.rain_mid if args.rain is None else args.rain
    target = target_trajectory(
        v, _stream(cfg, "target", 0), cfg.jitter, cfg.target_tavg, cfg.target_rain, cfg.days, cfg.lai0
    )
    res = Assimilator(v, target, cfg.enkf_config(), _stream(cfg, "enkf", 0), cfg.lai0).run(
        season_weather(v, tavg, rain, cfg.days)
    )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    info = {**cfg.resolved(), "tavg": tavg, "rain": rain}
    cols = ("day", "simulated", "assimilated", "observed", "target")
    rows = [
        (t, float(res.simulated.lai[t]), float(res.assimilated.lai[t]), float(res.observed[t]), float(target.lai[t]))
        for t in range(cfg.days)
    ]
    written = []
    if "csv" in _formats(args):
        written.append(_write_csv(out / "assimilate.csv", _header(info, cfg.seed), cols, rows))
    if "json" in _formats(args):
        p = out / "assimilate.json"
        data = {"seed": cfg.seed, "config": info, **{c: [r[i] for r in rows] for i, c in enumerate(cols)}}
        p.write_text(json.dumps(_nan_to_none(data), indent=2))
        written.append(p)
    err_a = float(np.mean((res.assimilated.lai - target.lai) ** 2))
    err_s = float(np.mean((res.simulated.lai - target.lai) ** 2))
    print(f"{v.name}: assimilated MSE {err_a:.6g}, WOFOST-only MSE {err_s:.6g}")
    for p in written:
        print(p)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    cfg = _config(args)
    for run in range(cfg.runs):
        r = calibrate(cfg, run)
        export(r, cfg.out, _formats(args))
        m = r.objective_metrics
        print(
            f"run {run}: {r.algorithm} {r.variety} TAVG={r.best_genome[0]:.4f} RAIN={r.best_genome[1]:.3f} "
            f"MSE={m.mse:.6g} RMSE={m.rmse:.6g} (assim {r.assimilation.mse:.6g}, wofost {r.wofost.mse:.6g})"
        )
    print(f"results written to {cfg.out}")
    return EXIT_OK


def _print_stats(summaries, tests) -> None:
    for v, algs in summaries.items():
        for a, s in algs.items():
            print(f"{v:>18} {a:>8}  n={s.n:<3} mean={s.mean:.6g} median={s.median:.6g} std={s.std:.6g}")
    for t in tests:
        line = f"{t['variety']}: {t['reference']} vs {t['compared']}  rank-sum U={t['rank_sum_U']:g} p={t['rank_sum_p']:.3g}"
        if "signed_rank_W" in t:
            line += f"  signed-rank W={t['signed_rank_W']:g} p={t['signed_rank_p']:.3g}"
        print(line)


def _cmd_compare(args) -> int:
    cfg = _config(args, multi=True)
    algorithms = _split(args.algorithm) or ["demmogc", "de", "ga", "pso", "hho"]
    varieties = _split(args.variety) or [cfg.variety]
    runs = args.runs if args.runs is not None else (30 if args.stats else cfg.runs)
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {a!r}")
    report = compare(cfg, algorithms, varieties, runs, workers=args.workers)
    export_compare(report, cfg.out, cfg)
    for row in report.table:
        print(
            f"{row['variety']:>18} {row['algorithm']:>8} {row['metrics']:<21} "
            f"MSE={row['mse']:.6g} MAE={row['mae']:.6g} RMSE={row['rmse']:.6g} r={row['correlation']:.4f}"
        )
    _print_stats(report.summaries, report.tests)
    print(f"results written to {cfg.out}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    results = load_results(args.paths)
    if not results:
        raise ConfigurationError("no stored results found")
    summaries, tests = stats_from_results(results)
    _print_stats(summaries, tests)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        p = out / "stats.json"
        p.write_text(
            json.dumps(
                _nan_to_none(
                    {
                        "summaries": {v: {a: s.to_dict() for a, s in d.items()} for v, d in summaries.items()},
                        "tests": tests,
                    }
                ),
                indent=2,
            )
        )
        print(p)
    return EXIT_OK


def _cmd_appendix(args) -> int:
    report = appendix_check(args.gain, args.tolerance)
    if args.format == "json":
        print(json.dumps({"passed": report.passed, "checks": report.checks}, indent=2))
    else:
        for line in report.lines():
            print(line)
    return EXIT_OK if report.passed else EXIT_CHECK


def _cmd_presets(args) -> int:
    rows = [v.to_dict() for v in variety_presets()]
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow(["" if r[c] is None else (";".join(map(str, r[c])) if isinstance(r[c], list) else r[c]) for c in cols])
    return EXIT_OK


COMMANDS = {
    "simulate": _cmd_simulate,
    "assimilate": _cmd_assimilate,
    "calibrate": _cmd_calibrate,
    "compare": _cmd_compare,
    "stats": _cmd_stats,
    "appendix-check": _cmd_appendix,
    "presets": _cmd_presets,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError, FloatingPointError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
