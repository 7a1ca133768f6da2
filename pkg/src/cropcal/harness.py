"""Experiment orchestration: configuration, calibration runs, comparisons and file output.

One calibration run builds a ground-truth LAI series for a variety, wraps
the EnKF (or the bare simulator) into an MSE objective over the two weather
decision variables (season TAVG in °C, season RAIN in mm) and hands it to
one optimizer. Every random draw comes from a stream derived from the root
seed and the cell labels, so any run can be repeated on its own.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import baselines, demmogc
from .core import Bounds, ConfigurationError, RngStream, derive_stream_id
from .enkf import Assimilator, EnkfConfig, ensemble_covariance, ensemble_mean, kalman_gain, update
from .metrics import (
    MetricReport,
    RunSummary,
    metric_report,
    mse,
    summarize_runs,
    wilcoxon_rank_sum,
    wilcoxon_signed_rank,
)
from .wofost import DEFAULT_DAYS, LAI0, CropVariety, get_variety, season_weather, simulate_season, target_trajectory

__all__ = [
    "ALGORITHMS",
    "MODES",
    "ExperimentConfig",
    "ExperimentResult",
    "CompareReport",
    "AppendixReport",
    "build_objective",
    "calibrate",
    "calibrate_runs",
    "compare",
    "appendix_check",
    "export",
    "export_compare",
    "load_results",
    "stats_from_results",
]

ALGORITHMS = {
    "demmogc": (demmogc.optimize, demmogc.DemmogcConfig),
    "de": (baselines.de_optimize, baselines.DEConfig),
    "ga": (baselines.ga_optimize, baselines.GAConfig),
    "pso": (baselines.pso_optimize, baselines.PSOConfig),
    "hho": (baselines.hho_optimize, baselines.HHOConfig),
}
MODES = ("assimilation", "wofost-only")


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one experiment; see README for the JSON schema."""

    variety: object = "IR64"
    algorithm: str = "demmogc"
    mode: str = "assimilation"
    optimizer: dict = field(default_factory=dict)
    enkf: dict = field(default_factory=dict)
    runs: int = 1
    seed: int = 0
    out: str = "results"
    days: int = DEFAULT_DAYS
    lai0: float = LAI0
    jitter: float = 0.05
    target_tavg: Optional[float] = None
    target_rain: Optional[float] = None
    bounds: Optional[dict] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}; known: {sorted(ALGORITHMS)}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; known: {list(MODES)}")
        if int(self.runs) < 1:
            raise ConfigurationError("runs must be >= 1")
        if int(self.seed) < 0:
            raise ConfigurationError("seed must be >= 0")
        if int(self.days) < 2:
            raise ConfigurationError("need at least two simulated days")
        if self.jitter < 0:
            raise ConfigurationError("jitter must be >= 0")
        self.resolve_variety()
        self.optimizer_config()
        self.enkf_config()
        self.search_bounds()

    # -- resolution helpers
    def resolve_variety(self) -> CropVariety:
        if isinstance(self.variety, CropVariety):
            return self.variety
        if isinstance(self.variety, dict):
            data = dict(self.variety)
            if "preset" in data:
                return get_variety(data.pop("preset"), data)
            return CropVariety.from_dict(data)
        return get_variety(self.variety)

    @property
    def variety_name(self) -> str:
        return self.resolve_variety().name

    def optimizer_config(self):
        cls = ALGORITHMS[self.algorithm][1]
        known = {f.name for f in fields(cls)}
        opts = {k: v for k, v in self.optimizer.items() if k in known}
        try:
            return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in opts.items()})
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None

    def enkf_config(self) -> EnkfConfig:
        unknown = set(self.enkf) - {f.name for f in fields(EnkfConfig)}
        if unknown:
            raise ConfigurationError(f"unknown EnKF settings: {sorted(unknown)}")
        return EnkfConfig(**self.enkf)

    def search_bounds(self) -> Bounds:
        v = self.resolve_variety()
        b = dict(self.bounds or {})
        unknown = set(b) - {"tavg", "rain"}
        if unknown:
            raise ConfigurationError(f"unknown bound names: {sorted(unknown)}")
        t = b.get("tavg", v.tavg_range)
        r = b.get("rain", v.rain_range)
        return Bounds([t[0], r[0]], [t[1], r[1]])

    # -- serialization
    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        if isinstance(self.variety, CropVariety):
            d["variety"] = self.variety.to_dict()
        d["optimizer"] = dict(self.optimizer)
        d["enkf"] = dict(self.enkf)
        return json.loads(json.dumps(d))

    def resolved(self) -> dict:
        """Everything that determines a run, with defaults filled in."""
        return {
            "config": self.to_dict(),
            "variety": self.resolve_variety().to_dict(),
            "optimizer": self.optimizer_config().to_dict(),
            "enkf": self.enkf_config().to_dict(),
            "bounds": {"lower": self.search_bounds().lower.tolist(), "upper": self.search_bounds().upper.tolist()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read configuration {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigurationError("configuration file must hold a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def _stream(cfg: ExperimentConfig, role: str, run_index: int) -> RngStream:
    return RngStream(int(cfg.seed), derive_stream_id(role, cfg.variety_name, run_index))


def build_objective(
    variety: CropVariety,
    target,
    mode: str,
    assimilator: Optional[Assimilator] = None,
    days: int = DEFAULT_DAYS,
    lai0: float = LAI0,
) -> Callable[[np.ndarray], float]:
    """MSE between the target and the assimilated or simulated LAI for a (TAVG, RAIN) genome."""
    y = np.asarray(target.lai, dtype=float)
    if mode == "assimilation":
        if assimilator is None:
            raise ConfigurationError("assimilation mode needs an assimilator")

        def objective(genome):
            w = season_weather(variety, genome[0], genome[1], days)
            return mse(y, assimilator.run(w, simulate=False).assimilated.lai)

    elif mode == "wofost-only":

        def objective(genome):
            w = season_weather(variety, genome[0], genome[1], days)
            return mse(y, simulate_season(variety, w, lai0).lai)

    else:
        raise ConfigurationError(f"unknown mode {mode!r}")
    return objective


@dataclass
class ExperimentResult:
    algorithm: str
    variety: str
    mode: str
    run_index: int
    seed: int
    stream_ids: dict
    best_genome: list
    best_fitness: float
    history: list
    assimilation: MetricReport
    wofost: MetricReport
    trajectories: dict
    n_evals: int
    config: dict
    wall_time: float = field(default=0.0, compare=False)

    @property
    def objective_metrics(self) -> MetricReport:
        return self.assimilation if self.mode == "assimilation" else self.wofost

    def to_dict(self) -> dict:
        d = asdict(self)
        d["assimilation"] = self.assimilation.to_dict()
        d["wofost"] = self.wofost.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        d = dict(d)
        for key in ("assimilation", "wofost"):
            d[key] = MetricReport(**{k: float("nan") if v is None else v for k, v in d[key].items()})
        d["trajectories"] = {k: [None if v is None else float(v) for v in vals] for k, vals in d["trajectories"].items()}
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(_nan_to_none(self.to_dict()), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentResult":
        return cls.from_dict(json.loads(text))


def _nan_to_none(obj):
    if isinstance(obj, float):
        return None if not np.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_nan_to_none(v) for v in obj]
    return obj


def calibrate(config: ExperimentConfig, run_index: int = 0) -> ExperimentResult:
    """One calibration run of ``config.algorithm`` on ``config.variety``.

    The target series and the EnKF noise depend on (variety, run index) only,
    so every algorithm sees the same problem for the same run index; the
    optimizer stream also depends on the algorithm.
    """
    t0 = time.perf_counter()
    variety = config.resolve_variety()
    bounds = config.search_bounds()
    streams = {
        "target": _stream(config, "target", run_index),
        "enkf": _stream(config, "enkf", run_index),
        "optimizer": _stream(config, config.algorithm, run_index),
    }
    target = target_trajectory(
        variety, streams["target"], config.jitter, config.target_tavg, config.target_rain, config.days, config.lai0
    )
    assim = Assimilator(variety, target, config.enkf_config(), streams["enkf"], config.lai0)
    objective = build_objective(variety, target, config.mode, assim, config.days, config.lai0)

    optimize, _ = ALGORITHMS[config.algorithm]
    try:
        res = optimize(objective, bounds, config.optimizer_config(), streams["optimizer"])
    except (FloatingPointError, RuntimeError) as exc:
        raise RuntimeError(
            f"{config.algorithm} on {variety.name} (run {run_index}, seed {config.seed}) failed: {exc}"
        ) from exc

    best = res.best.genome
    final = assim.run(season_weather(variety, best[0], best[1], config.days))
    y = target.lai
    return ExperimentResult(
        algorithm=config.algorithm,
        variety=variety.name,
        mode=config.mode,
        run_index=int(run_index),
        seed=int(config.seed),
        stream_ids={k: s.stream_id for k, s in streams.items()},
        best_genome=[float(v) for v in best],
        best_fitness=float(res.best.fitness),
        history=[float(v) for v in res.history],
        assimilation=metric_report(y, final.assimilated.lai),
        wofost=metric_report(y, final.simulated.lai),
        trajectories={
            "simulated": final.simulated.lai.tolist(),
            "assimilated": final.assimilated.lai.tolist(),
            "observed": [None if not np.isfinite(v) else float(v) for v in final.observed],
            "target": y.tolist(),
        },
        n_evals=res.n_evals,
        config=config.resolved(),
        wall_time=time.perf_counter() - t0,
    )


def calibrate_runs(config: ExperimentConfig) -> list[ExperimentResult]:
    return [calibrate(config, r) for r in range(config.runs)]


def _cell(args):
    cfg, run = args
    return calibrate(cfg, run)


@dataclass
class CompareReport:
    results: list
    table: list  # rows shaped like the per-variety metric tables
    summaries: dict  # variety -> algorithm -> RunSummary of objective-mode RMSE
    tests: list  # DE-MMOGC vs each baseline, per variety

    def to_dict(self) -> dict:
        return {
            "table": self.table,
            "summaries": {v: {a: s.to_dict() for a, s in d.items()} for v, d in self.summaries.items()},
            "tests": self.tests,
            "results": [r.to_dict() for r in self.results],
        }


def _table_rows(results: Sequence[ExperimentResult]) -> list[dict]:
    rows = []
    cells: dict = {}
    for r in results:
        cells.setdefault((r.variety, r.algorithm), []).append(r)
    for (variety, algorithm), rs in cells.items():
        for label, attr in (("Assimilation Metrics", "assimilation"), ("WOFOST Metrics", "wofost")):
            reports = [getattr(r, attr) for r in rs]
            row = {"variety": variety, "algorithm": algorithm, "metrics": label, "runs": len(rs)}
            for m in ("mse", "mae", "rmse", "correlation"):
                row[m] = float(np.mean([getattr(rep, m) for rep in reports]))
            rows.append(row)
    return rows


def stats_from_results(results: Sequence[ExperimentResult], reference: str = "demmogc", metric: str = "rmse"):
    """RMSE summaries per (variety, algorithm) and Wilcoxon tests of ``reference`` vs the rest."""
    samples: dict = {}
    for r in sorted(results, key=lambda r: (r.variety, r.algorithm, r.run_index)):
        samples.setdefault(r.variety, {}).setdefault(r.algorithm, {})[r.run_index] = getattr(
            r.objective_metrics, metric
        )
    summaries = {
        v: {a: summarize_runs(list(runs.values())) for a, runs in algs.items()} for v, algs in samples.items()
    }
    tests = []
    for v, algs in samples.items():
        if reference not in algs:
            continue
        ref = algs[reference]
        for a, runs in algs.items():
            if a == reference:
                continue
            rs = wilcoxon_rank_sum(list(ref.values()), list(runs.values()))
            paired = sorted(set(ref) & set(runs))
            row = {
                "variety": v,
                "reference": reference,
                "compared": a,
                "metric": metric,
                "rank_sum_U": rs.statistic,
                "rank_sum_p": rs.pvalue,
                "rank_sum_method": rs.method,
            }
            if paired:
                sr = wilcoxon_signed_rank([ref[i] for i in paired], [runs[i] for i in paired])
                row.update(signed_rank_W=sr.statistic, signed_rank_p=sr.pvalue, signed_rank_method=sr.method)
            tests.append(row)
    return summaries, tests


def compare(
    config: ExperimentConfig,
    algorithms: Iterable[str] = ("demmogc", "de", "ga", "pso", "hho"),
    varieties: Optional[Iterable] = None,
    runs: Optional[int] = None,
    workers: int = 1,
) -> CompareReport:
    """Run every (algorithm, variety, run) cell and tabulate the outcome."""
    algorithms = list(algorithms)
    varieties = list(varieties) if varieties is not None else [config.variety]
    if not algorithms or not varieties:
        raise ConfigurationError("compare needs at least one algorithm and one variety")
    n_runs = int(runs if runs is not None else config.runs)
    jobs = []
    for v in varieties:
        for a in algorithms:
            cfg = config.with_(algorithm=a, variety=v, runs=n_runs)
            jobs.extend((cfg, r) for r in range(n_runs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, jobs))
    else:
        results = [_cell(j) for j in jobs]
    summaries, tests = stats_from_results(results)
    return CompareReport(results, _table_rows(results), summaries, tests)


# ---------------------------------------------------------------- appendix


APPENDIX = {
    "forecast": [0.6, 0.65, 0.7, 0.75, 0.8],
    "observation": 0.68,
    "perturbed": [0.72, 0.67, 0.68, 0.65, 0.70],
    "R": 0.01,
    "H": 1.0,
    "expected": {
        "mean": (0.7, 0.0),
        "covariance": (0.00625, 1e-6),
        "gain": (0.3846, 1e-4),
        "updated_ensemble": ([0.6462, 0.6577, 0.6923, 0.7115, 0.7615], 1e-3),
        "updated_mean": (0.6938, 1e-4),
    },
}


@dataclass
class AppendixReport:
    checks: list  # dicts: name, expected, actual, tolerance, passed

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c["passed"] else "FAIL"
            out.append(f"{status} {c['name']}: actual={c['actual']} expected={c['expected']} tol={c['tolerance']}")
        return out


def appendix_check(gain: Optional[float] = None, tolerance: Optional[float] = None) -> AppendixReport:
    """Replay the five-member EnKF worked example and compare with its reference numbers.

    ``gain`` replaces the computed Kalman gain in the update step (fault
    injection); ``tolerance`` overrides every tolerance.
    """
    fx = APPENDIX
    a = np.array(fx["forecast"])
    mu = ensemble_mean(a)
    P = ensemble_covariance(a, mu)
    K = kalman_gain(P, fx["H"], fx["R"])
    updated = update(a, np.array(fx["perturbed"]), K if gain is None else gain, fx["H"])
    actual = {
        "mean": mu,
        "covariance": P,
        "gain": K,
        "updated_ensemble": updated.tolist(),
        "updated_mean": ensemble_mean(updated),
    }
    checks = []
    for name, (expected, tol) in fx["expected"].items():
        tol = tol if tolerance is None else tolerance
        err = float(np.max(np.abs(np.asarray(actual[name]) - np.asarray(expected))))
        checks.append(
            {"name": name, "expected": expected, "actual": actual[name], "tolerance": tol, "passed": err <= tol}
        )
    return AppendixReport(checks)


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if not np.isfinite(v) else repr(v)
    return str(v)


def _header(config: dict, seed: int) -> str:
    return f"# cropcal seed={seed}\n# config={json.dumps(config, sort_keys=True)}\n"


def _write_csv(path: Path, header: str, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), newline="")
    return path


METRIC_COLUMNS = ("algorithm", "variety", "mode", "run", "metrics", "mse", "mae", "rmse", "correlation")
CONVERGENCE_COLUMNS = ("generation", "best_fitness")
TRAJECTORY_COLUMNS = ("day", "simulated", "assimilated", "observed", "target")


def export(result: ExperimentResult, out_dir, formats: Sequence[str] = ("csv", "json")) -> list[Path]:
    """Write metrics, convergence history and trajectories for one run.

    CSV files start with two ``#`` comment lines holding the seed and the
    resolved configuration; the JSON file is the full result.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    stem = f"{result.algorithm}_{result.variety.replace(' ', '_')}_run{result.run_index}"
    header = _header(result.config, result.seed)
    paths = []
    if "csv" in formats:
        rows = [
            (result.algorithm, result.variety, result.mode, result.run_index, label, m.mse, m.mae, m.rmse, m.correlation)
            for label, m in (("assimilation", result.assimilation), ("wofost", result.wofost))
        ]
        paths.append(_write_csv(out / f"{stem}_metrics.csv", header, METRIC_COLUMNS, rows))
        paths.append(
            _write_csv(
                out / f"{stem}_convergence.csv",
                header,
                CONVERGENCE_COLUMNS,
                ((g + 1, f) for g, f in enumerate(result.history)),
            )
        )
        tr = result.trajectories
        paths.append(
            _write_csv(
                out / f"{stem}_trajectory.csv",
                header,
                TRAJECTORY_COLUMNS,
                (
                    (t, tr["simulated"][t], tr["assimilated"][t], tr["observed"][t], tr["target"][t])
                    for t in range(len(tr["target"]))
                ),
            )
        )
    if "json" in formats:
        p = out / f"{stem}.json"
        p.write_text(result.to_json())
        paths.append(p)
    return paths


def export_compare(report: CompareReport, out_dir, config: Optional[ExperimentConfig] = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = config.to_dict() if config is not None else {}
    seed = config.seed if config is not None else (report.results[0].seed if report.results else 0)
    header = _header(resolved, seed)
    cols = ("variety", "algorithm", "metrics", "runs", "mse", "mae", "rmse", "correlation")
    paths = [_write_csv(out / "compare_table.csv", header, cols, ([r[c] for c in cols] for r in report.table))]
    srows = [
        (v, a, s.n, s.mean, s.median, s.std) for v, d in report.summaries.items() for a, s in d.items()
    ]
    paths.append(
        _write_csv(out / "compare_summary.csv", header, ("variety", "algorithm", "n", "mean", "median", "std"), srows)
    )
    tcols = (
        "variety", "reference", "compared", "metric", "rank_sum_U", "rank_sum_p", "rank_sum_method",
        "signed_rank_W", "signed_rank_p", "signed_rank_method",
    )
    paths.append(_write_csv(out / "compare_wilcoxon.csv", header, tcols, ([t.get(c) for c in tcols] for t in report.tests)))
    p = out / "compare.json"
    p.write_text(json.dumps(_nan_to_none({"seed": seed, "config": resolved, **report.to_dict()}), indent=2, sort_keys=True))
    paths.append(p)
    return paths


def load_results(paths: Iterable) -> list[ExperimentResult]:
    """Read per-run JSON files or ``compare.json`` files back into results."""
    results = []
    for p in paths:
        p = Path(p)
        files = sorted(p.glob("*.json")) if p.is_dir() else [p]
        for f in files:
            data = json.loads(f.read_text())
            if "results" in data:
                results.extend(ExperimentResult.from_dict(r) for r in data["results"])
            elif "algorithm" in data and "trajectories" in data:
                results.append(ExperimentResult.from_dict(data))
    return results
