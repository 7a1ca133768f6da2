"""Error metrics, Wilcoxon tests and run summaries."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import norm, rankdata

__all__ = [
    "UndefinedCorrelationError",
    "MetricReport",
    "RunSummary",
    "TestResult",
    "mse",
    "mae",
    "rmse",
    "pearson_correlation",
    "metric_report",
    "wilcoxon_rank_sum",
    "wilcoxon_signed_rank",
    "summarize_runs",
    "EXACT_RANK_SUM_LIMIT",
    "EXACT_SIGNED_RANK_LIMIT",
]

EXACT_RANK_SUM_LIMIT = 12  # n + m
EXACT_SIGNED_RANK_LIMIT = 25  # non-zero pairs


class UndefinedCorrelationError(ValueError):
    pass


def _pair(y, yhat):
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.size == 0 or y.shape != yhat.shape:
        raise ValueError(f"need two non-empty series of equal length, got {y.size} and {yhat.size}")
    return y, yhat


def mse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean((y - yhat) ** 2))


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def rmse(y, yhat) -> float:
    return math.sqrt(mse(y, yhat))


def pearson_correlation(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    if y.size < 2:
        raise UndefinedCorrelationError("correlation needs at least two points")
    dy = y - y.mean()
    dh = yhat - yhat.mean()
    sy = math.sqrt(float(np.dot(dy, dy)))
    sh = math.sqrt(float(np.dot(dh, dh)))
    if sy == 0.0 or sh == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a constant series")
    r = float(np.dot(dy, dh)) / (sy * sh)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class MetricReport:
    mse: float
    mae: float
    rmse: float
    correlation: float

    def to_dict(self) -> dict:
        return asdict(self)


def metric_report(y, yhat) -> MetricReport:
    """All four metrics; correlation is NaN when either series is constant."""
    m = mse(y, yhat)
    try:
        r = pearson_correlation(y, yhat)
    except UndefinedCorrelationError:
        r = float("nan")
    return MetricReport(m, mae(y, yhat), math.sqrt(m), r)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    pvalue: float
    method: str

    def to_dict(self) -> dict:
        return asdict(self)


def _tie_term(ranks: np.ndarray) -> float:
    _, counts = np.unique(ranks, return_counts=True)
    return float(np.sum(counts ** 3 - counts))


def wilcoxon_rank_sum(a, b, exact=None) -> TestResult:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) test; ``statistic`` is U for ``a``.

    Exact by enumerating every split of the pooled midranks when
    ``len(a) + len(b) <= 12``; otherwise a tie-corrected normal
    approximation with continuity correction.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n, m = a.size, b.size
    if n == 0 or m == 0:
        raise ValueError("both samples must be non-empty")
    ranks = rankdata(np.concatenate([a, b]))
    offset = n * (n + 1) / 2.0
    u = float(ranks[:n].sum() - offset)
    centre = n * m / 2.0
    if exact is None:
        exact = n + m <= EXACT_RANK_SUM_LIMIT

    if exact:
        total = float(ranks.sum())
        # enumerate the smaller side's rank subsets
        k = min(n, m)
        observed = abs(u - centre)
        hits = count = 0
        for combo in itertools.combinations(range(n + m), k):
            s = float(ranks[list(combo)].sum())
            u_k = s - k * (k + 1) / 2.0
            dev = abs(u_k - centre)
            count += 1
            if dev >= observed - 1e-9:
                hits += 1
        return TestResult(u, min(1.0, hits / count), "exact")

    N = n + m
    var = n * m / 12.0 * ((N + 1) - _tie_term(ranks) / (N * (N - 1)))
    if var <= 0:
        return TestResult(u, 1.0, "normal")
    z = max(abs(u - centre) - 0.5, 0.0) / math.sqrt(var)
    return TestResult(u, float(min(1.0, 2.0 * norm.sf(z))), "normal")


def _signed_rank_exact_cdf(doubled_ranks: np.ndarray) -> np.ndarray:
    """Null distribution counts of 2*W+ by dynamic programming over sign choices."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in doubled_ranks.astype(int):
        if r <= 0:
            raise ValueError("ranks must be positive")
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:-r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(a, b, exact=None) -> TestResult:
    """Two-sided paired Wilcoxon signed-rank test on ``a - b``.

    Zero differences are dropped. ``statistic`` is ``min(W+, W-)``. Exact
    for up to 25 non-zero pairs, otherwise a tie-corrected normal
    approximation without continuity correction.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or a.shape != b.shape:
        raise ValueError("need two non-empty paired samples of equal length")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        return TestResult(0.0, 1.0, "exact")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if exact is None:
        exact = n <= EXACT_SIGNED_RANK_LIMIT

    if exact:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _signed_rank_exact_cdf(doubled)
        probs = counts / counts.sum()
        k = int(round(2 * stat))
        lower = probs[: k + 1].sum()
        upper = probs[int(round(2 * max(w_plus, w_minus))):].sum()
        p = min(1.0, lower + upper) if w_plus != w_minus else 1.0
        return TestResult(stat, float(p), "exact")

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(ranks) / 48.0
    z = (w_plus - mean) / math.sqrt(var)
    return TestResult(stat, float(min(1.0, 2.0 * norm.sf(abs(z)))), "normal")


@dataclass(frozen=True)
class RunSummary:
    samples: tuple
    mean: float
    median: float
    std: float

    @property
    def n(self) -> int:
        return len(self.samples)

    def to_dict(self) -> dict:
        return {"n": self.n, "mean": self.mean, "median": self.median, "std": self.std}


def summarize_runs(samples) -> RunSummary | dict:
    """Mean, median (mean of the two middle values for even counts) and sample std.

    A mapping of ``name -> samples`` returns a dict of summaries.
    """
    if isinstance(samples, Mapping):
        return {k: summarize_runs(v) for k, v in samples.items()}
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("need at least one sample")
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return RunSummary(tuple(float(v) for v in x), float(np.mean(x)), float(np.median(x)), std)
