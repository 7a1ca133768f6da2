"""DE-MMOGC: multi-mutation DE with elite communication and operator adaptation.

The population is held as one array and cut into contiguous subpopulations,
one per mutation operator. Every generation each subpopulation produces
trials with its own operator (parents are drawn from the whole population),
greedy selection keeps the better of target and trial, the elites of each
subpopulation replace the worst members of the others, and the subpopulation
sizes for the next generation follow each operator's success rate.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    Bounds,
    Callback,
    ConfigurationError,
    Objective,
    OptimizeResult,
    Population,
    _Tracker,
    as_generator,
    init_population,
)
from .mutation import (
    MutationContext,
    MutationStrategy,
    PBestArchive,
    binomial_crossover,
    get_strategy,
    mutate,
    register_strategy,
)

__all__ = [
    "DEFAULT_OPERATORS",
    "DemmogcConfig",
    "OperatorStats",
    "rand_to_best_2",
    "apportion",
    "adapt_operator_probabilities",
    "communicate",
    "optimize",
]


def _rand_to_best_2(x, r, best, pbest, F):
    # the last difference reuses r1 - r2, as the operator is defined
    return r[0] + F * (best - r[0]) + F * (r[1] - r[2]) + F * (r[0] - r[1])


RAND_TO_BEST_2 = register_strategy(
    MutationStrategy("rand-to-best/2", 3, _rand_to_best_2, uses_best=True)
)

DEFAULT_OPERATORS = ("current-to-best/1", "rand-to-best/2", "current-to-pbest/1")


def rand_to_best_2(ctx: MutationContext, rng, parents: Optional[Sequence[int]] = None) -> np.ndarray:
    """``x_r1 + F(x_best - x_r1) + F(x_r2 - x_r3) + F(x_r1 - x_r2)``, clamped."""
    return mutate(RAND_TO_BEST_2, ctx, rng, parents=parents)


@dataclass(frozen=True)
class DemmogcConfig:
    np: int = 10
    G: int = 50
    F: float = 0.6
    Cr: float = 0.9
    p_best_fraction: float = 0.30
    elite_fraction: float = 0.10
    operators: tuple = DEFAULT_OPERATORS
    min_subpop: int = 2
    archive_factor: int = 10
    # skip migrants already present in the receiving subpopulation
    unique_migrants: bool = False

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(self.operators))
        for name in self.operators:
            get_strategy(name)
        if not self.operators:
            raise ConfigurationError("at least one operator is required")
        if self.np < max(4, self.min_subpop * len(self.operators)):
            raise ConfigurationError(
                f"np={self.np} cannot host {len(self.operators)} subpopulations of size >= {self.min_subpop}"
            )
        if self.G < 0:
            raise ConfigurationError("G must be >= 0")
        if not 0.0 <= self.elite_fraction <= 0.5:
            raise ConfigurationError(f"elite fraction must lie in [0, 0.5], got {self.elite_fraction}")
        if not 0.0 < self.p_best_fraction <= 1.0:
            raise ConfigurationError(f"p-best fraction must lie in (0, 1], got {self.p_best_fraction}")
        if not 0.0 <= self.Cr <= 1.0 or not self.F >= 0.0:
            raise ConfigurationError("need F >= 0 and Cr in [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["operators"] = list(self.operators)
        return d


@dataclass(frozen=True)
class OperatorStats:
    successes: tuple
    probabilities: tuple
    sizes: tuple = field(default=())


def apportion(total: int, probabilities: Sequence[float], floor: int = 2) -> tuple:
    """Largest-remainder split of ``total`` with at least ``floor`` per share.

    Every share first receives ``floor``; the rest is divided in proportion
    to ``probabilities``. Ties in the fractional part go to the lower index.
    """
    p = np.asarray(probabilities, dtype=float)
    k = p.size
    spare = total - floor * k
    if spare < 0:
        raise ConfigurationError(f"cannot give {k} shares at least {floor} out of {total}")
    quota = spare * p / p.sum()
    base = np.floor(quota + 1e-12).astype(int)
    left = spare - int(base.sum())
    frac = quota - base
    order = sorted(range(k), key=lambda i: (-round(frac[i], 12), i))
    for i in order[:left]:
        base[i] += 1
    return tuple(int(b + floor) for b in base)


def adapt_operator_probabilities(successes, total: Optional[int] = None, floor: int = 2) -> OperatorStats:
    """Success-proportional operator probabilities with add-one smoothing.

    ``p_i = (s_i + 1) / sum_j (s_j + 1)``. When ``total`` is given the next
    subpopulation sizes are apportioned from ``p``.
    """
    if isinstance(successes, OperatorStats):
        successes = successes.successes
    s = np.asarray(successes, dtype=float)
    if np.any(s < 0):
        raise ValueError("success counts must be non-negative")
    smoothed = s + 1.0
    p = smoothed / smoothed.sum()
    sizes = apportion(total, p, floor) if total is not None else ()
    return OperatorStats(tuple(int(v) for v in s), tuple(float(v) for v in p), sizes)


def _n_elite(size: int, k: float) -> int:
    return math.ceil(k * size - 1e-12) if k > 0 else 0


def communicate(
    subpops: Sequence[Population], k: float, rng, unique: bool = False
) -> tuple[list[Population], Population]:
    """Swap elites between subpopulations.

    The best ``ceil(k * size)`` members of every subpopulation form a shared
    pool; in each subpopulation the same number of worst members are
    overwritten by pool members drawn without replacement, preferring elites
    that came from other subpopulations.

    With ``unique=True`` a pool member whose genome already occurs in the
    receiving subpopulation is not copied in, so fewer (possibly zero)
    members are replaced. Without it, repeated migration in small
    populations fills them with copies and the difference vectors vanish.

    Returns the updated subpopulations and the elite pool.
    """
    gen = as_generator(rng)
    counts = [_n_elite(len(sp), k) for sp in subpops]
    dim = subpops[0].genomes.shape[1]
    pool_g, pool_f, pool_src = [], [], []
    for s, (sp, n) in enumerate(zip(subpops, counts)):
        if n == 0:
            continue
        top = np.argsort(sp.fitness, kind="stable")[:n]
        pool_g.append(sp.genomes[top])
        pool_f.append(sp.fitness[top])
        pool_src.extend([s] * n)
    if not pool_src:
        empty = Population(np.empty((0, dim)), np.empty(0))
        return [sp.copy() for sp in subpops], empty

    pool = Population(np.vstack(pool_g), np.concatenate(pool_f))
    src = np.asarray(pool_src)
    out = []
    for s, (sp, n) in enumerate(zip(subpops, counts)):
        sp = sp.copy()
        if n > 0:
            # worst first; among equal fitness the later member is replaced
            order = np.argsort(sp.fitness, kind="stable")
            eligible = np.ones(len(pool), dtype=bool)
            if unique:
                present = {g.tobytes() for g in sp.genomes}
                eligible = np.array([g.tobytes() not in present for g in pool.genomes])
            foreign = np.flatnonzero((src != s) & eligible)
            own = np.flatnonzero((src == s) & eligible)
            if foreign.size >= n:
                chosen = gen.choice(foreign, size=n, replace=False)
            else:
                m = min(n - foreign.size, own.size)
                extra = gen.choice(own, size=m, replace=False) if m else np.empty(0, dtype=int)
                chosen = np.concatenate([gen.permutation(foreign), extra]).astype(int)
            worst = order[::-1][: chosen.size]
            sp.genomes[worst] = pool.genomes[chosen]
            sp.fitness[worst] = pool.fitness[chosen]
        out.append(sp)
    return out, pool


def _slices(sizes: Sequence[int]) -> list[slice]:
    edges = np.concatenate([[0], np.cumsum(sizes)])
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def optimize(
    objective: Objective,
    bounds: Bounds,
    config: Optional[DemmogcConfig] = None,
    rng=0,
    callback: Optional[Callback] = None,
) -> OptimizeResult:
    """Minimize ``objective`` over ``bounds`` with DE-MMOGC.

    Returns the best solution ever evaluated and the best-so-far fitness
    after each of the ``G`` generations.
    """
    cfg = config or DemmogcConfig()
    if not isinstance(bounds, Bounds):
        bounds = Bounds(*bounds)
    gen = as_generator(rng)
    ops = [get_strategy(o) for o in cfg.operators]
    n_ops = len(ops)

    track = _Tracker(objective)
    pop = init_population(cfg.np, bounds, gen)
    pop.fitness = np.array([track(g) for g in pop.genomes])

    stats = adapt_operator_probabilities([0] * n_ops, cfg.np, cfg.min_subpop)
    sizes = stats.sizes
    archive = PBestArchive(cfg.archive_factor * cfg.np)
    elite_pool: Optional[np.ndarray] = None

    prob_hist, size_hist, success_hist = [], [], []
    for g in range(cfg.G):
        archive.add(pop.genomes, pop.fitness)
        slices = _slices(sizes)
        pop_best = pop.genomes[pop.best_index()]
        owner = np.empty(cfg.np, dtype=int)
        trials = np.empty_like(pop.genomes)

        for s, (op, sl) in enumerate(zip(ops, slices)):
            for i in range(sl.start, sl.stop):
                owner[i] = s
                best = pop_best
                if op.uses_best and elite_pool is not None and len(elite_pool):
                    best = elite_pool[gen.integers(len(elite_pool))]
                ctx = MutationContext(
                    pop.genomes, i, cfg.F, bounds,
                    best=best, pbest_archive=archive, p_best_fraction=cfg.p_best_fraction,
                )
                v = mutate(op, ctx, gen)
                trials[i] = binomial_crossover(pop.genomes[i], v, cfg.Cr, gen) if op.crossover else v

        successes = np.zeros(n_ops, dtype=int)
        for i in range(cfg.np):
            f = track(trials[i])
            if f < pop.fitness[i]:
                pop.genomes[i] = trials[i]
                pop.fitness[i] = f
                successes[owner[i]] += 1

        subpops = [Population(pop.genomes[sl].copy(), pop.fitness[sl].copy()) for sl in slices]
        subpops, pool = communicate(subpops, cfg.elite_fraction, gen, cfg.unique_migrants)
        for sl, sp in zip(slices, subpops):
            pop.genomes[sl] = sp.genomes
            pop.fitness[sl] = sp.fitness
        elite_pool = pool.genomes if len(pool) else None

        stats = adapt_operator_probabilities(successes, cfg.np, cfg.min_subpop)
        sizes = stats.sizes
        pop.generation = g + 1

        success_hist.append(successes.tolist())
        prob_hist.append(list(stats.probabilities))
        size_hist.append(list(sizes))
        track.close_generation()
        if callback is not None:
            callback(g, pop.genomes.copy(), pop.fitness.copy())

    if track.best_genome is None:
        raise RuntimeError("no evaluations were made")
    return track.result(
        "demmogc",
        cfg.to_dict(),
        successes=success_hist,
        probabilities=prob_hist,
        sizes=size_hist,
    )
