"""Reference optimizers: canonical DE, a real-coded GA, global-best PSO and HHO.

All four take ``(objective, bounds, config, rng, callback)`` and return an
:class:`~cropcal.core.OptimizeResult` with one best-so-far entry per
generation, so the harness can treat them the same way as DE-MMOGC.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import (
    Bounds,
    Callback,
    ConfigurationError,
    Objective,
    OptimizeResult,
    _Tracker,
    as_generator,
    init_population,
)
from .mutation import MutationContext, binomial_crossover, get_strategy, mutate

__all__ = [
    "DEConfig",
    "GAConfig",
    "PSOConfig",
    "HHOConfig",
    "de_optimize",
    "ga_optimize",
    "pso_optimize",
    "hho_optimize",
    "blend_crossover",
    "gaussian_mutation",
    "tournament_select",
    "pso_velocity",
    "levy_flight",
    "hard_besiege",
]


def _check_common(np_: int, G: int):
    if np_ < 4:
        raise ConfigurationError(f"population size must be >= 4, got {np_}")
    if G < 0:
        raise ConfigurationError("iteration count must be >= 0")


def _as_bounds(bounds) -> Bounds:
    return bounds if isinstance(bounds, Bounds) else Bounds(*bounds)


# ---------------------------------------------------------------- DE


@dataclass(frozen=True)
class DEConfig:
    np: int = 10
    G: int = 50
    strategy: str = "best/1"
    F: tuple = (0.5, 1.0)
    Cr: float = 0.7

    def __post_init__(self):
        _check_common(self.np, self.G)
        get_strategy(self.strategy)
        lo, hi = (float(v) for v in (self.F if np.ndim(self.F) else (self.F, self.F)))
        if not 0 <= lo <= hi:
            raise ConfigurationError(f"bad F interval {self.F}")
        object.__setattr__(self, "F", (lo, hi))
        if not 0.0 <= self.Cr <= 1.0:
            raise ConfigurationError("Cr must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["F"] = list(self.F)
        return d


def de_optimize(
    objective: Objective,
    bounds,
    config: Optional[DEConfig] = None,
    rng=0,
    callback: Optional[Callback] = None,
) -> OptimizeResult:
    """Single-operator DE (best/1/bin by default) with greedy selection.

    F is drawn once per generation from ``config.F``; a collapsed interval
    uses its value without consuming a random draw.
    """
    cfg = config or DEConfig()
    bounds = _as_bounds(bounds)
    gen = as_generator(rng)
    op = get_strategy(cfg.strategy)
    if op.uses_pbest:
        raise ConfigurationError("canonical DE does not keep a p-best archive")

    track = _Tracker(objective)
    pop = init_population(cfg.np, bounds, gen)
    pop.fitness = np.array([track(g) for g in pop.genomes])

    lo, hi = cfg.F
    for g in range(cfg.G):
        F = lo if lo == hi else gen.uniform(lo, hi)
        best = pop.genomes[pop.best_index()]
        trials = np.empty_like(pop.genomes)
        for i in range(cfg.np):
            ctx = MutationContext(pop.genomes, i, F, bounds, best=best)
            v = mutate(op, ctx, gen)
            trials[i] = binomial_crossover(pop.genomes[i], v, cfg.Cr, gen) if op.crossover else v
        for i in range(cfg.np):
            f = track(trials[i])
            if f < pop.fitness[i]:
                pop.genomes[i] = trials[i]
                pop.fitness[i] = f
        pop.generation = g + 1
        track.close_generation()
        if callback is not None:
            callback(g, pop.genomes.copy(), pop.fitness.copy())
    return track.result("de", cfg.to_dict())


# ---------------------------------------------------------------- GA


@dataclass(frozen=True)
class GAConfig:
    np: int = 10
    G: int = 50
    mu: float = 0.0
    sigma: float = 1.0
    indpb: float = 0.2
    alpha: float = 0.5
    tournament: int = 3
    elitism: int = 1

    def __post_init__(self):
        _check_common(self.np, self.G)
        if not 0.0 <= self.indpb <= 1.0:
            raise ConfigurationError("indpb must lie in [0, 1]")
        if self.alpha < 0 or self.sigma < 0:
            raise ConfigurationError("alpha and sigma must be non-negative")
        if not 1 <= self.tournament <= self.np or not 0 <= self.elitism < self.np:
            raise ConfigurationError("bad tournament size or elite count")

    def to_dict(self) -> dict:
        return asdict(self)


def tournament_select(fitness: np.ndarray, k: int, size: int, rng) -> np.ndarray:
    """Indices of ``k`` winners, each the fittest of ``size`` random entrants."""
    gen = as_generator(rng)
    entrants = gen.integers(len(fitness), size=(k, size))
    return entrants[np.arange(k), np.argmin(fitness[entrants], axis=1)]


def blend_crossover(a, b, alpha: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """BLX-alpha: each child coordinate uniform on the parents' interval widened by ``alpha``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    gen = as_generator(rng)
    gamma = (1.0 + 2.0 * alpha) * gen.random((2, a.size)) - alpha
    c1 = (1.0 - gamma[0]) * a + gamma[0] * b
    c2 = gamma[1] * a + (1.0 - gamma[1]) * b
    return c1, c2


def gaussian_mutation(x, mu: float, sigma: float, indpb: float, rng) -> np.ndarray:
    gen = as_generator(rng)
    x = np.array(x, dtype=float)
    hit = gen.random(x.size) < indpb
    noise = gen.normal(mu, sigma, x.size)
    x[hit] += noise[hit]
    return x


def ga_optimize(
    objective: Objective,
    bounds,
    config: Optional[GAConfig] = None,
    rng=0,
    callback: Optional[Callback] = None,
) -> OptimizeResult:
    """Generational GA: tournament selection, blend crossover, Gaussian mutation, elitism."""
    cfg = config or GAConfig()
    bounds = _as_bounds(bounds)
    gen = as_generator(rng)
    track = _Tracker(objective)
    pop = init_population(cfg.np, bounds, gen)
    pop.fitness = np.array([track(g) for g in pop.genomes])

    n_children = cfg.np - cfg.elitism
    for g in range(cfg.G):
        elite = np.argsort(pop.fitness, kind="stable")[: cfg.elitism]
        parents = tournament_select(pop.fitness, n_children + (n_children % 2), cfg.tournament, gen)
        children = []
        for a, b in zip(parents[0::2], parents[1::2]):
            c1, c2 = blend_crossover(pop.genomes[a], pop.genomes[b], cfg.alpha, gen)
            children.extend([c1, c2])
        children = [
            np.clip(gaussian_mutation(c, cfg.mu, cfg.sigma, cfg.indpb, gen), bounds.lower, bounds.upper)
            for c in children[:n_children]
        ]
        child_fit = [track(c) for c in children]
        genomes = np.vstack([pop.genomes[elite]] + [np.atleast_2d(c) for c in children])
        fitness = np.concatenate([pop.fitness[elite], child_fit])
        pop.genomes, pop.fitness = genomes, fitness
        pop.generation = g + 1
        track.close_generation()
        if callback is not None:
            callback(g, pop.genomes.copy(), pop.fitness.copy())
    return track.result("ga", cfg.to_dict())


# ---------------------------------------------------------------- PSO


@dataclass(frozen=True)
class PSOConfig:
    np: int = 10
    G: int = 50
    w: float = 0.729
    c1: float = 1.49445
    c2: float = 1.49445
    vmax_fraction: float = 0.2

    def __post_init__(self):
        _check_common(self.np, self.G)
        if self.vmax_fraction <= 0:
            raise ConfigurationError("vmax_fraction must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def pso_velocity(v, x, pbest, gbest, w, c1, c2, vmax, rng) -> np.ndarray:
    """``w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)``, clipped to ``[-vmax, vmax]``."""
    gen = as_generator(rng)
    r1 = gen.random(np.shape(x))
    r2 = gen.random(np.shape(x))
    new = w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)
    return np.clip(new, -vmax, vmax)


def pso_optimize(
    objective: Objective,
    bounds,
    config: Optional[PSOConfig] = None,
    rng=0,
    callback: Optional[Callback] = None,
) -> OptimizeResult:
    """Global-best PSO with constriction-equivalent coefficients; velocities start at zero."""
    cfg = config or PSOConfig()
    bounds = _as_bounds(bounds)
    gen = as_generator(rng)
    track = _Tracker(objective)
    pop = init_population(cfg.np, bounds, gen)
    x = pop.genomes
    fit = np.array([track(g) for g in x])
    v = np.zeros_like(x)
    vmax = cfg.vmax_fraction * bounds.span
    pbest, pbest_f = x.copy(), fit.copy()
    gi = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[gi].copy(), pbest_f[gi]

    for g in range(cfg.G):
        v = pso_velocity(v, x, pbest, gbest, cfg.w, cfg.c1, cfg.c2, vmax, gen)
        x = np.clip(x + v, bounds.lower, bounds.upper)
        fit = np.array([track(p) for p in x])
        better = fit < pbest_f
        pbest[better], pbest_f[better] = x[better], fit[better]
        gi = int(np.argmin(pbest_f))
        if pbest_f[gi] < gbest_f:
            gbest, gbest_f = pbest[gi].copy(), pbest_f[gi]
        track.close_generation()
        if callback is not None:
            callback(g, x.copy(), fit.copy())
    return track.result("pso", cfg.to_dict())


# ---------------------------------------------------------------- HHO


@dataclass(frozen=True)
class HHOConfig:
    np: int = 10
    G: int = 50
    levy_beta: float = 1.5

    def __post_init__(self):
        _check_common(self.np, self.G)

    def to_dict(self) -> dict:
        return asdict(self)


def levy_flight(dim: int, beta: float, rng) -> np.ndarray:
    """Mantegna's algorithm for Lévy-stable steps."""
    gen = as_generator(rng)
    sigma = (
        math.gamma(1 + beta) * math.sin(math.pi * beta / 2)
        / (math.gamma((1 + beta) / 2) * beta * 2 ** ((beta - 1) / 2))
    ) ** (1 / beta)
    u = gen.normal(0.0, 1.0, dim) * sigma
    v = gen.normal(0.0, 1.0, dim)
    return 0.01 * u / np.abs(v) ** (1 / beta)


def hard_besiege(x, rabbit, E) -> np.ndarray:
    return rabbit - E * np.abs(rabbit - x)


def hho_optimize(
    objective: Objective,
    bounds,
    config: Optional[HHOConfig] = None,
    rng=0,
    callback: Optional[Callback] = None,
) -> OptimizeResult:
    """Harris hawks optimization (Heidari et al., 2019).

    Escape energy ``E = 2 E0 (1 - t/T)`` with ``E0 ~ U(-1, 1)`` picks the
    phase: exploration for ``|E| >= 1``, otherwise soft or hard besiege,
    with progressive rapid dives (Lévy flights, greedy acceptance) when the
    random escape chance ``r < 0.5``.
    """
    cfg = config or HHOConfig()
    bounds = _as_bounds(bounds)
    gen = as_generator(rng)
    track = _Tracker(objective)
    pop = init_population(cfg.np, bounds, gen)
    x = pop.genomes
    fit = np.array([track(g) for g in x])
    ri = int(np.argmin(fit))
    rabbit, rabbit_f = x[ri].copy(), fit[ri]
    lo, hi, dim = bounds.lower, bounds.upper, bounds.dim
    T = max(cfg.G, 1)

    def clip(p):
        return np.clip(p, lo, hi)

    for t in range(cfg.G):
        for i in range(cfg.np):
            E0 = 2.0 * gen.random() - 1.0
            E = 2.0 * E0 * (1.0 - t / T)
            J = 2.0 * (1.0 - gen.random())
            if abs(E) >= 1.0:
                q = gen.random()
                if q >= 0.5:
                    xr = x[gen.integers(cfg.np)]
                    r1, r2 = gen.random(2)
                    new = xr - r1 * np.abs(xr - 2.0 * r2 * x[i])
                else:
                    r3, r4 = gen.random(2)
                    new = (rabbit - x.mean(axis=0)) - r3 * (lo + r4 * (hi - lo))
                x[i] = clip(new)
                fit[i] = track(x[i])
                continue

            r = gen.random()
            if r >= 0.5 and abs(E) >= 0.5:
                new = (rabbit - x[i]) - E * np.abs(J * rabbit - x[i])
            elif r >= 0.5:
                new = hard_besiege(x[i], rabbit, E)
            else:
                anchor = x[i] if abs(E) >= 0.5 else x.mean(axis=0)
                Y = clip(rabbit - E * np.abs(J * rabbit - anchor))
                Z = clip(Y + gen.random(dim) * levy_flight(dim, cfg.levy_beta, gen))
                fy = track(Y)
                if fy < fit[i]:
                    x[i], fit[i] = Y, fy
                    continue
                fz = track(Z)
                if fz < fit[i]:
                    x[i], fit[i] = Z, fz
                continue
            x[i] = clip(new)
            fit[i] = track(x[i])

        bi = int(np.argmin(fit))
        if fit[bi] < rabbit_f:
            rabbit, rabbit_f = x[bi].copy(), fit[bi]
        track.close_generation()
        if callback is not None:
            callback(t, x.copy(), fit.copy())
    return track.result("hho", cfg.to_dict())
