"""DE mutation operators, binomial crossover and p-best selection.

Every operator produces the mutant from the target vector ``x_i``, the
population best ``x_best``, an optional archive member ``x_pbest`` and
parents ``r1..r5`` drawn without replacement from the population, all
distinct from the target. Mutants are clamped to the box before they are
returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Bounds, Solution, as_generator

__all__ = [
    "MutationStrategy",
    "MutationContext",
    "STRATEGIES",
    "get_strategy",
    "register_strategy",
    "sample_parents",
    "mutate",
    "binomial_crossover",
    "select_pbest",
    "PBestArchive",
]


# formula(x_i, parents, best, pbest, F) -> unclamped mutant
Formula = Callable[[np.ndarray, np.ndarray, np.ndarray, Optional[np.ndarray], float], np.ndarray]


@dataclass(frozen=True)
class MutationStrategy:
    name: str
    n_parents: int
    formula: Formula = field(repr=False, compare=False)
    uses_best: bool = False
    uses_pbest: bool = False
    # current-to-rand/1 is used in its rotation-invariant form, without crossover
    crossover: bool = True


def _rand_1(x, r, best, pbest, F):
    return r[0] + F * (r[1] - r[2])


def _current_1(x, r, best, pbest, F):
    return x + F * (r[0] - r[1])


def _best_1(x, r, best, pbest, F):
    return best + F * (r[0] - r[1])


def _rand_2(x, r, best, pbest, F):
    return r[0] + F * (r[1] - r[2]) + F * (r[3] - r[4])


def _best_2(x, r, best, pbest, F):
    return best + F * (r[0] - r[1]) + F * (r[2] - r[3])


def _current_to_best_1(x, r, best, pbest, F):
    return x + F * (best - x) + F * (r[0] - r[1])


def _current_to_rand_1(x, r, best, pbest, F):
    return x + F * (r[0] - x) + F * (r[1] - r[2])


def _current_to_pbest_1(x, r, best, pbest, F):
    return x + F * (pbest - x) + F * (r[0] - r[1])


STRATEGIES: dict[str, MutationStrategy] = {}


def register_strategy(strategy: MutationStrategy) -> MutationStrategy:
    STRATEGIES[strategy.name] = strategy
    return strategy


for _s in (
    MutationStrategy("rand/1", 3, _rand_1),
    MutationStrategy("current/1", 2, _current_1),
    MutationStrategy("best/1", 2, _best_1, uses_best=True),
    MutationStrategy("rand/2", 5, _rand_2),
    MutationStrategy("best/2", 4, _best_2, uses_best=True),
    MutationStrategy("current-to-best/1", 2, _current_to_best_1, uses_best=True),
    MutationStrategy("current-to-rand/1", 3, _current_to_rand_1, crossover=False),
    MutationStrategy("current-to-pbest/1", 2, _current_to_pbest_1, uses_pbest=True),
):
    register_strategy(_s)


def get_strategy(strategy) -> MutationStrategy:
    if isinstance(strategy, MutationStrategy):
        return strategy
    name = str(strategy).removeprefix("DE/").removesuffix("/bin")
    try:
        return STRATEGIES[name]
    except KeyError:
        raise KeyError(f"unknown mutation strategy {strategy!r}; known: {sorted(STRATEGIES)}") from None


class PBestArchive:
    """Bounded store of past parent solutions for current-to-pbest/1.

    Genomes are deduplicated; once ``capacity`` is exceeded the oldest
    entries are evicted first.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("archive capacity must be positive")
        self.capacity = int(capacity)
        self._genomes: list[np.ndarray] = []
        self._fitness: list[float] = []
        self._keys: list[bytes] = []

    def __len__(self) -> int:
        return len(self._genomes)

    def add(self, genomes: np.ndarray, fitness: np.ndarray) -> None:
        seen = set(self._keys)
        for g, f in zip(np.atleast_2d(genomes), np.atleast_1d(fitness)):
            key = np.asarray(g, dtype=float).tobytes()
            if key in seen:
                continue
            seen.add(key)
            self._keys.append(key)
            self._genomes.append(np.array(g, dtype=float))
            self._fitness.append(float(f))
        overflow = len(self._genomes) - self.capacity
        if overflow > 0:
            del self._genomes[:overflow], self._fitness[:overflow], self._keys[:overflow]

    @property
    def genomes(self) -> np.ndarray:
        return np.array(self._genomes)

    @property
    def fitness(self) -> np.ndarray:
        return np.array(self._fitness)

    def solutions(self) -> list[Solution]:
        return [Solution(g, f) for g, f in zip(self._genomes, self._fitness)]


def select_pbest(archive, p: float, rng) -> Solution:
    """Uniformly pick one of the best ``ceil(p * len(archive))`` archive members.

    ``archive`` is a list of :class:`Solution` or a :class:`PBestArchive`.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if isinstance(archive, PBestArchive):
        genomes, fitness = archive.genomes, archive.fitness
    else:
        archive = list(archive)
        genomes = np.array([s.genome for s in archive]) if archive else np.empty((0, 0))
        fitness = np.array([s.fitness for s in archive])
    n = len(fitness)
    if n == 0:
        raise ValueError("cannot select a p-best member from an empty archive")
    top = max(1, math.ceil(p * n - 1e-12))
    order = np.argsort(fitness, kind="stable")[:top]
    pick = order[as_generator(rng).integers(top)]
    return Solution(genomes[pick], fitness[pick])


def sample_parents(n: int, k: int, exclude: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` distinct indices from ``range(n)`` without ``exclude``."""
    if k > n - 1:
        raise ValueError(f"need {k} distinct parents besides the target, population has {n}")
    idx = rng.choice(n - 1, size=k, replace=False)
    return idx + (idx >= exclude)


@dataclass
class MutationContext:
    """Everything an operator may read when building one mutant."""

    population: np.ndarray
    target_index: int
    F: float
    bounds: Bounds
    best: Optional[np.ndarray] = None
    pbest_archive: Optional[object] = None
    p_best_fraction: float = 0.3

    def __post_init__(self):
        self.population = np.asarray(self.population, dtype=float)
        if not (np.isfinite(self.F) and self.F >= 0):
            raise ValueError(f"scaling factor must be finite and non-negative, got {self.F}")


def mutate(strategy, ctx: MutationContext, rng, parents: Optional[Sequence[int]] = None) -> np.ndarray:
    """Build a clamped mutant for ``ctx.target_index``.

    ``parents`` overrides random parent sampling (indices into the
    population); ``ctx.pbest_archive`` may also be a single genome to pin
    ``x_pbest``.
    """
    strat = get_strategy(strategy)
    gen = as_generator(rng)
    pop = ctx.population
    x = pop[ctx.target_index]

    pbest = None
    if strat.uses_pbest:
        arch = ctx.pbest_archive
        if arch is None:
            raise ValueError(f"{strat.name} needs a non-empty p-best archive")
        if isinstance(arch, np.ndarray) and arch.ndim == 1:
            pbest = arch
        else:
            pbest = select_pbest(arch, ctx.p_best_fraction, gen).genome

    if parents is None:
        idx = sample_parents(len(pop), strat.n_parents, ctx.target_index, gen)
    else:
        idx = np.asarray(parents, dtype=int)
        if idx.size < strat.n_parents:
            raise ValueError(f"{strat.name} needs {strat.n_parents} parents, got {idx.size}")
    r = pop[idx]

    best = ctx.best
    if strat.uses_best and best is None:
        raise ValueError(f"{strat.name} needs the best solution in the context")

    v = strat.formula(x, r, best, pbest, ctx.F)
    return np.clip(v, ctx.bounds.lower, ctx.bounds.upper)


def binomial_crossover(target, mutant, Cr: float, rng) -> np.ndarray:
    """Take each mutant coordinate with probability ``Cr``; one random index always."""
    target = np.asarray(target, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if target.shape != mutant.shape:
        raise ValueError(f"target {target.shape} and mutant {mutant.shape} differ in length")
    if not 0.0 <= Cr <= 1.0:
        raise ValueError(f"crossover rate must lie in [0, 1], got {Cr}")
    gen = as_generator(rng)
    d = target.size
    j_rand = gen.integers(d)
    take = gen.random(d) < Cr
    take[j_rand] = True
    return np.where(take, mutant, target)
