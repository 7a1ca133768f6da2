"""Shared types for every optimizer: bounds, solutions, populations and seeded streams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "ConfigurationError",
    "ObjectiveError",
    "Bounds",
    "Solution",
    "Population",
    "RngStream",
    "OptimizeResult",
    "Objective",
    "Callback",
    "derive_stream_id",
    "init_population",
    "clamp",
    "evaluate",
    "MIN_POPULATION",
]

MIN_POPULATION = 4


class ConfigurationError(ValueError):
    """Invalid configuration: bad bounds, unknown names, impossible sizes."""


class ObjectiveError(RuntimeError):
    """The objective produced a value an optimizer cannot rank."""


Objective = Callable[[np.ndarray], float]
# callback(generation, genomes, fitness) called once per completed generation
Callback = Callable[[int, np.ndarray, np.ndarray], None]


@dataclass(frozen=True)
class Bounds:
    """Box constraint ``lower <= x <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ConfigurationError(
                f"bounds must be two 1-d arrays of equal length, got {lower.shape} and {upper.shape}"
            )
        if lower.size < 1:
            raise ConfigurationError("bounds need at least one dimension")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ConfigurationError("bounds must be finite")
        if np.any(lower > upper):
            raise ConfigurationError(f"inverted bounds: lower={lower}, upper={upper}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "Bounds":
        """Build from ``[(lo, hi), ...]`` per dimension."""
        arr = np.asarray(list(pairs), dtype=float)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, genomes: np.ndarray) -> bool:
        g = np.asarray(genomes, dtype=float)
        return bool(np.all(g >= self.lower) and np.all(g <= self.upper))

    def __eq__(self, other):
        if not isinstance(other, Bounds):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))


@dataclass(frozen=True)
class Solution:
    genome: np.ndarray
    fitness: float = float("nan")

    def __post_init__(self):
        g = np.array(self.genome, dtype=float)
        g.setflags(write=False)
        object.__setattr__(self, "genome", g)
        object.__setattr__(self, "fitness", float(self.fitness))

    @property
    def evaluated(self) -> bool:
        return bool(np.isfinite(self.fitness))

    def __eq__(self, other):
        if not isinstance(other, Solution):
            return NotImplemented
        same_fit = self.fitness == other.fitness or (
            np.isnan(self.fitness) and np.isnan(other.fitness)
        )
        return np.array_equal(self.genome, other.genome) and same_fit

    def __hash__(self):
        return hash((self.genome.tobytes(), self.fitness))


@dataclass
class Population:
    """Population stored as a genome matrix plus a fitness vector (NaN = unevaluated)."""

    genomes: np.ndarray
    fitness: np.ndarray
    generation: int = 0

    def __post_init__(self):
        self.genomes = np.asarray(self.genomes, dtype=float)
        self.fitness = np.asarray(self.fitness, dtype=float)
        if self.genomes.ndim != 2 or self.fitness.shape != (self.genomes.shape[0],):
            raise ValueError("genomes must be (np, dim) and fitness (np,)")

    def __len__(self) -> int:
        return self.genomes.shape[0]

    @property
    def members(self) -> list[Solution]:
        return [Solution(g, f) for g, f in zip(self.genomes, self.fitness)]

    @property
    def evaluated(self) -> bool:
        return bool(np.all(np.isfinite(self.fitness)))

    def best_index(self) -> int:
        # argmin returns the first minimum, so ties keep the lower index
        return int(np.argmin(self.fitness))

    def best(self) -> Solution:
        i = self.best_index()
        return Solution(self.genomes[i], self.fitness[i])

    def copy(self) -> "Population":
        return Population(self.genomes.copy(), self.fitness.copy(), self.generation)


def derive_stream_id(*parts) -> int:
    """Stable 63-bit id from arbitrary labels; independent of PYTHONHASHSEED."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Each call to :meth:`generator` returns a fresh generator positioned at the
    start of the stream, so two consumers holding the same stream see the
    same draws.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ConfigurationError("seed and stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, *labels) -> "RngStream":
        return RngStream(self.seed, derive_stream_id(self.stream_id, *labels))


def as_generator(rng) -> np.random.Generator:
    """Accept an :class:`RngStream`, a ``Generator`` or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")


def init_population(np_: int, bounds: Bounds, rng) -> Population:
    """Uniform random population ``lower + (upper - lower) * U(0, 1)``."""
    if int(np_) < MIN_POPULATION:
        raise ConfigurationError(f"population size must be >= {MIN_POPULATION}, got {np_}")
    if not isinstance(bounds, Bounds):
        bounds = Bounds(*bounds)
    gen = as_generator(rng)
    u = gen.random((int(np_), bounds.dim))
    genomes = bounds.lower + bounds.span * u
    # guards against lower + span*u rounding past upper
    genomes = np.clip(genomes, bounds.lower, bounds.upper)
    return Population(genomes, np.full(int(np_), np.nan), 0)


def clamp(genome, bounds: Bounds) -> np.ndarray:
    g = np.asarray(genome, dtype=float)
    if g.shape[-1] != bounds.dim:
        raise ValueError(f"genome has {g.shape[-1]} coordinates, bounds have {bounds.dim}")
    return np.clip(g, bounds.lower, bounds.upper)


def evaluate(objective: Objective, genome: np.ndarray) -> float:
    value = float(objective(genome))
    if not np.isfinite(value):
        raise ObjectiveError(f"objective returned {value!r} at genome {np.asarray(genome).tolist()}")
    return value


@dataclass
class OptimizeResult:
    """Outcome shared by DE-MMOGC and every baseline.

    ``history[g]`` is the best-so-far fitness after generation ``g + 1``.
    """

    best: Solution
    history: np.ndarray
    n_evals: int
    algorithm: str
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


class _Tracker:
    """Best-so-far bookkeeping with incumbent preference on ties."""

    def __init__(self, objective: Objective):
        self.objective = objective
        self.n_evals = 0
        self.best_genome: Optional[np.ndarray] = None
        self.best_fitness = np.inf
        self.history: list[float] = []

    def __call__(self, genome: np.ndarray) -> float:
        f = evaluate(self.objective, genome)
        self.n_evals += 1
        if f < self.best_fitness:
            self.best_fitness = f
            self.best_genome = np.array(genome, dtype=float)
        return f

    def close_generation(self):
        self.history.append(self.best_fitness)

    def result(self, algorithm: str, params: dict, **extras) -> OptimizeResult:
        return OptimizeResult(
            best=Solution(self.best_genome, self.best_fitness),
            history=np.asarray(self.history, dtype=float),
            n_evals=self.n_evals,
            algorithm=algorithm,
            params=dict(params),
            extras=extras,
        )
