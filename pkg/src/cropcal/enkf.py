"""Ensemble Kalman filter for a scalar LAI state.

The forecast step propagates every ensemble member through the simplified
WOFOST growth rule with member-specific perturbed soil/crop/radiation
parameters plus additive process noise. On observation days the members
are pulled toward perturbed observations with the ensemble Kalman gain.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import ConfigurationError, as_generator
from .wofost import (
    DEFAULT_DAYS,
    IRRAD_REF,
    LAI0,
    CropVariety,
    Trajectory,
    _as_series,
    simulate_season,
)

__all__ = [
    "PERTURBED_PARAMETERS",
    "DEFAULT_PERTURBED",
    "EnkfConfig",
    "EnsembleState",
    "ensemble_mean",
    "ensemble_covariance",
    "kalman_gain",
    "perturb_observation",
    "update",
    "AssimilationResult",
    "Assimilator",
    "assimilate_season",
]

PERTURBED_PARAMETERS = ("rgrlai", "tbase", "irrad", "fc", "wp", "lai_max")
# the canopy ceiling is left exact by default: members saturating at different
# ceilings bias the ensemble mean on the plateau, which sparse observations cannot undo
DEFAULT_PERTURBED = ("rgrlai", "tbase", "irrad", "fc", "wp")


@dataclass(frozen=True)
class EnkfConfig:
    M: int = 50
    Q: float = 1e-4
    R: float = 0.1
    H: float = 1.0
    cadence: int = 5
    degraded_fraction: float = 0.10
    degrade_mode: str = "missing"
    noisy_factor: float = 5.0
    init_spread: float = 0.005
    perturbation_sd: float = 0.1
    perturbed: tuple = DEFAULT_PERTURBED
    observe: bool = True
    # subtract the ensemble mean from each parameter's draws
    center_perturbations: bool = True
    # same for each day's observation perturbations
    center_observation_noise: bool = True

    def __post_init__(self):
        object.__setattr__(self, "perturbed", tuple(self.perturbed))
        if self.M < 2:
            raise ConfigurationError("ensemble size M must be >= 2")
        if self.R <= 0 or self.Q < 0:
            raise ConfigurationError("need R > 0 and Q >= 0")
        if self.cadence < 1:
            raise ConfigurationError("observation cadence must be >= 1 day")
        if not 0.0 <= self.degraded_fraction <= 1.0:
            raise ConfigurationError("degraded fraction must lie in [0, 1]")
        if self.degrade_mode not in ("missing", "noisy"):
            raise ConfigurationError(f"degrade_mode must be 'missing' or 'noisy', got {self.degrade_mode!r}")
        bad = set(self.perturbed) - set(PERTURBED_PARAMETERS)
        if bad:
            raise ConfigurationError(f"cannot perturb {sorted(bad)}")
        if self.init_spread < 0 or self.perturbation_sd < 0:
            raise ConfigurationError("spreads must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["perturbed"] = list(self.perturbed)
        return d


@dataclass
class EnsembleState:
    members: np.ndarray
    day: int = 0

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=float)
        if self.members.ndim != 1:
            raise ValueError("ensemble members must form a 1-d array")

    @property
    def M(self) -> int:
        return self.members.size


def _members(state) -> np.ndarray:
    return state.members if isinstance(state, EnsembleState) else np.asarray(state, dtype=float)


def ensemble_mean(state) -> float:
    a = _members(state)
    if a.size == 0:
        raise ValueError("ensemble is empty")
    return float(a.mean())


def ensemble_covariance(state, mean: Optional[float] = None) -> float:
    """Unbiased (M - 1) sample variance of a scalar ensemble."""
    a = _members(state)
    if a.size < 2:
        raise ValueError("covariance needs at least two members")
    mu = a.mean() if mean is None else mean
    return float(np.sum((a - mu) ** 2) / (a.size - 1))


def kalman_gain(P: float, H: float = 1.0, R: float = 0.1) -> float:
    denom = H * P * H + R
    if denom == 0:
        raise ZeroDivisionError("H P H' + R is zero")
    return P * H / denom


def perturb_observation(y: float, R: float, rng, M: int = 50) -> np.ndarray:
    """``M`` perturbed copies ``y + v``, ``v ~ N(0, R)``."""
    if R < 0:
        raise ValueError("observation variance must be >= 0")
    return y + np.sqrt(R) * as_generator(rng).standard_normal(M)


def update(state, perturbed_obs, K: float, H: float = 1.0):
    """``a_i + K (y_i - H a_i)`` for every member; returns the same type it was given."""
    a = _members(state)
    y = np.asarray(perturbed_obs, dtype=float)
    if y.shape != a.shape:
        raise ValueError(f"{y.size} perturbed observations for {a.size} members")
    new = a + K * (y - H * a)
    if isinstance(state, EnsembleState):
        return EnsembleState(new, state.day)
    return new


def _limited_growth(a: np.ndarray, rate: np.ndarray, lmax: np.ndarray) -> np.ndarray:
    """Deterministic growth step for ensemble members.

    Below the ceiling this is the simulator's step (capped at the ceiling).
    Noise can push a member above its ceiling; there the same logistic term
    turns negative and pulls it back down, never past the ceiling. Clipping
    such members straight to the ceiling would bias the ensemble mean low.
    """
    step = a + rate * (1.0 - a / lmax)
    return np.where(a <= lmax, np.minimum(np.maximum(step, a), lmax), np.maximum(step, lmax))


@dataclass
class AssimilationResult:
    assimilated: Trajectory
    simulated: Trajectory
    observed: np.ndarray  # NaN on days without a usable observation
    gains: dict = field(default_factory=dict)  # day -> Kalman gain


class Assimilator:
    """EnKF run against a fixed target with every random draw made up front.

    Calling :meth:`run` with different candidate weather reuses the same
    initial ensemble, parameter perturbations, process noise, observation
    perturbations and degraded-day mask, so the assimilated trajectory is a
    deterministic function of the weather.
    """

    def __init__(
        self,
        variety: CropVariety,
        target: Trajectory,
        config: Optional[EnkfConfig] = None,
        rng=0,
        lai0: float = LAI0,
    ):
        self.variety = variety
        self.config = cfg = config or EnkfConfig()
        self.target = np.asarray(target.lai if isinstance(target, Trajectory) else target, dtype=float)
        self.days = d = self.target.size
        self.lai0 = lai0
        gen = as_generator(rng)
        M = cfg.M

        self.init = np.maximum(lai0 + cfg.init_spread * gen.standard_normal(M), 0.0)
        eps = {name: cfg.perturbation_sd * gen.standard_normal(M) for name in PERTURBED_PARAMETERS}
        if cfg.center_perturbations:
            eps = {name: e - e.mean() for name, e in eps.items()}
        self.scale = {
            name: (1.0 + eps[name]) if name in cfg.perturbed else np.ones(M) for name in PERTURBED_PARAMETERS
        }
        self.process_noise = np.sqrt(cfg.Q) * gen.standard_normal((d, M))

        obs_days = np.arange(cfg.cadence, d, cfg.cadence) if cfg.observe else np.arange(0)
        degraded = gen.random(obs_days.size) < cfg.degraded_fraction
        extra = np.sqrt(cfg.noisy_factor * cfg.R) * gen.standard_normal(obs_days.size)
        self.obs_perturbation = np.sqrt(cfg.R) * gen.standard_normal((obs_days.size, M))
        if cfg.center_observation_noise:
            self.obs_perturbation -= self.obs_perturbation.mean(axis=1, keepdims=True)

        observed = np.full(d, np.nan)
        for k, t in enumerate(obs_days):
            if degraded[k] and cfg.degrade_mode == "missing":
                continue
            observed[t] = self.target[t] + (extra[k] if degraded[k] else 0.0)
        self.observed = observed
        self._obs_index = {int(t): k for k, t in enumerate(obs_days) if np.isfinite(observed[t])}

        v = variety
        s = self.scale
        self.rgrlai = v.rgrlai * s["rgrlai"]
        self.tbase = v.tbase * s["tbase"]
        self.lai_max = v.lai_max * s["lai_max"]
        self.irrad_scale = s["irrad"]
        fc = v.fc * s["fc"]
        wp = v.wp * s["wp"]
        smtab = fc if v.smtab_max is None else v.smtab_max
        self.moisture = np.clip((smtab - wp) / np.maximum(fc - wp, 1e-12), 0.0, 1.0)

    def run(self, weather, simulate: bool = True) -> AssimilationResult:
        """Assimilate over the season for one candidate weather series (dict or sequence).

        ``simulate=False`` skips the free-running comparison run (its slot is
        then ``None``), which is what the calibration objective wants.
        """
        cfg = self.config
        tavg, rain, irrad = _as_series(weather, self.days)
        d = self.days
        rain_ratio = np.clip(rain / self.variety.rain_ref(d), 0.0, 1.0)
        # (d, M) member growth rates before the canopy-size limiter
        rate = (
            self.rgrlai
            * np.maximum(0.0, tavg[:, None] - self.tbase)
            * np.minimum(rain_ratio[:, None], self.moisture)
            * (irrad[:, None] / IRRAD_REF)
            * self.irrad_scale
        )
        lmax = self.lai_max
        a = self.init.copy()
        out = np.empty(d)
        out[0] = a.mean()
        gains = {}
        for t in range(1, d):
            a = np.maximum(_limited_growth(a, rate[t - 1], lmax) + self.process_noise[t], 0.0)
            k = self._obs_index.get(t)
            if k is not None:
                mu = a.mean()
                P = float(np.dot(a - mu, a - mu) / (a.size - 1))
                K = kalman_gain(P, cfg.H, cfg.R)
                y = self.observed[t] + self.obs_perturbation[k]
                a = a + K * (y - cfg.H * a)
                gains[t] = K
            out[t] = a.mean()
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("ensemble propagation produced non-finite LAI")
        simulated = None
        if simulate:
            simulated = simulate_season(self.variety, {"tavg": tavg, "rain": rain, "irrad": irrad}, self.lai0)
        return AssimilationResult(Trajectory(out), simulated, self.observed.copy(), gains)


def assimilate_season(
    variety: CropVariety,
    weather,
    target: Trajectory,
    config: Optional[EnkfConfig] = None,
    rng=0,
    lai0: float = LAI0,
) -> AssimilationResult:
    """Assimilate ``target`` observations into the forecast driven by ``weather``.

    Returns the ensemble-mean (assimilated) trajectory together with the
    free-running deterministic simulation for the same weather.
    """
    return Assimilator(variety, target, config, rng, lai0).run(weather)
