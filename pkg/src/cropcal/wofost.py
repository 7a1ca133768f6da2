"""Simplified WOFOST: daily LAI growth limited by temperature, water, radiation and canopy size.

Daily increment::

    dLAI = RGRLAI * max(0, TAVG - TBASE) * water * IRRAD / IRRAD_REF * (1 - LAI / LAI_MAX)

where ``water = min(clip(RAIN / rain_ref, 0, 1), soil_moisture)`` and
``soil_moisture = clip((SMTAB_MAX - WP) / (FC - WP), 0, 1)``. ``rain_ref``
is the variety's mid-range seasonal rainfall spread evenly over the season.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import ConfigurationError, as_generator

__all__ = [
    "IRRAD_REF",
    "DEFAULT_DAYS",
    "LAI0",
    "CropVariety",
    "DailyWeather",
    "Trajectory",
    "temperature_effect",
    "soil_moisture",
    "water_availability",
    "lai_step",
    "simulate_season",
    "season_weather",
    "variety_presets",
    "get_variety",
    "target_trajectory",
]

IRRAD_REF = 1.5e7  # J/m2/day
DEFAULT_DAYS = 120
LAI0 = 0.01


@dataclass(frozen=True)
class CropVariety:
    name: str
    crop: str
    lai_max: float
    rgrlai: float
    tbase: float
    fc: float
    wp: float
    bd: float
    tavg_range: tuple
    rain_range: tuple
    irrad: float = IRRAD_REF
    # None means "at field capacity"
    smtab_max: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "tavg_range", tuple(float(v) for v in self.tavg_range))
        object.__setattr__(self, "rain_range", tuple(float(v) for v in self.rain_range))
        if not self.wp < self.fc:
            raise ConfigurationError(f"{self.name}: wilting point {self.wp} must be below field capacity {self.fc}")
        if self.rgrlai <= 0 or self.lai_max <= 0:
            raise ConfigurationError(f"{self.name}: RGRLAI and LAI_MAX must be positive")
        if self.irrad < 0:
            raise ConfigurationError(f"{self.name}: IRRAD must be >= 0")
        for label, (lo, hi) in (("TAVG", self.tavg_range), ("RAIN", self.rain_range)):
            if not lo < hi:
                raise ConfigurationError(f"{self.name}: {label} range {lo}..{hi} is degenerate")
        if self.rain_range[0] < 0:
            raise ConfigurationError(f"{self.name}: rainfall cannot be negative")

    @property
    def smtab(self) -> float:
        return self.fc if self.smtab_max is None else self.smtab_max

    @property
    def tavg_mid(self) -> float:
        return 0.5 * sum(self.tavg_range)

    @property
    def rain_mid(self) -> float:
        return 0.5 * sum(self.rain_range)

    def rain_ref(self, days: int = DEFAULT_DAYS) -> float:
        """Daily reference rainfall (mm/day)."""
        return self.rain_mid / days

    def bounds(self):
        from .core import Bounds

        return Bounds([self.tavg_range[0], self.rain_range[0]], [self.tavg_range[1], self.rain_range[1]])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tavg_range"] = list(self.tavg_range)
        d["rain_range"] = list(self.rain_range)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "CropVariety":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown variety fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None


@dataclass(frozen=True)
class DailyWeather:
    tavg: float
    rain: float
    irrad: float = IRRAD_REF

    def __post_init__(self):
        if self.rain < 0 or self.irrad < 0:
            raise ValueError("RAIN and IRRAD must be non-negative")


@dataclass(frozen=True)
class Trajectory:
    lai: np.ndarray
    days: int = field(init=False)

    def __post_init__(self):
        lai = np.array(self.lai, dtype=float)
        lai.setflags(write=False)
        object.__setattr__(self, "lai", lai)
        object.__setattr__(self, "days", int(lai.size))

    def __len__(self):
        return self.days

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self.lai, other.lai)

    def __hash__(self):
        return hash(self.lai.tobytes())


def temperature_effect(tavg, tbase):
    """Degrees above the base temperature, never negative."""
    return np.maximum(0.0, np.asarray(tavg, dtype=float) - tbase)[()]


def soil_moisture(smtab_max, fc, wp):
    if np.any(np.asarray(fc) <= np.asarray(wp)):
        raise ConfigurationError("field capacity must exceed the wilting point")
    return np.clip((np.asarray(smtab_max, dtype=float) - wp) / (np.asarray(fc) - wp), 0.0, 1.0)[()]


def water_availability(rain, rain_ref, moisture):
    """Limiting-factor minimum of normalized daily rain and soil moisture."""
    if np.any(np.asarray(rain_ref) <= 0):
        raise ValueError("reference rainfall must be positive")
    ratio = np.clip(np.asarray(rain, dtype=float) / rain_ref, 0.0, 1.0)
    return np.minimum(ratio, moisture)[()]


def _growth(current, rgrlai, temp_eff, water, irrad_norm, lai_max):
    delta = rgrlai * temp_eff * water * irrad_norm * (1.0 - current / lai_max)
    return np.maximum(delta, 0.0)


def lai_step(current_lai: float, variety: CropVariety, weather: DailyWeather, days: int = DEFAULT_DAYS) -> float:
    """One day of canopy growth; returns the (non-negative) LAI increment."""
    temp = temperature_effect(weather.tavg, variety.tbase)
    moist = soil_moisture(variety.smtab, variety.fc, variety.wp)
    water = water_availability(weather.rain, variety.rain_ref(days), moist)
    delta = _growth(current_lai, variety.rgrlai, temp, water, weather.irrad / IRRAD_REF, variety.lai_max)
    return float(min(delta, variety.lai_max - current_lai)) if current_lai < variety.lai_max else 0.0


def season_weather(variety: CropVariety, tavg, rain_total, days: int = DEFAULT_DAYS, irrad=None) -> dict:
    """Constant daily weather from a season mean temperature and a season rainfall total."""
    irr = variety.irrad if irrad is None else irrad
    return {
        "tavg": np.full(days, float(tavg)),
        "rain": np.full(days, float(rain_total) / days),
        "irrad": np.full(days, float(irr)),
    }


def _as_series(weather, days: Optional[int]):
    if isinstance(weather, dict):
        tavg, rain = np.asarray(weather["tavg"], float), np.asarray(weather["rain"], float)
        irrad = np.asarray(weather.get("irrad", np.full(tavg.shape, IRRAD_REF)), float)
    else:
        seq = list(weather)
        tavg = np.array([w.tavg for w in seq], float)
        rain = np.array([w.rain for w in seq], float)
        irrad = np.array([w.irrad for w in seq], float)
    if not (tavg.shape == rain.shape == irrad.shape) or tavg.ndim != 1:
        raise ValueError("weather series must be 1-d and of equal length")
    if days is not None and tavg.size != days:
        raise ValueError(f"weather series has {tavg.size} days, expected {days}")
    return tavg, rain, irrad


def simulate_season(variety: CropVariety, weather, lai0: float = LAI0, days: Optional[int] = None) -> Trajectory:
    """Run the daily model; ``weather[t-1]`` drives the step from day ``t-1`` to ``t``.

    ``weather`` is a sequence of :class:`DailyWeather` or a dict of arrays
    ``tavg``, ``rain`` (mm/day) and ``irrad``.
    """
    tavg, rain, irrad = _as_series(weather, days)
    d = tavg.size
    moist = soil_moisture(variety.smtab, variety.fc, variety.wp)
    rate = (
        variety.rgrlai
        * temperature_effect(tavg, variety.tbase)
        * water_availability(rain, variety.rain_ref(d), moist)
        * irrad / IRRAD_REF
    )
    lai = np.empty(d)
    cur = min(float(lai0), variety.lai_max)
    lai[0] = cur
    lmax = variety.lai_max
    for t in range(1, d):
        delta = rate[t - 1] * (1.0 - cur / lmax)
        if delta > 0.0:
            cur = min(cur + delta, lmax)
        lai[t] = cur
    return Trajectory(lai)


_PRESETS = (
    CropVariety("HD-2967", "wheat", 6.5, 0.035, 0.0, 0.30, 0.12, 1.3, (20, 25), (400, 600)),
    CropVariety("Lok-1", "wheat", 5.5, 0.028, 10.0, 0.28, 0.11, 1.4, (18, 22), (300, 500)),
    CropVariety("IR64", "rice", 7.0, 0.04, 10.0, 0.34, 0.15, 1.2, (25, 30), (800, 1200)),
    CropVariety("Sahbhagi Dhan", "rice", 6.0, 0.035, 10.0, 0.29, 0.13, 1.3, (24, 28), (500, 900)),
    CropVariety("BT Cotton RCH 134", "cotton", 5.5, 0.03, 15.0, 0.28, 0.12, 1.4, (25, 35), (500, 900)),
)

_ALIASES = {
    "hd-2967": "HD-2967",
    "hd2967": "HD-2967",
    "lok-1": "Lok-1",
    "lok1": "Lok-1",
    "ir64": "IR64",
    "sahbhagi dhan": "Sahbhagi Dhan",
    "sahbhagi": "Sahbhagi Dhan",
    "bt cotton rch 134": "BT Cotton RCH 134",
    "bt cotton": "BT Cotton RCH 134",
    "rch 134": "BT Cotton RCH 134",
    "rch134": "BT Cotton RCH 134",
}


def variety_presets() -> list[CropVariety]:
    """The five crop varieties with their reference soil, crop and weather ranges."""
    return list(_PRESETS)


def get_variety(name, overrides: Optional[dict] = None) -> CropVariety:
    if isinstance(name, CropVariety):
        base = name
    else:
        key = _ALIASES.get(str(name).strip().lower(), str(name))
        matches = [v for v in _PRESETS if v.name == key]
        if not matches:
            raise ConfigurationError(f"unknown variety {name!r}; known: {[v.name for v in _PRESETS]}")
        base = matches[0]
    if overrides:
        unknown = set(overrides) - set(CropVariety.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown variety fields: {sorted(unknown)}")
        base = replace(base, **overrides)
    return base


def target_weather(
    variety: CropVariety,
    rng=None,
    jitter: float = 0.05,
    tavg: Optional[float] = None,
    rain: Optional[float] = None,
    days: int = DEFAULT_DAYS,
) -> dict:
    """Reference daily weather: season values (range midpoints by default) plus Gaussian jitter.

    The jitter standard deviation is ``jitter`` times the season value, drawn
    independently per day for temperature and rainfall.
    """
    t0 = variety.tavg_mid if tavg is None else float(tavg)
    r0 = variety.rain_mid if rain is None else float(rain)
    w = season_weather(variety, t0, r0, days)
    if jitter > 0:
        gen = as_generator(rng if rng is not None else 0)
        noise = gen.normal(0.0, 1.0, (2, days))
        w["tavg"] = w["tavg"] + jitter * abs(t0) * noise[0]
        w["rain"] = np.maximum(w["rain"] + jitter * r0 / days * noise[1], 0.0)
    return w


def target_trajectory(
    variety: CropVariety,
    rng=None,
    jitter: float = 0.05,
    tavg: Optional[float] = None,
    rain: Optional[float] = None,
    days: int = DEFAULT_DAYS,
    lai0: float = LAI0,
) -> Trajectory:
    """Ground-truth LAI series used as the calibration target."""
    return simulate_season(variety, target_weather(variety, rng, jitter, tavg, rain, days), lai0)
