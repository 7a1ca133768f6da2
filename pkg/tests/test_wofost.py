import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cropcal.core import ConfigurationError
from cropcal.wofost import (
    IRRAD_REF,
    CropVariety,
    DailyWeather,
    Trajectory,
    get_variety,
    lai_step,
    season_weather,
    simulate_season,
    soil_moisture,
    target_trajectory,
    target_weather,
    temperature_effect,
    variety_presets,
    water_availability,
)

HD = get_variety("HD-2967")
IR64 = get_variety("IR64")


def test_temperature_effect():
    assert temperature_effect(22, 0) == 22
    assert temperature_effect(10, 10) == 0
    assert temperature_effect(8, 10) == 0
    np.testing.assert_array_equal(temperature_effect([5, 15], 10), [0, 5])


def test_soil_moisture():
    assert soil_moisture(0.30, 0.30, 0.12) == 1.0
    assert soil_moisture(0.12, 0.30, 0.12) == 0.0
    assert soil_moisture(0.21, 0.30, 0.12) == pytest.approx(0.5, abs=1e-12)
    assert soil_moisture(0.5, 0.30, 0.12) == 1.0
    with pytest.raises(ConfigurationError):
        soil_moisture(0.2, 0.1, 0.1)


def test_water_availability():
    assert water_availability(10.0, 5.0, 1.0) == 1.0
    assert water_availability(0.0, 5.0, 1.0) == 0.0
    assert water_availability(2.5, 5.0, 0.8) == 0.5
    assert water_availability(5.0, 5.0, 0.3) == 0.3
    with pytest.raises(ValueError):
        water_availability(1.0, 0.0, 1.0)


def test_lai_step_examples():
    rain_ref = HD.rain_ref()
    w = DailyWeather(22.0, rain_ref, IRRAD_REF)
    assert lai_step(0.0, HD, w) == pytest.approx(0.035 * 22, rel=1e-12)
    assert lai_step(HD.lai_max, HD, w) == 0.0
    assert lai_step(1.0, IR64, DailyWeather(9.0, 100.0)) == 0.0
    # the step never overshoots the ceiling
    assert lai_step(6.4, HD, DailyWeather(60.0, 50.0, 5 * IRRAD_REF)) <= HD.lai_max - 6.4 + 1e-12


@settings(max_examples=100, deadline=None)
@given(
    st.floats(0, 7.0),
    st.floats(-10, 45),
    st.floats(0, 30),
    st.floats(0, 3e7),
    st.floats(0, 5),
    st.floats(0, 10),
    st.floats(0, 1e7),
)
def test_lai_step_monotone_in_each_factor(lai, t, rain, irrad, dt, drain, dirrad):
    lai = min(lai, IR64.lai_max)
    base = lai_step(lai, IR64, DailyWeather(t, rain, irrad))
    assert base >= 0
    assert lai_step(lai, IR64, DailyWeather(t + dt, rain, irrad)) >= base
    assert lai_step(lai, IR64, DailyWeather(t, rain + drain, irrad)) >= base
    assert lai_step(lai, IR64, DailyWeather(t, rain, irrad + dirrad)) >= base


def test_presets_match_table():
    names = [v.name for v in variety_presets()]
    assert names == ["HD-2967", "Lok-1", "IR64", "Sahbhagi Dhan", "BT Cotton RCH 134"]
    hd = HD
    assert (hd.lai_max, hd.rgrlai, hd.tbase, hd.fc, hd.wp, hd.bd) == (6.5, 0.035, 0.0, 0.30, 0.12, 1.3)
    assert hd.tavg_range == (20, 25) and hd.rain_range == (400, 600)
    assert (IR64.lai_max, IR64.rgrlai, IR64.tbase, IR64.fc, IR64.wp, IR64.bd) == (7.0, 0.04, 10.0, 0.34, 0.15, 1.2)
    c = get_variety("bt cotton")
    assert (c.lai_max, c.rgrlai, c.tbase, c.fc, c.wp, c.bd) == (5.5, 0.03, 15.0, 0.28, 0.12, 1.4)
    lok = get_variety("Lok-1")
    assert (lok.lai_max, lok.rgrlai, lok.tbase, lok.tavg_range, lok.rain_range) == (5.5, 0.028, 10.0, (18, 22), (300, 500))
    s = get_variety("Sahbhagi")
    assert (s.lai_max, s.rgrlai, s.fc, s.wp, s.tavg_range, s.rain_range) == (6.0, 0.035, 0.29, 0.13, (24, 28), (500, 900))


def test_variety_validation_and_overrides():
    with pytest.raises(ConfigurationError):
        CropVariety("x", "c", 5, 0.03, 0, 0.1, 0.2, 1, (1, 2), (1, 2))
    with pytest.raises(ConfigurationError):
        CropVariety("x", "c", 5, 0.0, 0, 0.3, 0.1, 1, (1, 2), (1, 2))
    with pytest.raises(ConfigurationError):
        CropVariety("x", "c", 5, 0.03, 0, 0.3, 0.1, 1, (2, 2), (1, 2))
    with pytest.raises(ConfigurationError):
        get_variety("Basmati")
    v = get_variety("IR64", {"smtab_max": 0.2})
    assert v.smtab == 0.2 and v.lai_max == 7.0
    assert CropVariety.from_dict(v.to_dict()) == v
    with pytest.raises(ConfigurationError):
        CropVariety.from_dict({**v.to_dict(), "colour": "green"})


def test_daily_weather_validation():
    with pytest.raises(ValueError):
        DailyWeather(20, -1)
    with pytest.raises(ValueError):
        DailyWeather(20, 1, -5)


def test_cold_season_is_flat():
    traj = simulate_season(IR64, season_weather(IR64, 5.0, 1000.0))
    np.testing.assert_array_equal(traj.lai, np.full(120, 0.01))


def test_favourable_long_season_approaches_ceiling():
    traj = simulate_season(HD, season_weather(HD, 25.0, 600.0, days=400))
    assert traj.lai.max() <= HD.lai_max
    assert traj.lai[-1] > 0.99 * HD.lai_max


def test_daily_weather_sequence_equals_dict():
    w = season_weather(HD, 22.0, 500.0, days=30)
    seq = [DailyWeather(t, r, i) for t, r, i in zip(w["tavg"], w["rain"], w["irrad"])]
    assert simulate_season(HD, seq) == simulate_season(HD, w)


def test_length_checks():
    w = season_weather(HD, 22.0, 500.0, days=30)
    with pytest.raises(ValueError):
        simulate_season(HD, w, days=120)
    with pytest.raises(ValueError):
        simulate_season(HD, {"tavg": np.ones(5), "rain": np.ones(4)})


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from([v.name for v in variety_presets()]),
    st.lists(st.tuples(st.floats(-5, 45), st.floats(0, 40), st.floats(0, 4e7)), min_size=2, max_size=80),
    st.floats(0, 3),
)
def test_trajectory_monotone_and_bounded(name, days, lai0):
    v = get_variety(name)
    lai = simulate_season(v, [DailyWeather(*d) for d in days], lai0=lai0).lai
    assert lai[0] == min(lai0, v.lai_max)
    assert np.all(np.diff(lai) >= 0)
    assert np.all((lai >= 0) & (lai <= v.lai_max))


def test_irrad_normalisation_is_scale_invariant(monkeypatch):
    import cropcal.wofost as wofost

    w = target_weather(IR64, 3)
    w["irrad"] = np.linspace(1e7, 2e7, 120)
    base = simulate_season(IR64, w).lai
    monkeypatch.setattr(wofost, "IRRAD_REF", IRRAD_REF * 4)
    w4 = dict(w, irrad=w["irrad"] * 4)
    np.testing.assert_allclose(simulate_season(IR64, w4).lai, base, rtol=1e-12)


def test_target_trajectory():
    a = target_trajectory(IR64, rng=7)
    b = target_trajectory(IR64, rng=7)
    assert a == b and len(a) == 120
    assert a != target_trajectory(IR64, rng=8)
    flat = target_trajectory(IR64, jitter=0.0)
    assert flat == simulate_season(IR64, season_weather(IR64, 27.5, 1000.0))
    assert np.all((a.lai >= 0) & (a.lai <= IR64.lai_max))


def test_target_weather_jitter_scale():
    w = target_weather(IR64, 0, jitter=0.05, days=20000)
    assert abs(np.std(w["tavg"]) / (0.05 * 27.5) - 1) < 0.03
    assert np.all(w["rain"] >= 0)


def test_trajectory_is_read_only_value():
    t = Trajectory([0.1, 0.2])
    with pytest.raises(ValueError):
        t.lai[0] = 1.0
    assert t == Trajectory(np.array([0.1, 0.2])) and hash(t) == hash(Trajectory([0.1, 0.2]))
