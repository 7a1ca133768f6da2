"""Grow each preset variety through a season of constant mid-range weather.

Shows how the canopy ceiling, the base temperature and the rainfall
reference shape the LAI curve, and how a cold or dry season stalls it.
"""

from cropcal.wofost import season_weather, simulate_season, variety_presets

print("Season-long LAI at the midpoint of each variety's weather range")
print(f"{'variety':>18} {'TAVG':>6} {'RAIN':>7} {'day 30':>7} {'day 60':>7} {'day 119':>8} {'ceiling':>8}")
for v in variety_presets():
    lai = simulate_season(v, season_weather(v, v.tavg_mid, v.rain_mid)).lai
    print(f"{v.name:>18} {v.tavg_mid:6.1f} {v.rain_mid:7.0f} {lai[30]:7.3f} {lai[60]:7.3f} {lai[119]:8.3f} {v.lai_max:8.1f}")

v = variety_presets()[2]  # IR64
print(f"\n{v.name}: the same season under stress")
for label, tavg, rain in (
    ("reference", v.tavg_mid, v.rain_mid),
    ("half the rain", v.tavg_mid, v.rain_mid / 2),
    ("extra rain (no gain above the reference)", v.tavg_mid, v.rain_range[1]),
    ("at base temperature", v.tbase, v.rain_mid),
):
    lai = simulate_season(v, season_weather(v, tavg, rain)).lai
    print(f"  {label:<42} final LAI {lai[-1]:.3f}")
