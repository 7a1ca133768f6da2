"""Why several weather pairs fit a target equally well.

With season-constant weather, the simulated trajectory depends on TAVG and
RAIN only through the product (TAVG - TBASE) * min(RAIN / reference, 1).
Any pair on that curve reproduces the target exactly, and rainfall above the
reference changes nothing at all.
"""

import numpy as np

from cropcal.metrics import mse
from cropcal.wofost import get_variety, season_weather, simulate_season

v = get_variety("IR64")
target = simulate_season(v, season_weather(v, 27.5, 1000.0)).lai
driver = (27.5 - v.tbase) * 1.0
print(f"target at TAVG=27.5, RAIN=1000; growth driver {driver:.2f}")
for rain in (1000.0, 1100.0, 1200.0, 950.0, 900.0, 850.0):
    tavg = v.tbase + driver / min(rain / v.rain_mid, 1.0)
    lai = simulate_season(v, season_weather(v, tavg, rain)).lai
    print(f"  TAVG {tavg:7.3f}  RAIN {rain:6.0f}  MSE to target {mse(target, lai):.2e}")
print("only the lowest corner of the search box has a single matching pair")
