"""Ensemble Kalman filtering of LAI.

First the five-member worked example is replayed step by step, then a full
season is assimilated: a deliberately wrong weather guess drives the
forecast while sparse observations of the target pull the ensemble back.
"""

import numpy as np

from cropcal.enkf import EnkfConfig, assimilate_season, ensemble_covariance, ensemble_mean, kalman_gain, update
from cropcal.harness import APPENDIX, appendix_check
from cropcal.metrics import mse
from cropcal.wofost import get_variety, season_weather, target_trajectory

print("Five-member worked example")
forecast = np.array(APPENDIX["forecast"])
mu = ensemble_mean(forecast)
P = ensemble_covariance(forecast, mu)
K = kalman_gain(P, 1.0, APPENDIX["R"])
updated = update(forecast, np.array(APPENDIX["perturbed"]), K)
print(f"  forecast mean {mu:.4f}, spread {P:.5f}, gain {K:.4f}")
print(f"  updated members {np.round(updated, 4).tolist()}, mean {ensemble_mean(updated):.4f}")
for line in appendix_check().lines():
    print("  " + line)

v = get_variety("IR64")
target = target_trajectory(v, rng=1)
guess = season_weather(v, 26.0, 850.0)
res = assimilate_season(v, guess, target, EnkfConfig(), rng=2)
print(f"\n{v.name}, weather guess TAVG=26, RAIN=850 against a mid-range target")
print(f"  observation days used: {len(res.gains)} of {len(range(5, 120, 5))}")
print(f"  MSE free-running simulation {mse(target.lai, res.simulated.lai):.5f}")
print(f"  MSE assimilated             {mse(target.lai, res.assimilated.lai):.5f}")
print(f"  {'day':>4} {'target':>7} {'simulated':>9} {'assimilated':>11}")
for t in range(0, 120, 15):
    print(f"  {t:4d} {target.lai[t]:7.3f} {res.simulated.lai[t]:9.3f} {res.assimilated.lai[t]:11.3f}")
