"""Crop-model calibration with a multi-operator differential evolution and EnKF assimilation."""

from .core import Bounds, ConfigurationError, ObjectiveError, OptimizeResult, Population, RngStream, Solution
from .demmogc import DemmogcConfig, optimize
from .baselines import DEConfig, GAConfig, HHOConfig, PSOConfig, de_optimize, ga_optimize, hho_optimize, pso_optimize
from .wofost import CropVariety, Trajectory, get_variety, simulate_season, target_trajectory, variety_presets
from .enkf import Assimilator, EnkfConfig, assimilate_season
from .metrics import metric_report, summarize_runs, wilcoxon_rank_sum, wilcoxon_signed_rank
from .harness import ExperimentConfig, ExperimentResult, appendix_check, calibrate, compare, export

__version__ = "0.1.0"
