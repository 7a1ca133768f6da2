"""Compare all five optimizers on one variety with paired seeded runs.

Every algorithm sees the same target and filter noise for a given run
index, so the Wilcoxon signed-rank test pairs runs by that index.
"""

from cropcal.harness import ExperimentConfig, compare

report = compare(ExperimentConfig(variety="Lok-1", seed=0), runs=5)
print(f"{'algorithm':>9} {'metrics':<21} {'MSE':>10} {'RMSE':>10}")
for row in report.table:
    print(f"{row['algorithm']:>9} {row['metrics']:<21} {row['mse']:10.3e} {row['rmse']:10.3e}")
print()
for t in report.tests:
    print(
        f"DE-MMOGC vs {t['compared']:<4} rank-sum p={t['rank_sum_p']:.3f}  "
        f"signed-rank W={t['signed_rank_W']:g} p={t['signed_rank_p']:.3f}"
    )
