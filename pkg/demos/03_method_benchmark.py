"""Benchmark the tensor model against the vector-space baselines.

Runs the full evaluation protocol (train/test trials, 5-fold CV tuning on
the training side only) on planted tensor data and prints the aggregate
table: RMSE and coefficient sparsity, mean +- std across trials. The
tensor model both predicts better and stays far sparser, because the
vectorized baselines cannot see the rank-one structure.
"""

import numpy as np

from roitensor import ProtocolConfig, run_benchmark
from roitensor.data_io import Dataset
from roitensor.regression import FitConfig

rng = np.random.default_rng(7)
shape = (8, 8, 3)
coef = np.zeros(shape)
coef[1, 3, 0] = 1.5
coef[5, 2, 1] = -1.0
xs = rng.standard_normal((150, *shape))
y = np.einsum("nabc,abc->n", xs, coef) + 0.05 * rng.standard_normal(150)
ds = Dataset(xs, y - y.mean())
print(f"{len(ds)} subjects, shape {shape}, two planted rank-one components\n")

cfg = ProtocolConfig(
    n_trials=3, cv_folds=5, seed=1,
    fit=FitConfig(max_rank=4, lambda_grid_size=8, seed=1),
    grids={  # desk-scale grids; defaults sweep much wider
        "proposed": [{"max_rank": r} for r in (1, 2, 3, 4)],
        "enet": [{"lam": l, "alpha": a} for l in (0.1, 0.5, 1.0)
                 for a in (0.2, 0.6, 1.0)],
        "glasso": [{"grouping": g, "lam_g": p, "lam_1": p}
                   for g in ("by-modality", "by-roi")
                   for p in (1e-4, 1e-2, 1e-1)],
    },
)

report = run_benchmark(ds, ("proposed", "lasso", "enet", "glasso", "pca_lr"),
                       cfg, representation="planted", score="demo")

print(f"{'method':>9s} {'RMSE':>16s} {'sparsity %':>18s}  chosen (trial 0)")
for agg in report.aggregates:
    chosen = next(r["params"] for r in report.records
                  if r["method"] == agg["method"] and r["trial"] == 0)
    print(f"{agg['method']:>9s} {agg['rmse_mean']:8.4f} +- {agg['rmse_std']:5.4f} "
          f"{agg['sparsity_mean']:10.2f} +- {agg['sparsity_std']:5.2f}  {chosen}")

print("\nmodality contribution across the tensor-model trials:")
for row in report.modality_ranking or []:
    print(f"  {row['modality']:>4s}: {row['score']:.4f}")
