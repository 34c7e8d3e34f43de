"""Sweep the neighbor count k and the component budget over synthetic data.

Two curves, exported as CSV next to this script:

  sweep_rank.csv  test RMSE and sparsity as the component budget grows;
                  RMSE falls then flattens past the planted rank while
                  sparsity decreases (more components, fewer zeros)
  sweep_k.csv     test RMSE when the connectivity graphs are rebuilt at
                  different k; the signal was planted on the fully
                  connected graphs, so k = 116 wins
"""

from pathlib import Path

import numpy as np

from roitensor import ProtocolConfig, generate_graph_synthetic, sweep_k, sweep_rank
from roitensor.data_io import Dataset, SynthConfig, generate_synthetic
from roitensor.protocol import curve_to_csv
from roitensor.regression import FitConfig

out_dir = Path(__file__).resolve().parent

# --- component budget ------------------------------------------------------
synth = generate_synthetic(SynthConfig(
    n_subjects=300, shape=(20, 20, 3), true_rank=3, support_density=0.1,
    noise_std=0.05, seed=2))
ds0 = synth.dataset
ds = Dataset(ds0.tensors, ds0.y + synth.offset / synth.scale, ds0.ids)
cfg = ProtocolConfig(n_trials=2, seed=2, fit=FitConfig(max_rank=8, seed=2))
rows = sweep_rank(ds, [1, 2, 3, 4, 6, 8], cfg)
curve_to_csv(rows, out_dir / "sweep_rank.csv")
print("component-budget sweep (planted rank 3):")
for r in rows:
    print(f"  max_rank={r['max_rank']:2d}  RMSE {r['rmse_mean']:.4f}  "
          f"sparsity {r['sparsity_mean']:.2f}%")

# --- neighbor count --------------------------------------------------------
feats, gsynth = generate_graph_synthetic(
    n_subjects=120, kind="connectivity", true_rank=2, support_density=0.02,
    noise_std=0.01, seed=3)
yc = gsynth.dataset.y - gsynth.dataset.y.mean()
kcfg = ProtocolConfig(n_trials=1, seed=3,
                      fit=FitConfig(max_rank=4, lambda_grid_size=8, seed=3))
k_rows = sweep_k(feats, yc, [1, 10, 116], kcfg, kind="connectivity")
curve_to_csv(k_rows, out_dir / "sweep_k.csv")
print("\nneighbor-count sweep (signal planted on the fully connected graph):")
for r in k_rows:
    tag = "  <- fully connected" if r["fully_connected"] else ""
    print(f"  k={r['k']:3d}  RMSE {r['rmse_mean']:.4f}{tag}")

print(f"\ncurves written to {out_dir / 'sweep_rank.csv'} and "
      f"{out_dir / 'sweep_k.csv'}")
