"""Recover a planted sparse low-rank signal with the sequential solver.

Generates subjects with i.i.d. normal tensors, plants a few sparse
rank-one components into the responses, fits the sequential sparse
unit-rank regression, and compares the recovered support and factors to
the ground truth. The responses come back min-max scaled to [0, 1]; the
recorded affine map lets us put them on the axis where the intercept-free
model is well specified.
"""

import numpy as np

from roitensor import SynthConfig, generate_synthetic, rmse
from roitensor.data_io import Dataset
from roitensor.regression import (
    FitConfig,
    coefficient_tensor,
    fit,
    model_sparsity,
    modality_contribution,
    predict_batch,
)

synth = generate_synthetic(SynthConfig(
    n_subjects=360, shape=(20, 20, 3), true_rank=3, support_density=0.1,
    noise_std=0.05, seed=0))
ds = synth.dataset
print(f"{len(ds)} subjects of shape {ds.shape}; planted rank "
      f"{len(synth.components)}, noise floor on the scaled axis: "
      f"{synth.noise_floor(0.05):.5f}")

print("\nplanted factor supports:")
for r, w in enumerate(synth.components, 1):
    print(f"  component {r}:", [np.flatnonzero(f).tolist() for f in w.factors])

# undo the recorded offset so the inner-product model is well specified
y = ds.y + synth.offset / synth.scale
train = Dataset(ds.tensors[:300], y[:300])

model = fit(train, FitConfig(max_rank=8, seed=7))
print(f"\nfitted {model.rank} components; training RMSE path:",
      [f"{v:.4f}" for v in model.train_rmse_path])
for r, (w, lam) in enumerate(model.components, 1):
    print(f"  component {r} (lambda={lam:.4f}):",
          [np.flatnonzero(f).tolist() for f in w.factors])

true_support = np.abs(synth.coefficient_tensor().ravel()) > 0
est_support = np.abs(coefficient_tensor(model).ravel()) > 1e-10
tp = int(np.sum(true_support & est_support))
precision = tp / max(int(est_support.sum()), 1)
recall = tp / int(true_support.sum())
print(f"\nsupport recovery: precision={precision:.2f} recall={recall:.2f}")
print(f"coefficient sparsity: {model_sparsity(model):.2f}% zeros")
print(f"held-out RMSE: {rmse(y[300:], predict_batch(model, ds.tensors[300:])):.5f}")

print("\nper-modality contribution (mean |modality-factor entry|):")
for label, score in modality_contribution(model, 2):
    print(f"  {label:>4s}: {score:.4f}")
