"""Acceptance suite: one test per numbered criterion, printed pass lines.

Run with ``pytest tests/test_acceptance.py -v -s``. Every criterion prints
a single [PASS] line on success (a failed assertion fails the test before
its line is printed). Models fitted along the way are registered and
re-checked for the monotone training-path requirement at the end.
"""

import json
import math
import time

import numpy as np
import pytest

import roitensor.regression as reg
from roitensor.baselines import (
    GroupSpec,
    enet_fit,
    glasso_fit,
    lasso_fit,
    pca_lr_fit,
    linear_sparsity,
    predict_linear,
)
from roitensor.cli import main as cli_main
from roitensor.data_io import (
    Dataset,
    SynthConfig,
    generate_graph_synthetic,
    generate_synthetic,
)
from roitensor.graphs import N_ROI, GraphConfig, build_representation
from roitensor.protocol import ProtocolConfig, rmse, sweep_rank
from roitensor.regression import (
    FitConfig,
    coefficient_tensor,
    fit,
    fit_unit_rank,
    model_sparsity,
    predict_batch,
    unit_rank_kkt_violation,
)
from roitensor.tensors import UnitRankTensor, contract_except, l1_norm, materialize

# models fitted anywhere in this suite, re-audited by criterion 9
FITTED_MODELS: list = []


def _register(model):
    FITTED_MODELS.append(model)
    return model


def test_criterion_1_l1_factorization_identity():
    """1000 random rank-one tensors: product of factor l1 norms equals the
    materialized l1 norm within 1e-10 relative, in under 5 seconds."""
    rng = np.random.default_rng(1001)
    t0 = time.monotonic()
    for _ in range(1000):
        order = int(rng.integers(2, 4))
        shape = tuple(int(rng.integers(1, 21)) for _ in range(order))
        w = UnitRankTensor(tuple(rng.standard_normal(n) for n in shape))
        product_form = l1_norm(w)
        brute = float(np.sum(np.abs(materialize(w))))
        np.testing.assert_allclose(product_form, brute, rtol=1e-10, atol=1e-12)
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    print(f"\n[PASS] criterion 1: l1 factorization identity on 1000 tensors "
          f"({elapsed:.2f}s)")


def test_criterion_2_contraction_oracle():
    """500 random (x, w, mode): dot(factor, contraction) equals the inner
    product computed by brute-force materialization, 1e-10 relative,
    in under 10 seconds."""
    rng = np.random.default_rng(2002)
    t0 = time.monotonic()
    for _ in range(500):
        order = int(rng.integers(2, 4))
        shape = tuple(int(rng.integers(1, 13)) for _ in range(order))
        w = UnitRankTensor(tuple(rng.standard_normal(n) for n in shape))
        x = rng.standard_normal(shape)
        j = int(rng.integers(0, order))
        z = contract_except(x, w, j)
        lhs = float(w.factors[j] @ z)
        brute = float(np.sum(materialize(w) * x))
        np.testing.assert_allclose(lhs, brute, rtol=1e-10, atol=1e-12)
    elapsed = time.monotonic() - t0
    assert elapsed < 10.0, f"took {elapsed:.2f}s"
    print(f"\n[PASS] criterion 2: contraction oracle on 500 draws ({elapsed:.2f}s)")


def test_criterion_3_solver_kkt():
    """50 seeded unit-rank fits on 10x8x3, N=200: every returned nonzero
    component satisfies the mode-wise subgradient conditions within 1e-6."""
    shape = (10, 8, 3)
    nonzero = 0
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(3000 + seed)
        coef = np.zeros(shape)
        coef[tuple(rng.integers(0, n) for n in shape)] = 2.0
        coef[tuple(rng.integers(0, n) for n in shape)] = -1.5
        xs = rng.standard_normal((200, *shape))
        y = np.einsum("nabc,abc->n", xs, coef) + 0.1 * rng.standard_normal(200)
        w, lam = fit_unit_rank(xs, y, FitConfig(seed=seed))
        if w.is_zero():
            continue
        nonzero += 1
        violation = unit_rank_kkt_violation(xs, y, w, lam)
        worst = max(worst, violation)
        assert violation <= 1e-6, f"seed {seed}: violation {violation:.3e}"
    assert nonzero >= 45  # the check must not pass vacuously
    print(f"\n[PASS] criterion 3: KKT within 1e-6 on {nonzero}/50 nonzero fits "
          f"(worst {worst:.2e})")


@pytest.fixture(scope="module")
def planted_recovery():
    """Frozen planted-recovery instance: 20x20x3, 300 train / 60 test,
    rank 3, density 0.1, noise_std 0.05.

    The generator records the min-max affine map; fitting happens on the
    offset-corrected responses (y_raw / scale), the axis on which the
    inner-product model is well specified, and the noise floor is the
    noise level expressed on that same [0, 1]-scaled axis. Thresholds were
    checked against an oracle least-squares fit on the true support before
    freezing.
    """
    synth = generate_synthetic(SynthConfig(
        n_subjects=360, shape=(20, 20, 3), true_rank=3,
        support_density=0.1, noise_std=0.05, seed=0))
    ds = synth.dataset
    y_adj = ds.y + synth.offset / synth.scale
    train = Dataset(ds.tensors[:300], y_adj[:300])
    t0 = time.monotonic()
    model = _register(fit(train, FitConfig(max_rank=8, seed=7)))
    elapsed = time.monotonic() - t0
    return synth, y_adj, model, elapsed


def test_criterion_4_planted_model_recovery(planted_recovery):
    synth, y_adj, model, elapsed = planted_recovery
    ds = synth.dataset
    noise_floor = synth.noise_floor(0.05)

    true_support = np.abs(synth.coefficient_tensor().ravel()) > 0
    est_support = np.abs(coefficient_tensor(model).ravel()) > 1e-10
    tp = int(np.sum(true_support & est_support))
    precision = tp / max(int(est_support.sum()), 1)
    recall = tp / int(true_support.sum())
    f1 = 2 * precision * recall / max(precision + recall, 1e-12)

    test_rmse = rmse(y_adj[300:], predict_batch(model, ds.tensors[300:]))
    sparsity = model_sparsity(model, zero_tol=1e-10)

    assert f1 >= 0.8, f"support F1 {f1:.3f} < 0.8"
    assert test_rmse <= 1.5 * noise_floor, \
        f"test RMSE {test_rmse:.5f} > {1.5 * noise_floor:.5f}"
    assert sparsity >= 90.0, f"sparsity {sparsity:.2f} < 90"
    assert elapsed < 300.0, f"fit took {elapsed:.1f}s"
    print(f"\n[PASS] criterion 4: recovery F1={f1:.3f}, "
          f"test RMSE {test_rmse:.5f} <= {1.5 * noise_floor:.5f}, "
          f"sparsity {sparsity:.2f}% ({elapsed:.1f}s)")


def test_criterion_5_baseline_oracles():
    rng = np.random.default_rng(5005)
    n, p = 80, 10
    X = rng.standard_normal((n, p)) @ np.diag(rng.uniform(0.5, 2.0, p))
    X += rng.uniform(-1.0, 1.0, p)
    y = X @ rng.standard_normal(p) + 0.5 + 0.1 * rng.standard_normal(n)
    A = np.column_stack([X, np.ones(n)])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    w_ls, b_ls = sol[:p], sol[p]

    m = lasso_fit(X, y, 0.0)
    assert np.max(np.abs(m.weights - w_ls)) <= 1e-6
    assert abs(m.intercept - b_ls) <= 1e-6

    lam = 0.15
    ml, me = lasso_fit(X, y, lam), enet_fit(X, y, lam, 1.0)
    assert np.max(np.abs(ml.weights - me.weights)) <= 1e-8
    assert abs(ml.intercept - me.intercept) <= 1e-8

    groups = GroupSpec(np.arange(p) // 2, "pairs")
    mg = glasso_fit(X, y, groups, 0.0, 0.0)
    assert np.max(np.abs(mg.weights - w_ls)) <= 1e-6

    mp = pca_lr_fit(X, y, 1.0)
    assert np.max(np.abs(predict_linear(mp, X) - A @ sol)) <= 1e-6
    print("\n[PASS] criterion 5: baseline oracles (lasso=LS at 0, enet=lasso "
          "at alpha=1, glasso=LS at 0, PCA+LR=LS at fraction 1)")


def test_criterion_6_protocol_determinism(tmp_path):
    synth_dir = tmp_path / "synth"
    rc = cli_main(["synth", "--n", "36", "--shape", "6x5x3", "--rank", "1",
                   "--density", "0.4", "--noise", "0.02", "--seed", "2",
                   "--out", str(synth_dir)])
    assert rc == 0
    args = ["benchmark", "--data", str(synth_dir / "dataset.json"),
            "--methods", "proposed,lasso,pca_lr", "--trials", "2",
            "--folds", "3", "--max-rank", "2", "--lambda-grid-size", "6",
            "--seed", "5"]
    out1, out2 = tmp_path / "b1", tmp_path / "b2"
    assert cli_main(args + ["--out", str(out1)]) == 0
    assert cli_main(["benchmark", "--config", str(out1 / "manifest.json"),
                     "--out", str(out2)]) == 0
    for name in ("report.json", "report.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    print("\n[PASS] criterion 6: benchmark reruns from the manifest are "
          "byte-identical")


def _rank_trend_one_seed(seed):
    synth = generate_synthetic(SynthConfig(
        n_subjects=360, shape=(20, 20, 3), true_rank=3,
        support_density=0.1, noise_std=0.05, seed=seed))
    ds0 = synth.dataset
    y_adj = ds0.y + synth.offset / synth.scale
    ds = Dataset(ds0.tensors, y_adj, ds0.ids)
    cfg = ProtocolConfig(n_trials=2, seed=seed,
                         fit=FitConfig(max_rank=12, seed=seed))
    rows = sweep_rank(ds, [1, 2, 3, 4, 6, 8, 10, 12], cfg)
    rmses = [r["rmse_mean"] for r in rows]
    spars = [r["sparsity_mean"] for r in rows]
    # qualitative trend: upticks below 1% relative count as flat noise
    noninc = all(b <= a * 1.01 + 1e-12 for a, b in zip(rmses, rmses[1:]))
    flat_tail = abs(rmses[-2] - rmses[-1]) <= 0.05 * max(rmses[-1], 1e-12)
    sp_noninc = all(a >= b - 1e-9 for a, b in zip(spars, spars[1:]))
    return noninc and flat_tail, sp_noninc


def _k_trend_one_seed(seed):
    feats, synth = generate_graph_synthetic(
        n_subjects=150, kind="connectivity", true_rank=2,
        support_density=0.02, noise_std=0.01, seed=seed)
    yc = synth.dataset.y - synth.dataset.y.mean()
    out = {}
    for k in (1, N_ROI):
        tensors = np.stack([
            build_representation(f, "connectivity", GraphConfig(k=k))
            for f in feats])
        ds = Dataset(tensors, yc)
        model = _register(fit(ds.subset(np.arange(125)),
                              FitConfig(max_rank=4, seed=seed)))
        out[k] = rmse(ds.y[125:], predict_batch(model, ds.tensors[125:]))
    return out[N_ROI] <= out[1]


def test_criterion_7_qualitative_trends():
    """Component-count and neighbor-count trends, each over 5 seeds with
    the trend required in at least 4 of 5."""
    rank_rmse_ok = 0
    rank_sparsity_ok = 0
    for seed in range(5):
        r_ok, s_ok = _rank_trend_one_seed(seed)
        rank_rmse_ok += r_ok
        rank_sparsity_ok += s_ok
    assert rank_rmse_ok >= 4, f"RMSE trend held on {rank_rmse_ok}/5 seeds"
    assert rank_sparsity_ok >= 4, f"sparsity trend held on {rank_sparsity_ok}/5"

    k_ok = sum(_k_trend_one_seed(seed) for seed in range(5))
    assert k_ok >= 4, f"fully-connected advantage held on {k_ok}/5 seeds"
    print(f"\n[PASS] criterion 7: rank trends {rank_rmse_ok}/5 (RMSE) and "
          f"{rank_sparsity_ok}/5 (sparsity), k=116 <= k=1 on {k_ok}/5 seeds")


def test_criterion_8_metric_fixtures():
    assert rmse([0.0, 2.0], [0.0, 0.0]) == math.sqrt(2)
    empty = reg.RegressionModel([], (4, 3), [])
    assert model_sparsity(empty) == 100.0
    rng = np.random.default_rng(8008)
    X = rng.standard_normal((30, 6))
    y = rng.uniform(0, 1, 30)
    m = pca_lr_fit(X, y, 0.5)
    assert linear_sparsity(m) == 0.0
    print("\n[PASS] criterion 8: rmse([0,2],[0,0])=sqrt(2), empty-model "
          "sparsity=100.0, PCA+LR sparsity=0.0")


def test_criterion_9_training_path_monotone():
    """Every model fitted during this acceptance session, plus a fresh
    batch of seeded fits, has a nonincreasing training RMSE path."""
    rng = np.random.default_rng(9009)
    for seed in range(5):
        xs = rng.standard_normal((80, 6, 5))
        coef = np.outer(rng.standard_normal(6), rng.standard_normal(5))
        y = np.einsum("nij,ij->n", xs, coef) + 0.2 * rng.standard_normal(80)
        _register(fit(Dataset(xs, y), FitConfig(max_rank=4, seed=seed)))

    assert FITTED_MODELS, "no models were registered"
    checked = 0
    for model in FITTED_MODELS:
        path = model.train_rmse_path
        assert all(a >= b for a, b in zip(path, path[1:])), path
        checked += 1
    print(f"\n[PASS] criterion 9: train RMSE paths nonincreasing on "
          f"{checked} fitted models")
