"""Benchmark protocol: splits, cross-validation, trials, metrics, sweeps.

Each trial draws a 5:1 train/test split (test = round(N/6) subjects),
tunes every method's hyperparameters by 5-fold cross-validation on the
training set only, refits on the full training set, and scores test RMSE
and coefficient sparsity. Trials, folds, and all randomness derive from
one base seed, so reports are bit-reproducible; independent trials can be
spread over a joblib worker pool without changing the results.

Also provides the post-hoc analyses: frequency-based ROI ranking across
fitted tensor models, per-modality contribution, and the neighbor-count
(k) and component-count (rank) sweeps.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines as bl
from . import regression as reg
from .data_io import Dataset
from .graphs import MODALITIES, N_ROI, GraphConfig, build_representation
from .regression import FitConfig, RegressionModel
from .tensors import materialize

__all__ = [
    "ProtocolConfig",
    "EvalReport",
    "Method",
    "METHODS",
    "default_grid",
    "rmse",
    "split",
    "kfold_indices",
    "cross_validate",
    "run_benchmark",
    "roi_ranking",
    "sweep_k",
    "sweep_rank",
    "aggregate_records",
    "records_to_csv",
    "curve_to_csv",
]


@dataclass(frozen=True)
class ProtocolConfig:
    """Experimental protocol settings (5:1 split, 5-fold CV, 5 trials)."""

    test_fraction: float = 1.0 / 6.0
    cv_folds: int = 5
    n_trials: int = 5
    seed: int = 0
    grids: dict = field(default_factory=dict)   # per-method grid overrides
    fit: FitConfig = field(default_factory=FitConfig)
    zero_tol: float = 1e-10
    resplit_per_trial: bool = True  # False: one split, only model seeds vary
    stratify: bool = False          # stratify splits on binned responses
    n_jobs: int = 1

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")


def rmse(y_true, y_pred) -> float:
    """Root mean squared error; rejects empty or mismatched inputs."""
    a = np.asarray(y_true, dtype=np.float64).ravel()
    b = np.asarray(y_pred, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("rmse of empty vectors")
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


# ---------------------------------------------------------------------------
# deterministic splits and folds
# ---------------------------------------------------------------------------

def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, *key]))


def split(ds: Dataset, cfg: ProtocolConfig, trial: int):
    """Disjoint, exhaustive train/test partition, deterministic in (seed, trial)."""
    n = len(ds)
    if n < 6:
        raise ValueError(f"dataset too small to split: {n} < 6")
    n_test = int(np.floor(n * cfg.test_fraction + 0.5))  # round half up
    n_test = min(max(n_test, 1), n - 1)
    split_trial = trial if cfg.resplit_per_trial else 0
    rng = _rng(cfg.seed, 101, split_trial)
    if cfg.stratify:
        order = np.argsort(ds.y, kind="stable")
        test_idx = []
        # walk response-sorted strata, sampling proportionally from each
        for stratum in np.array_split(order, min(5, n)):
            take = int(np.floor(len(stratum) * cfg.test_fraction + 0.5))
            if take:
                test_idx.extend(rng.choice(stratum, size=take, replace=False))
        test_idx = np.sort(np.asarray(test_idx, dtype=np.int64))[:n_test]
    else:
        perm = rng.permutation(n)
        test_idx = np.sort(perm[:n_test])
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    return ds.subset(train_idx), ds.subset(test_idx)


def kfold_indices(n: int, folds: int, rng: np.random.Generator):
    """Disjoint exhaustive folds (sizes differ by at most one)."""
    if n < folds:
        raise ValueError(f"cannot make {folds} folds from {n} samples")
    perm = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


# ---------------------------------------------------------------------------
# method adapters
# ---------------------------------------------------------------------------

class Method:
    """Adapter for one regression method under the benchmark protocol.

    Subclasses implement fit/predict/sparsity on Dataset inputs and a
    default hyperparameter grid; ``cv_rmse`` may be overridden when a grid
    can be evaluated more cheaply than refitting per point.
    """

    name = "method"

    def default_grid(self, cfg: ProtocolConfig) -> list[dict]:
        raise NotImplementedError

    def fit(self, ds: Dataset, params: dict, cfg: ProtocolConfig, seed: int):
        raise NotImplementedError

    def predict(self, model, tensors: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sparsity(self, model, zero_tol: float) -> float:
        raise NotImplementedError

    def cv_rmse(self, ds: Dataset, folds, grid, cfg: ProtocolConfig, seed: int) -> np.ndarray:
        """Mean validation RMSE per grid point over the given folds."""
        out = np.zeros(len(grid))
        for fold in folds:
            hold = np.zeros(len(ds), dtype=bool)
            hold[fold] = True
            tr = ds.subset(np.flatnonzero(~hold))
            va = ds.subset(np.flatnonzero(hold))
            for gi, params in enumerate(grid):
                model = self.fit(tr, params, cfg, seed)
                out[gi] += rmse(va.y, self.predict(model, va.tensors))
        return out / len(folds)


class ProposedMethod(Method):
    """The sequential sparse unit-rank tensor regression."""

    name = "proposed"

    def default_grid(self, cfg):
        return [{"max_rank": r} for r in range(1, cfg.fit.max_rank + 1)]

    def _fitcfg(self, params, cfg, seed) -> FitConfig:
        return replace(cfg.fit, max_rank=int(params["max_rank"]), seed=seed)

    def fit(self, ds, params, cfg, seed):
        return reg.fit(ds, self._fitcfg(params, cfg, seed))

    def predict(self, model, tensors):
        return reg.predict_batch(model, tensors)

    def sparsity(self, model, zero_tol):
        return reg.model_sparsity(model, zero_tol)

    def cv_rmse(self, ds, folds, grid, cfg, seed):
        # sequential fits are prefix-stable: one fit at the largest rank
        # per fold scores every rank in the grid
        ranks = [int(p["max_rank"]) for p in grid]
        top = max(ranks)
        out = np.zeros(len(grid))
        for fold in folds:
            hold = np.zeros(len(ds), dtype=bool)
            hold[fold] = True
            tr = ds.subset(np.flatnonzero(~hold))
            va = ds.subset(np.flatnonzero(hold))
            model = reg.fit(tr, replace(cfg.fit, max_rank=top, seed=seed))
            prefices = reg.prefix_predictions(model, va.tensors)
            for gi, r in enumerate(ranks):
                if model.rank == 0:
                    pred = np.zeros(len(va))
                else:
                    pred = prefices[min(r, model.rank) - 1]
                out[gi] += rmse(va.y, pred)
        return out / len(folds)


class _VectorMethod(Method):
    """Shared plumbing for the vector-space baselines."""

    @staticmethod
    def _design(tensors: np.ndarray) -> np.ndarray:
        return tensors.reshape(tensors.shape[0], -1)

    def predict(self, model, tensors):
        return bl.predict_linear(model, self._design(tensors))

    def sparsity(self, model, zero_tol):
        return bl.linear_sparsity(model, zero_tol)


class LassoMethod(_VectorMethod):
    name = "lasso"

    def default_grid(self, cfg):
        return [{"lam": round(0.1 * i, 10)} for i in range(1, 11)]

    def fit(self, ds, params, cfg, seed):
        return bl.lasso_fit(self._design(ds.tensors), ds.y, params["lam"])


class ENetMethod(_VectorMethod):
    name = "enet"

    def default_grid(self, cfg):
        return [{"lam": round(0.1 * i, 10), "alpha": round(0.1 * j, 10)}
                for i in range(1, 11) for j in range(1, 11)]

    def fit(self, ds, params, cfg, seed):
        return bl.enet_fit(self._design(ds.tensors), ds.y, params["lam"], params["alpha"])


class GroupLassoMethod(_VectorMethod):
    name = "glasso"

    def default_grid(self, cfg):
        mags = [10.0 ** e for e in range(-6, 2)]
        grid = []
        for grouping in ("by-modality", "by-roi"):
            for g in mags:
                for l1 in mags:
                    grid.append({"grouping": grouping, "lam_g": g, "lam_1": l1})
        return grid

    @staticmethod
    def _groups(shape, grouping) -> bl.GroupSpec:
        if grouping == "by-modality":
            return bl.groups_by_modality(shape)
        if grouping == "by-roi":
            return bl.groups_by_roi(shape)
        raise ValueError(f"unknown grouping {grouping!r}")

    def fit(self, ds, params, cfg, seed):
        groups = self._groups(ds.shape, params.get("grouping", "by-roi"))
        return bl.glasso_fit(self._design(ds.tensors), ds.y,
                             groups, params["lam_g"], params.get("lam_1", 0.0))


class PcaLrMethod(_VectorMethod):
    name = "pca_lr"

    def default_grid(self, cfg):
        return [{"fraction": round(0.05 * i, 10)} for i in range(1, 21)]

    def fit(self, ds, params, cfg, seed):
        return bl.pca_lr_fit(self._design(ds.tensors), ds.y, params["fraction"])


METHODS = {m.name: m for m in
           (ProposedMethod(), LassoMethod(), ENetMethod(), GroupLassoMethod(), PcaLrMethod())}


def default_grid(method: Method, cfg: ProtocolConfig) -> list[dict]:
    return cfg.grids.get(method.name) or method.default_grid(cfg)


# ---------------------------------------------------------------------------
# cross-validation and the benchmark loop
# ---------------------------------------------------------------------------

def cross_validate(train: Dataset, method: Method, grid, cfg: ProtocolConfig,
                   trial: int = 0) -> dict:
    """Best grid point by mean 5-fold validation RMSE; ties -> first in grid."""
    if not grid:
        raise ValueError("empty hyperparameter grid")
    folds = kfold_indices(len(train), cfg.cv_folds, _rng(cfg.seed, 202, trial))
    seed = _model_seed(cfg.seed, trial)
    scores = method.cv_rmse(train, folds, list(grid), cfg, seed)
    return dict(grid[int(np.argmin(scores))])


def _model_seed(base: int, trial: int) -> int:
    return (base * 1000003 + trial) & 0x7FFFFFFF


def _run_trial(ds, method_names, cfg, representation, score, trial):
    train, test = split(ds, cfg, trial)
    seed = _model_seed(cfg.seed, trial)
    records, models = [], {}
    for name in method_names:
        method = METHODS[name] if isinstance(name, str) else name
        params = cross_validate(train, method, default_grid(method, cfg), cfg, trial)
        model = method.fit(train, params, cfg, seed)
        records.append({
            "trial": trial,
            "method": method.name,
            "representation": representation,
            "score": score,
            "rmse": rmse(test.y, method.predict(model, test.tensors)),
            "sparsity": method.sparsity(model, cfg.zero_tol),
            "params": params,
        })
        if isinstance(model, RegressionModel):
            models[method.name] = model
    return records, models


def aggregate_records(records) -> list[dict]:
    """Mean and sample (n-1) std of RMSE/sparsity per method/representation/score."""
    keys = sorted({(r["method"], r["representation"], r["score"]) for r in records})
    out = []
    for method, repr_, score in keys:
        sel = [r for r in records
               if (r["method"], r["representation"], r["score"]) == (method, repr_, score)]
        rs = np.array([r["rmse"] for r in sel])
        sp = np.array([r["sparsity"] for r in sel])
        ddof = 1 if len(sel) > 1 else 0
        out.append({
            "method": method, "representation": repr_, "score": score,
            "n_trials": len(sel),
            "rmse_mean": float(rs.mean()), "rmse_std": float(rs.std(ddof=ddof)),
            "sparsity_mean": float(sp.mean()), "sparsity_std": float(sp.std(ddof=ddof)),
        })
    return out


@dataclass
class EvalReport:
    """Per-trial records plus aggregates and the feature-selection analyses."""

    records: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    roi_ranking: list | None = None
    modality_ranking: list | None = None

    CSV_HEADER = ("trial", "method", "representation", "score", "rmse", "sparsity", "params")

    def to_json(self) -> str:
        doc = {
            "records": self.records,
            "aggregates": self.aggregates,
            "roi_ranking": self.roi_ranking,
            "modality_ranking": self.modality_ranking,
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER)
        for r in self.records:
            writer.writerow([r["trial"], r["method"], r["representation"], r["score"],
                             repr(r["rmse"]), repr(r["sparsity"]),
                             json.dumps(r["params"], sort_keys=True)])
        return buf.getvalue()


def _parallel_map(fn, items, n_jobs):
    if n_jobs == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=n_jobs)(delayed(fn)(it) for it in items)


def run_benchmark(ds: Dataset, methods=("proposed",), cfg: ProtocolConfig = ProtocolConfig(),
                  representation: str = "precomputed", score: str = "y") -> EvalReport:
    """Full protocol on one dataset: trials x (split, tune, refit, score).

    Test subjects never enter hyperparameter selection: tuning sees only
    the training subset of each trial. Tensor-model trials feed the ROI
    and modality rankings when the shape supports them.
    """
    trials = _parallel_map(
        lambda t: _run_trial(ds, list(methods), cfg, representation, score, t),
        list(range(cfg.n_trials)), cfg.n_jobs)
    records, proposed_models = [], []
    for recs, models in trials:
        records.extend(recs)
        if "proposed" in models:
            proposed_models.append(models["proposed"])

    report = EvalReport(records=records, aggregates=aggregate_records(records))
    if proposed_models:
        shape = proposed_models[0].input_shape
        if any(n == N_ROI for n in shape):
            report.roi_ranking = roi_ranking(proposed_models, top_n=20,
                                             zero_tol=cfg.zero_tol)
        if shape[-1] == 3:
            totals = dict.fromkeys(MODALITIES, 0.0)
            for m in proposed_models:
                for label, s in reg.modality_contribution(m, len(shape) - 1):
                    totals[label] += s
            n_models = len(proposed_models)
            ranked = sorted(totals, key=lambda lab: (-totals[lab], MODALITIES.index(lab)))
            report.modality_ranking = [
                {"modality": lab, "score": totals[lab] / n_models} for lab in ranked
            ]
    return report


# ---------------------------------------------------------------------------
# ROI ranking across fitted tensor models
# ---------------------------------------------------------------------------

def roi_ranking(models, top_n: int = 10, zero_tol: float = 1e-10,
                n_roi: int | None = None) -> list[dict]:
    """Rank ROIs by how often any incident coefficient survives zero_tol.

    An ROI counts as selected in a model when some coefficient-tensor
    entry touching it (along any mode of ROI length, rows or columns for
    connectivity shapes) exceeds ``zero_tol`` in magnitude. Frequency
    ranks first, then mean absolute incident coefficient mass, then index.
    ROIs never selected are omitted.
    """
    if not models:
        raise ValueError("no models given")
    shape = models[0].input_shape
    for m in models:
        if m.input_shape != shape:
            raise ValueError("models have inconsistent shapes")
    if n_roi is None:
        n_roi = N_ROI if N_ROI in shape else max(shape)
    roi_modes = [j for j, n in enumerate(shape) if n == n_roi]
    if not roi_modes:
        raise ValueError(f"no mode of length {n_roi} in shape {shape}")

    freq = np.zeros(n_roi)
    mass = np.zeros(n_roi)
    for m in models:
        coef = np.abs(reg.coefficient_tensor(m))
        incident_max = np.zeros(n_roi)
        incident_sum = np.zeros(n_roi)
        for j in roi_modes:
            moved = np.moveaxis(coef, j, 0).reshape(n_roi, -1)
            incident_max = np.maximum(incident_max, moved.max(axis=1))
            incident_sum += moved.sum(axis=1)
        sel = incident_max > zero_tol
        freq += sel
        mass += incident_sum
    mass /= len(models)

    order = sorted(range(n_roi), key=lambda i: (-freq[i], -mass[i], i))
    out = []
    for i in order:
        if freq[i] == 0 or len(out) >= top_n:
            break
        out.append({"roi_index": i + 1, "frequency": int(freq[i]),
                    "mean_abs_mass": float(mass[i])})
    return out


# ---------------------------------------------------------------------------
# hyperparameter sweeps
# ---------------------------------------------------------------------------

def sweep_k(features, y, k_values, cfg: ProtocolConfig,
            kind: str = "connectivity", sigma: float = 1.0,
            methods=("proposed",), score: str = "y", ids=()) -> list[dict]:
    """Rebuild the graph representation per k and run the benchmark at each.

    ``features`` is the stacked (N, 116, 3) raw feature array; ``y`` the
    already-normalized responses (they do not depend on k).
    """
    rows = []
    for k in k_values:
        gcfg = GraphConfig(k=int(k), sigma=sigma)
        tensors = np.stack([build_representation(f, kind, gcfg) for f in features])
        ds = Dataset(tensors, y, tuple(ids))
        rep = run_benchmark(ds, methods, cfg, representation=f"{kind}(k={int(k)})",
                            score=score)
        for agg in rep.aggregates:
            rows.append({
                "k": int(k), "method": agg["method"],
                "rmse_mean": agg["rmse_mean"], "rmse_std": agg["rmse_std"],
                "sparsity_mean": agg["sparsity_mean"], "sparsity_std": agg["sparsity_std"],
                "fully_connected": int(k) == N_ROI,
            })
    return rows


def sweep_rank(ds: Dataset, r_values, cfg: ProtocolConfig, score: str = "y") -> list[dict]:
    """Test RMSE and sparsity of the tensor model as max_rank grows.

    Exploits prefix stability: each trial fits once at max(r_values) and
    every smaller rank is scored from the prefix of that fit, which is
    identical to refitting at that rank.
    """
    r_values = sorted(int(r) for r in r_values)
    if not r_values or r_values[0] < 1:
        raise ValueError("rank values must be >= 1")
    top = r_values[-1]

    def one_trial(trial):
        train, test = split(ds, cfg, trial)
        fitcfg = replace(cfg.fit, max_rank=top, seed=_model_seed(cfg.seed, trial))
        model = reg.fit(train, fitcfg)
        prefices = (reg.prefix_predictions(model, test.tensors)
                    if model.rank else np.zeros((0, len(test))))
        out = []
        coef = np.zeros(model.input_shape)
        sparsities = []
        for w, _ in model.components:
            coef += materialize(w)
            sparsities.append(100.0 * float(np.mean(np.abs(coef) <= cfg.zero_tol)))
        for r in r_values:
            eff = min(r, model.rank)
            pred = prefices[eff - 1] if eff else np.zeros(len(test))
            spars = sparsities[eff - 1] if eff else 100.0
            out.append((r, rmse(test.y, pred), spars))
        return out

    per_trial = _parallel_map(one_trial, list(range(cfg.n_trials)), cfg.n_jobs)
    rows = []
    for i, r in enumerate(r_values):
        rs = np.array([t[i][1] for t in per_trial])
        sp = np.array([t[i][2] for t in per_trial])
        ddof = 1 if len(per_trial) > 1 else 0
        rows.append({
            "max_rank": r,
            "rmse_mean": float(rs.mean()), "rmse_std": float(rs.std(ddof=ddof)),
            "sparsity_mean": float(sp.mean()), "sparsity_std": float(sp.std(ddof=ddof)),
        })
    return rows


# ---------------------------------------------------------------------------
# CSV writers
# ---------------------------------------------------------------------------

def records_to_csv(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report.to_csv())


def curve_to_csv(rows, path) -> None:
    """Write sweep curves; header comes from the first row's keys."""
    if not rows:
        raise ValueError("no curve rows to write")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = list(rows[0].keys())
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in
                             (row[h] for h in header)])
