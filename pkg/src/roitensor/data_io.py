"""Cohort CSV ingestion, score normalization, and synthetic data generation.

Cohort files are UTF-8 CSV with a header row and columns:

    subject_id, <MOD>_<ROI> x 348, DSS, ADAS13, MMSE

where MOD is one of VBM, FDG, AV45 and ROI runs over the canonical
AAL-116 label list (shipped as a package resource, ordered, 1-based).
Decimal point is '.', no thousands separators. Extra columns are ignored;
missing columns, non-numeric cells, duplicate subject ids and
out-of-range scores are rejected with row/column diagnostics.

Clinical scores are normalized to [0, 1] with higher = more severe:
DSS (stage 1..5) -> (d-1)/4, ADAS13 (0..85) -> a/85, and MMSE (0..30,
higher is better cognition) is flipped to (30-m)/30. Normalization uses
the instruments' documented ranges by default; ``mode="cohort"`` switches
to min-max over the observed cohort values instead.

Synthetic cohorts plant a sparse low-rank signal: a handful of rank-one
components with sparse factors, responses <sum W*, X> plus Gaussian noise,
min-max rescaled to [0, 1] with the affine map recorded.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources as _importlib_resources
from math import ceil

import numpy as np

from .graphs import MODALITIES, N_ROI, GraphConfig, build_representation
from .tensors import UnitRankTensor, inner_product_batch, materialize

__all__ = [
    "SchemaError",
    "Dataset",
    "Cohort",
    "SynthConfig",
    "SyntheticData",
    "SCORE_NAMES",
    "aal116_labels",
    "feature_columns",
    "load_cohort",
    "write_cohort",
    "normalize_scores",
    "generate_synthetic",
    "generate_graph_synthetic",
    "save_tensor_dump",
    "load_tensor_dump",
]

SCORE_NAMES = ("DSS", "ADAS13", "MMSE")
_SCORE_RANGES = {"DSS": (1.0, 5.0), "ADAS13": (0.0, 85.0), "MMSE": (0.0, 30.0)}


class SchemaError(ValueError):
    """Malformed input file: missing columns, bad cells, duplicate ids."""


def aal116_labels() -> tuple[str, ...]:
    """The canonical, ordered AAL-116 ROI label list (index 1..116)."""
    text = _importlib_resources.files("roitensor.resources").joinpath(
        "aal116_labels.txt").read_text(encoding="utf-8")
    labels = tuple(line.strip() for line in text.splitlines() if line.strip())
    assert len(labels) == N_ROI
    return labels


def feature_columns() -> list[str]:
    """The 348 feature column names, modality-major: VBM_*, FDG_*, AV45_*."""
    labels = aal116_labels()
    return [f"{mod}_{roi}" for mod in MODALITIES for roi in labels]


# ---------------------------------------------------------------------------
# core containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    """N subjects: stacked tensors (N, I_1..I_M), responses y, subject ids."""

    tensors: np.ndarray
    y: np.ndarray
    ids: tuple[str, ...] = ()

    def __post_init__(self):
        t = np.asarray(self.tensors, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if t.ndim < 2:
            raise ValueError("tensors must be stacked as (N, I_1..I_M)")
        if t.shape[0] != y.size:
            raise ValueError(f"{t.shape[0]} tensors but {y.size} responses")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ValueError("dataset values must be finite")
        ids = tuple(self.ids) if self.ids else tuple(f"s{i:04d}" for i in range(t.shape[0]))
        if len(ids) != t.shape[0]:
            raise ValueError("ids length does not match subject count")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate subject ids")
        object.__setattr__(self, "tensors", t)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return self.tensors.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.tensors.shape[1:])

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.tensors[idx], self.y[idx], tuple(self.ids[i] for i in idx))


@dataclass(frozen=True)
class Cohort:
    """Raw per-subject ROI features (N, 116, 3) and raw clinical scores."""

    ids: tuple[str, ...]
    features: np.ndarray
    scores: dict

    def __len__(self) -> int:
        return self.features.shape[0]

    def dataset(self, score: str, representation: str = "concat",
                cfg: GraphConfig = GraphConfig(), norm_mode: str = "instrument") -> Dataset:
        """Build a Dataset for one clinical score under one representation."""
        y = normalize_scores(score, self.scores[score], mode=norm_mode)
        tensors = np.stack([build_representation(f, representation, cfg)
                            for f in self.features])
        return Dataset(tensors, y, self.ids)


# ---------------------------------------------------------------------------
# cohort CSV
# ---------------------------------------------------------------------------

def _parse_cell(raw: str, row: int, col: str) -> float:
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise SchemaError(f"row {row}: non-numeric value {raw!r} in column {col}") from None
    if not np.isfinite(v):
        raise SchemaError(f"row {row}: non-finite value in column {col}")
    return v


def load_cohort(path) -> Cohort:
    """Read a cohort CSV; see the module docstring for the schema."""
    feat_cols = feature_columns()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ["subject_id", *feat_cols, *SCORE_NAMES]:
            if col not in header:
                raise SchemaError(f"missing column {col}")
        ids, rows, scores = [], [], {s: [] for s in SCORE_NAMES}
        seen = set()
        for i, rec in enumerate(reader, start=2):  # data starts on file line 2
            sid = (rec.get("subject_id") or "").strip()
            if not sid:
                raise SchemaError(f"row {i}: empty subject_id")
            if sid in seen:
                raise SchemaError(f"duplicate subject_id {sid!r} at row {i}")
            seen.add(sid)
            vals = [_parse_cell(rec[c], i, c) for c in feat_cols]
            for s in SCORE_NAMES:
                v = _parse_cell(rec[s], i, s)
                lo, hi = _SCORE_RANGES[s]
                if not lo <= v <= hi:
                    raise SchemaError(f"row {i}: {s}={v} outside [{lo}, {hi}]")
                if s == "DSS" and v != int(v):
                    raise SchemaError(f"row {i}: DSS={v} is not an integer stage")
                scores[s].append(v)
            ids.append(sid)
            rows.append(vals)
    if not rows:
        raise SchemaError("cohort file has no data rows")
    feats = np.asarray(rows, dtype=np.float64)
    # columns are modality-major: reshape to (N, 3, 116) then put ROI first
    feats = feats.reshape(len(rows), len(MODALITIES), N_ROI).transpose(0, 2, 1)
    return Cohort(tuple(ids), np.ascontiguousarray(feats),
                  {s: np.asarray(v) for s, v in scores.items()})


def write_cohort(path, cohort: Cohort) -> None:
    """Write a cohort back to the same CSV schema; reload is value-identical."""
    feat_cols = feature_columns()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", *feat_cols, *SCORE_NAMES])
        for i, sid in enumerate(cohort.ids):
            flat = cohort.features[i].T.ravel()  # back to modality-major order
            row = [sid, *(repr(float(v)) for v in flat)]
            row += [repr(float(cohort.scores[s][i])) for s in SCORE_NAMES]
            writer.writerow(row)


def normalize_scores(name: str, values, mode: str = "instrument") -> np.ndarray:
    """Map raw clinical scores to [0, 1], oriented so higher = more severe."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if name not in _SCORE_RANGES:
        raise ValueError(f"unknown score {name!r}; expected one of {SCORE_NAMES}")
    lo, hi = _SCORE_RANGES[name]
    if np.any(v < lo) or np.any(v > hi):
        bad = v[(v < lo) | (v > hi)][0]
        raise ValueError(f"{name}={bad} outside documented range [{lo}, {hi}]")
    sev = (hi - v) if name == "MMSE" else v  # flip MMSE: raw higher = better
    if mode == "instrument":
        base = 0.0 if name == "MMSE" else lo
        return (sev - base) / (hi - lo)
    if mode == "cohort":
        rng = sev.max() - sev.min()
        if rng == 0:
            raise ValueError(f"cohort min-max undefined: all {name} values equal")
        return (sev - sev.min()) / rng
    raise ValueError(f"unknown normalization mode {mode!r}")


# ---------------------------------------------------------------------------
# synthetic cohorts with planted sparse low-rank signal
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 200
    shape: tuple[int, ...] = (20, 20, 3)
    true_rank: int = 3
    support_density: float = 0.1
    noise_std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if self.n_subjects < 1 or self.true_rank < 1:
            raise ValueError("n_subjects and true_rank must be positive")
        if any(n < 1 for n in self.shape):
            raise ValueError(f"invalid shape {self.shape}")
        if not 0.0 < self.support_density <= 1.0:
            raise ValueError("support_density must be in (0, 1]")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")


@dataclass(frozen=True)
class SyntheticData:
    """Generated dataset plus the planted components and response scaling.

    The recorded affine map satisfies y_raw = y * scale + offset, where
    y_raw = <sum W*, X> + noise before the min-max rescale to [0, 1].
    """

    dataset: Dataset
    components: tuple[UnitRankTensor, ...]
    y_raw: np.ndarray
    offset: float
    scale: float

    def coefficient_tensor(self) -> np.ndarray:
        out = np.zeros(self.dataset.shape)
        for w in self.components:
            out += materialize(w)
        return out

    def noise_floor(self, noise_std: float) -> float:
        """Noise std expressed on the [0, 1]-rescaled response axis."""
        return noise_std / self.scale


def _planted_components(shape, true_rank, density, rng):
    comps = []
    for _ in range(true_rank):
        factors = []
        for n in shape:
            nnz = ceil(density * n)
            if nnz < 1:
                raise ValueError("support_density yields an empty factor support")
            f = np.zeros(n)
            pos = rng.choice(n, size=nnz, replace=False)
            f[pos] = rng.standard_normal(nnz)
            factors.append(f)
        comps.append(UnitRankTensor(tuple(factors)))
    return tuple(comps)


def _finish_synthetic(xs, comps, noise_std, rng, ids) -> SyntheticData:
    signal = np.zeros(xs.shape[0])
    for w in comps:
        signal += inner_product_batch(xs, w)
    y_raw = signal + (rng.normal(0.0, noise_std, xs.shape[0]) if noise_std > 0
                      else np.zeros(xs.shape[0]))
    offset = float(y_raw.min())
    scale = float(y_raw.max() - y_raw.min())
    if scale <= 0:
        raise ValueError("degenerate response range; increase n_subjects or signal")
    y = (y_raw - offset) / scale
    return SyntheticData(Dataset(xs, y, ids), comps, y_raw, offset, scale)


def generate_synthetic(cfg: SynthConfig) -> SyntheticData:
    """Standard-normal tensors with responses from planted rank-one components."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & 0xFFFFFFFF, 7]))
    comps = _planted_components(cfg.shape, cfg.true_rank, cfg.support_density, rng)
    xs = rng.standard_normal((cfg.n_subjects, *cfg.shape))
    ids = tuple(f"synth{i:05d}" for i in range(cfg.n_subjects))
    return _finish_synthetic(xs, comps, cfg.noise_std, rng, ids)


def generate_graph_synthetic(n_subjects: int, kind: str = "connectivity",
                             true_rank: int = 2, support_density: float = 0.05,
                             noise_std: float = 0.02, sigma: float = 1.0,
                             feature_scale: float = 0.35, balance: bool = True,
                             seed: int = 0):
    """Synthetic ROI cohort whose signal lives on the fully connected graph.

    Random per-subject 116 x 3 features are turned into the requested graph
    representation at k = 116; responses are planted on those tensors. Use
    for neighbor-count sweeps: rebuilding at smaller k discards edges the
    signal depends on. Returns ``(features, SyntheticData)``.

    ``feature_scale`` sets the feature spread; the default keeps pairwise
    Gaussian similarities mid-range at sigma = 1 (larger spreads push all
    off-diagonal similarities toward zero and leave nothing to regress on).
    ``balance`` rescales every planted component to unit Frobenius norm so
    that each one carries a visible share of the response.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 11]))
    features = rng.standard_normal((n_subjects, N_ROI, len(MODALITIES))) * feature_scale
    cfg = GraphConfig(k=N_ROI, sigma=sigma)
    xs = np.stack([build_representation(f, kind, cfg) for f in features])
    comps = _planted_components(xs.shape[1:], true_rank, support_density, rng)
    if balance:
        comps = tuple(
            UnitRankTensor((w.factors[0] / np.linalg.norm(materialize(w)),
                            *w.factors[1:]))
            for w in comps
        )
    ids = tuple(f"gsyn{i:05d}" for i in range(n_subjects))
    return features, _finish_synthetic(xs, comps, noise_std, rng, ids)


# ---------------------------------------------------------------------------
# binary-free JSON tensor dumps
# ---------------------------------------------------------------------------

def save_tensor_dump(path, dataset: Dataset, meta: dict | None = None) -> None:
    """Write a dataset (tensors + responses + ids) as plain JSON."""
    doc = {
        "shape": list(dataset.shape),
        "ids": list(dataset.ids),
        "tensors": [t.tolist() for t in dataset.tensors],
        "y": dataset.y.tolist(),
        "meta": meta or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)


def load_tensor_dump(path) -> tuple[Dataset, dict]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"not valid JSON: {e}") from None
    for key in ("shape", "ids", "tensors", "y"):
        if key not in doc:
            raise SchemaError(f"tensor dump missing key {key!r}")
    tensors = np.asarray(doc["tensors"], dtype=np.float64)
    if tuple(tensors.shape[1:]) != tuple(doc["shape"]):
        raise SchemaError(
            f"tensor shape {tensors.shape[1:]} does not match declared {tuple(doc['shape'])}"
        )
    ds = Dataset(tensors, np.asarray(doc["y"], dtype=np.float64), tuple(doc["ids"]))
    return ds, doc.get("meta", {})
