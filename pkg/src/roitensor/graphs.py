"""Per-subject tensor representations built from ROI x modality features.

Three representations are supported, all derived from a subject's
116 x 3 feature matrix (AAL ROI order; modality columns VBM, FDG, AV45):

* concat        -- the raw 116 x 3 matrix itself
* connectivity  -- 116 x 116 ROI-to-ROI similarity graph, where each ROI
                   is described by its 3-vector across modalities
* stack         -- 116 x 116 x 3, one per-modality graph per slice, each
                   ROI described by its scalar value in that modality

Graphs use the Gaussian kernel exp(-||r_i - r_j||^2 / sigma^2) restricted
to a k-nearest-neighbor edge set: each node keeps its k most similar
non-self neighbors, the edge set is symmetrized by union, and the
diagonal is fixed to 1. k = 116 gives the fully connected kernel matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_ROI = 116
MODALITIES = ("VBM", "FDG", "AV45")
N_MODALITIES = len(MODALITIES)

__all__ = [
    "N_ROI",
    "MODALITIES",
    "GraphConfig",
    "as_subject_features",
    "gaussian_similarity",
    "knn_gaussian_graph",
    "build_concat",
    "build_connectivity",
    "build_connectivity_stack",
    "build_representation",
    "REPRESENTATIONS",
]


@dataclass(frozen=True)
class GraphConfig:
    """kNN graph parameters: neighbor count k and kernel width sigma.

    ``zscore`` optionally standardizes each feature column before any
    distance computation (default off).
    """

    k: int = N_ROI
    sigma: float = 1.0
    zscore: bool = False

    def __post_init__(self):
        if not 1 <= self.k <= N_ROI:
            raise ValueError(f"k must be in [1, {N_ROI}], got {self.k}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def as_subject_features(features) -> np.ndarray:
    """Validate one subject's ROI feature matrix (116 rows x 3 modalities)."""
    f = np.asarray(features, dtype=np.float64)
    if f.shape != (N_ROI, N_MODALITIES):
        raise ValueError(f"expected a ({N_ROI}, {N_MODALITIES}) feature matrix, got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("subject features must be finite")
    return f


def gaussian_similarity(r_i, r_j, sigma: float = 1.0) -> float:
    """exp(-||r_i - r_j||_2^2 / sigma^2); equals 1 iff the vectors coincide."""
    r_i = np.atleast_1d(np.asarray(r_i, dtype=np.float64))
    r_j = np.atleast_1d(np.asarray(r_j, dtype=np.float64))
    if r_i.shape != r_j.shape:
        raise ValueError(f"vectors must have equal length, got {r_i.shape} vs {r_j.shape}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    d2 = float(np.sum((r_i - r_j) ** 2))
    return float(np.exp(-d2 / sigma**2))


def knn_gaussian_graph(points: np.ndarray, k: int, sigma: float = 1.0) -> np.ndarray:
    """Size-generic kNN Gaussian similarity graph over n points.

    ``points`` is (n, d) or (n,); every node keeps its min(k, n-1) most
    similar non-self neighbors (ties broken toward the lower index), the
    kept edge sets are united symmetrically, and the diagonal is set to 1.
    With k >= n the full kernel matrix is returned.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")

    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    sim = np.exp(-d2 / sigma**2)

    kk = min(k, n - 1)
    if kk >= n - 1:
        full = sim.copy()
        np.fill_diagonal(full, 1.0)
        return full

    keep = np.zeros((n, n), dtype=bool)
    for i in range(n):
        row = sim[i].copy()
        row[i] = -np.inf
        # stable sort on -similarity: equal similarities keep index order
        order = np.argsort(-row, kind="stable")
        keep[i, order[:kk]] = True
    keep |= keep.T  # union symmetrization

    out = np.where(keep, sim, 0.0)
    np.fill_diagonal(out, 1.0)
    return out


def build_concat(features) -> np.ndarray:
    """116 x 3 tensor: the feature matrix itself, modality order VBM, FDG, AV45."""
    return as_subject_features(features).copy()


def _prepared(features, cfg: GraphConfig) -> np.ndarray:
    f = as_subject_features(features)
    if cfg.zscore:
        mu = f.mean(axis=0)
        sd = f.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        f = (f - mu) / sd
    return f


def build_connectivity(features, cfg: GraphConfig = GraphConfig()) -> np.ndarray:
    """116 x 116 ROI graph where each ROI is its 3-vector across modalities."""
    f = _prepared(features, cfg)
    return knn_gaussian_graph(f, cfg.k, cfg.sigma)


def build_connectivity_stack(features, cfg: GraphConfig = GraphConfig()) -> np.ndarray:
    """116 x 116 x 3 tensor: one per-modality scalar-feature graph per slice."""
    f = _prepared(features, cfg)
    slices = [knn_gaussian_graph(f[:, m], cfg.k, cfg.sigma) for m in range(N_MODALITIES)]
    return np.ascontiguousarray(np.stack(slices, axis=-1))


REPRESENTATIONS = ("concat", "connectivity", "stack")


def build_representation(features, kind: str, cfg: GraphConfig = GraphConfig()) -> np.ndarray:
    """Dispatch to one of the three representations by name."""
    if kind == "concat":
        return build_concat(features)
    if kind == "connectivity":
        return build_connectivity(features, cfg)
    if kind == "stack":
        return build_connectivity_stack(features, cfg)
    raise ValueError(f"unknown representation {kind!r}; expected one of {REPRESENTATIONS}")
