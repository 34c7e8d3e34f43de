"""Vector-space comparison methods: Lasso, Elastic Net, Group Lasso, PCA+LR.

All four operate on row-major vectorized tensors. Penalized fits
standardize columns to zero mean / unit variance first (constant columns
are left unscaled and their weights forced to zero), fit an unpenalized
intercept, and report weights undone back to the original feature scale.
Lasso and Elastic Net use cyclic coordinate descent with exact
soft-thresholding; Group Lasso uses block coordinate descent with a
proximal inner solve per block. Subgradient (KKT) checkers for each
penalized objective are exported alongside the fitters.

Objectives (standardized design X, centered response):

    lasso:  (1/N)||y - Xw||^2 + lam * ||w||_1
    enet:   (1/N)||y - Xw||^2 + lam * (alpha*||w||_1 + (1-alpha)*||w||_2^2)
    glasso: (1/N)||y - Xw||^2 + lam_g * sum_g sqrt(|g|)*||w_g||_2
                               + lam_1 * ||w||_1
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LinearModel",
    "GroupSpec",
    "vectorize",
    "devectorize",
    "groups_by_mode",
    "groups_by_modality",
    "groups_by_roi",
    "lasso_fit",
    "enet_fit",
    "glasso_fit",
    "pca_lr_fit",
    "predict_linear",
    "linear_sparsity",
    "lasso_kkt_violation",
    "enet_kkt_violation",
    "glasso_kkt_violation",
]

_MAX_SWEEPS = 20000
_CD_TOL = 1e-13


@dataclass
class LinearModel:
    """Linear predictor over vectorized tensor features."""

    weights: np.ndarray
    intercept: float
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GroupSpec:
    """Group index per vectorized feature plus the grouping convention name."""

    assignment: np.ndarray
    mode: str = "custom"

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64).ravel()
        if a.size < 1:
            raise ValueError("empty group assignment")
        ids = np.unique(a)
        if ids.min() < 0:
            raise ValueError("group indices must be nonnegative")
        object.__setattr__(self, "assignment", a)

    def blocks(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assignment == g) for g in np.unique(self.assignment)]


# ---------------------------------------------------------------------------
# vectorization and group builders
# ---------------------------------------------------------------------------

def vectorize(x) -> np.ndarray:
    """Row-major flattening (last tensor index fastest); invertible given shape."""
    return np.ascontiguousarray(np.asarray(x, dtype=np.float64)).ravel().copy()


def devectorize(v, shape) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v.reshape(tuple(shape)).copy()


def groups_by_mode(shape, mode: int, name: str = "custom") -> GroupSpec:
    """One group per index along ``mode`` of a tensor of the given shape."""
    shape = tuple(shape)
    if not 0 <= mode < len(shape):
        raise ValueError(f"mode {mode} out of range for shape {shape}")
    idx = np.unravel_index(np.arange(int(np.prod(shape))), shape)[mode]
    return GroupSpec(idx, name)


def groups_by_modality(shape) -> GroupSpec:
    """Group features by imaging modality (the trailing length-3 mode)."""
    shape = tuple(shape)
    if shape[-1] != 3:
        raise ValueError(f"last mode of {shape} is not a 3-way modality axis")
    return groups_by_mode(shape, len(shape) - 1, "by-modality")


def groups_by_roi(shape) -> GroupSpec:
    """Group features by the leading ROI mode."""
    return groups_by_mode(tuple(shape), 0, "by-roi")


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise ValueError("X must be a 2-D design matrix")
    if X.shape[0] < 1:
        raise ValueError("empty data")
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} rows but {y.size} responses")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    return X, y


def _standardize(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    scale = np.where(sd > 0, sd, 1.0)
    return (X - mu) / scale, mu, scale


def _finish(w_std, mu, scale, ybar, meta) -> LinearModel:
    w = w_std / scale
    b = float(ybar - mu @ w)
    return LinearModel(w, b, meta)


def predict_linear(model: LinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return X @ model.weights + model.intercept


def linear_sparsity(model: LinearModel, zero_tol: float = 1e-10) -> float:
    """Percentage of zero weights (intercept excluded)."""
    return 100.0 * float(np.mean(np.abs(model.weights) <= zero_tol))


# ---------------------------------------------------------------------------
# coordinate descent for l1 (+ optional l2) penalties, residual-update form
# ---------------------------------------------------------------------------

def _cd_enet_kernel(X, col_sq, r, w, thresh, ridge, max_sweeps, tol):
    """Cyclic sweeps over w in place, maintaining r = y - X w."""
    n, p = X.shape
    for _ in range(max_sweeps):
        max_step = 0.0
        w_max = 1.0
        for k in range(p):
            bk = col_sq[k]
            if bk <= 0.0:
                continue
            wk_old = w[k]
            a = bk * wk_old
            for i in range(n):
                a += X[i, k] * r[i]
            aa = abs(a) - thresh
            wk = 0.0 if aa <= 0.0 else (aa if a > 0 else -aa) / (bk + ridge)
            delta = wk - wk_old
            if delta != 0.0:
                for i in range(n):
                    r[i] -= X[i, k] * delta
                w[k] = wk
                step = abs(delta)
                if step > max_step:
                    max_step = step
            if abs(wk) > w_max:
                w_max = abs(wk)
        if max_step <= tol * w_max:
            break


try:
    from numba import njit as _njit

    _cd_enet_kernel = _njit(cache=True)(_cd_enet_kernel)
except ImportError:  # pragma: no cover - numba is a declared dependency
    pass


def _cd_enet(X, y, thresh, ridge, max_sweeps=_MAX_SWEEPS, tol=_CD_TOL):
    """w_k <- S(x_k'r + b_k w_k, thresh) / (b_k + ridge), cyclically."""
    p = X.shape[1]
    w = np.zeros(p)
    r = y.copy()
    col_sq = np.einsum("ij,ij->j", X, X)
    _cd_enet_kernel(np.ascontiguousarray(X), col_sq, r, w,
                    thresh, ridge, max_sweeps, tol)
    return w


def lasso_fit(X, y, lam: float) -> LinearModel:
    """Lasso with unpenalized intercept on standardized columns.

    Minimizes (1/N)||y - Xw - b||^2 + lam*||w||_1 in standardized
    coordinates; the zero solution is optimal for
    lam >= (2/N)*||X_std'(y - ybar)||_inf.
    """
    X, y = _check_xy(X, y)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    n = X.shape[0]
    Xs, mu, scale = _standardize(X)
    ybar = float(y.mean())
    w = _cd_enet(Xs, y - ybar, lam * n / 2.0, 0.0)
    return _finish(w, mu, scale, ybar, {"method": "lasso", "lam": lam})


def enet_fit(X, y, lam: float, alpha: float) -> LinearModel:
    """Elastic net: lam * (alpha*l1 + (1-alpha)*l2^2), alpha in [0, 1]."""
    X, y = _check_xy(X, y)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    n = X.shape[0]
    Xs, mu, scale = _standardize(X)
    ybar = float(y.mean())
    w = _cd_enet(Xs, y - ybar, lam * alpha * n / 2.0, lam * (1.0 - alpha) * n)
    return _finish(w, mu, scale, ybar, {"method": "enet", "lam": lam, "alpha": alpha})


# ---------------------------------------------------------------------------
# sparse group lasso by block coordinate descent
# ---------------------------------------------------------------------------

def _prox_l1_l2(v, t1, t2):
    """prox of t1*||.||_1 + t2*||.||_2 (composite prox, in that order)."""
    u = np.sign(v) * np.maximum(np.abs(v) - t1, 0.0)
    nrm = float(np.linalg.norm(u))
    if nrm <= t2 or nrm == 0.0:
        return np.zeros_like(u)
    return u * (1.0 - t2 / nrm)


def _block_solve(Gg, bg, w0, n, pen_g, lam_1, lip, max_iter=2000, tol=1e-14):
    """min (1/N)(w'Gg w - 2 b'w) + pen_g*||w||_2 + lam_1*||w||_1 by FISTA.

    Gram form of one block subproblem (Gg = Xg'Xg, bg = Xg'rg); every
    iteration is O(p_g^2) regardless of sample count.
    """
    if lip <= 0.0:
        return np.zeros_like(w0)
    t = 1.0 / lip
    w = w0.copy()
    z = w.copy()
    theta = 1.0
    for _ in range(max_iter):
        grad = (2.0 / n) * (Gg @ z - bg)
        w_new = _prox_l1_l2(z - t * grad, t * lam_1, t * pen_g)
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        z = w_new + ((theta - 1.0) / theta_new) * (w_new - w)
        step = float(np.max(np.abs(w_new - w)))
        w = w_new
        theta = theta_new
        if step <= tol * max(1.0, float(np.max(np.abs(w)))):
            break
    return w


def glasso_fit(X, y, groups: GroupSpec, lam_g: float, lam_1: float = 0.0,
               max_sweeps=2000, kkt_tol=1e-8) -> LinearModel:
    """Group lasso with sqrt(group size) weights plus an optional l1 term.

    Block coordinate descent; each block is solved by accelerated proximal
    gradient in Gram form, and the outer loop runs until the subgradient
    conditions hold to ``kkt_tol`` (or the sweep cap is reached).
    """
    X, y = _check_xy(X, y)
    if lam_g < 0 or lam_1 < 0:
        raise ValueError("penalties must be nonnegative")
    if groups.assignment.size != X.shape[1]:
        raise ValueError(
            f"group assignment covers {groups.assignment.size} features, X has {X.shape[1]}"
        )
    n = X.shape[0]
    Xs, mu, scale = _standardize(X)
    yc = y - float(y.mean())
    blocks = groups.blocks()
    Xgs = [np.ascontiguousarray(Xs[:, g]) for g in blocks]
    grams = [Xg.T @ Xg for Xg in Xgs]
    lips = [2.0 / n * (float(np.linalg.norm(G, 2)) if G.size else 0.0)
            for G in grams]

    # min-norm least squares warm start: at vanishing penalties block
    # descent would otherwise crawl toward the LS solution through the
    # block coupling; shrinking from LS is fast at any penalty level
    if X.shape[1] <= 4096:
        w, *_ = np.linalg.lstsq(Xs, yc, rcond=None)
    else:
        w = np.zeros(X.shape[1])
    r = yc - Xs @ w  # running residual yc - Xs @ w
    for sweep in range(max_sweeps):
        for bi, g in enumerate(blocks):
            Xg = Xgs[bi]
            wg = w[g]
            rg = r + Xg @ wg
            bg = Xg.T @ rg
            pen_g = lam_g * np.sqrt(len(g))
            # zero test: group stays out unless the thresholded gradient escapes
            u = np.sign(bg) * np.maximum(np.abs((2.0 / n) * bg) - lam_1, 0.0)
            if float(np.linalg.norm(u)) <= pen_g:
                wg_new = np.zeros(len(g))
            else:
                wg_new = _block_solve(grams[bi], bg, wg, n, pen_g, lam_1, lips[bi])
            if float(np.max(np.abs(wg_new - wg))) > 0.0:
                r = rg - Xg @ wg_new
                w[g] = wg_new
        if _glasso_violation(blocks, Xgs, r, w, n, lam_g, lam_1) <= kkt_tol:
            break
    meta = {"method": "glasso", "lam_g": lam_g, "lam_1": lam_1, "grouping": groups.mode}
    return _finish(w, mu, scale, float(y.mean()), meta)


def _glasso_violation(blocks, Xgs, r, w, n, lam_g, lam_1) -> float:
    worst = 0.0
    for bi, g in enumerate(blocks):
        gg = -(2.0 / n) * (Xgs[bi].T @ r)  # gradient of the fit term
        wg = w[g]
        pen_g = lam_g * np.sqrt(len(g))
        if float(np.max(np.abs(wg), initial=0.0)) == 0.0:
            u = np.sign(-gg) * np.maximum(np.abs(gg) - lam_1, 0.0)
            worst = max(worst, max(0.0, float(np.linalg.norm(u)) - pen_g))
        else:
            ray = pen_g * wg / float(np.linalg.norm(wg))
            nz = wg != 0.0
            if np.any(nz):
                worst = max(worst, float(np.max(np.abs(gg[nz] + ray[nz] + lam_1 * np.sign(wg[nz])))))
            if np.any(~nz):
                worst = max(worst, float(np.max(np.maximum(np.abs(gg[~nz]) - lam_1, 0.0))))
    return worst


# ---------------------------------------------------------------------------
# PCA followed by linear regression
# ---------------------------------------------------------------------------

def pca_lr_fit(X, y, component_fraction: float) -> LinearModel:
    """Least squares on the top principal directions of centered X.

    Keeps ceil(fraction * min(N-1, p)) directions and folds the reduced
    solution back to a dense weight vector over the original features, so
    the reported sparsity is 0 by construction.
    """
    X, y = _check_xy(X, y)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if not 0.0 < component_fraction <= 1.0:
        raise ValueError("component_fraction must be in (0, 1]")
    n, p = X.shape
    mu = X.mean(axis=0)
    Xc = X - mu
    ybar = float(y.mean())
    _, _, vt = np.linalg.svd(Xc, full_matrices=False)
    q = int(np.ceil(component_fraction * min(n - 1, p)))
    V = vt[:q].T
    T = Xc @ V
    beta, *_ = np.linalg.lstsq(T, y - ybar, rcond=None)
    w = V @ beta
    b = ybar - float(mu @ w)
    return LinearModel(w, b, {"method": "pca_lr", "fraction": component_fraction,
                              "n_components": q})


# ---------------------------------------------------------------------------
# subgradient (KKT) checkers, evaluated in the standardized problem
# ---------------------------------------------------------------------------

def _std_state(X, y, model):
    X, y = _check_xy(X, y)
    Xs, mu, scale = _standardize(X)
    w_std = model.weights * scale
    grad = (2.0 / X.shape[0]) * (Xs.T @ (Xs @ w_std - (y - y.mean())))
    return w_std, grad


def lasso_kkt_violation(X, y, model: LinearModel, lam: float) -> float:
    w, grad = _std_state(X, y, model)
    nz = w != 0.0
    v = 0.0
    if np.any(nz):
        v = float(np.max(np.abs(grad[nz] + lam * np.sign(w[nz]))))
    if np.any(~nz):
        v = max(v, float(np.max(np.maximum(np.abs(grad[~nz]) - lam, 0.0))))
    return v


def enet_kkt_violation(X, y, model: LinearModel, lam: float, alpha: float) -> float:
    w, grad = _std_state(X, y, model)
    grad = grad + 2.0 * lam * (1.0 - alpha) * w
    t = lam * alpha
    nz = w != 0.0
    v = 0.0
    if np.any(nz):
        v = float(np.max(np.abs(grad[nz] + t * np.sign(w[nz]))))
    if np.any(~nz):
        v = max(v, float(np.max(np.maximum(np.abs(grad[~nz]) - t, 0.0))))
    return v


def glasso_kkt_violation(X, y, model: LinearModel, groups: GroupSpec,
                         lam_g: float, lam_1: float = 0.0) -> float:
    w, grad = _std_state(X, y, model)
    v = 0.0
    for g in groups.blocks():
        wg, gg = w[g], grad[g]
        pen_g = lam_g * np.sqrt(len(g))
        if float(np.max(np.abs(wg))) == 0.0:
            u = np.sign(-gg) * np.maximum(np.abs(gg) - lam_1, 0.0)
            v = max(v, max(0.0, float(np.linalg.norm(u)) - pen_g))
        else:
            ray = pen_g * wg / float(np.linalg.norm(wg))
            nz = wg != 0.0
            if np.any(nz):
                v = max(v, float(np.max(np.abs(gg[nz] + ray[nz] + lam_1 * np.sign(wg[nz])))))
            if np.any(~nz):
                v = max(v, float(np.max(np.maximum(np.abs(gg[~nz]) - lam_1, 0.0))))
    return v
