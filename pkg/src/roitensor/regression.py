"""Sequential sparse unit-rank tensor regression.

Fits y_i ~ <W, X_i> with W a sum of rank-one tensors, one component at a
time: component r is fit to the current response residuals by solving

    min_W  (1/N) sum_i (<W, X_i> - y_i^r)^2 + lambda_r ||W||_1,
    s.t.   CP rank(W) <= 1,

then the residuals are deflated and the next component is fit. Because
the l1 norm of a rank-one tensor is the product of its factor l1 norms,
the penalty separates over modes: with all factors but mode j frozen the
subproblem is an ordinary vector Lasso in w^(j), which we solve by cyclic
coordinate descent with exact soft-thresholding, cycling over modes until
the objective stalls and the mode-wise subgradient conditions hold.

lambda_r is chosen per step: a geometric grid descends from the critical
level at which the zero solution becomes optimal, each candidate is scored
on an internal 80/20 split of the residuals, and the winner (ties to the
smaller penalty) is refit on the full residuals. A step that cannot beat
the zero component ends the sequence, which keeps the training RMSE path
nonincreasing by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graphs import MODALITIES
from .tensors import (
    UnitRankTensor,
    contract_except_batch,
    inner_product_batch,
    materialize,
)

__all__ = [
    "FitConfig",
    "RegressionModel",
    "fit",
    "fit_unit_rank",
    "fit_unit_rank_fixed_lambda",
    "predict",
    "predict_batch",
    "coefficient_tensor",
    "model_sparsity",
    "modality_contribution",
    "unit_rank_kkt_violation",
    "model_to_json",
    "model_from_json",
]

# Sweep/iteration ceilings for the inner coordinate descent. The CD stops
# far earlier in practice; the tight tolerance is what makes the mode-wise
# KKT conditions hold to ~1e-9 at termination.
_CD_MAX_SWEEPS = 2000
_CD_TOL = 1e-13
_KKT_STOP = 1e-9


@dataclass(frozen=True)
class FitConfig:
    """Solver settings.

    max_rank caps the number of sequential rank-one components;
    inner_max_iters caps alternating mode passes inside one component fit;
    convergence_tol is the relative objective-change threshold (also used
    as the minimum relative training-RMSE improvement to accept a step);
    lambda_grid_size is the number of penalty candidates per step; seed
    drives initialization and the internal validation split. With
    ``debias`` on (default), each accepted component is polished by
    alternating least squares restricted to its selected support, which
    removes the l1 shrinkage bias without changing the support; penalty
    candidates are scored on the validation split in polished form too,
    so overgrown supports overfit and lose the selection.
    """

    max_rank: int = 10
    inner_max_iters: int = 200
    convergence_tol: float = 1e-7
    lambda_grid_size: int = 16
    seed: int = 0
    debias: bool = True

    def __post_init__(self):
        if self.max_rank < 1:
            raise ValueError("max_rank must be >= 1")
        if self.inner_max_iters < 1:
            raise ValueError("inner_max_iters must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if self.lambda_grid_size < 2:
            raise ValueError("lambda_grid_size must be >= 2")


@dataclass
class RegressionModel:
    """Ordered rank-one components with their per-step penalties."""

    components: list[tuple[UnitRankTensor, float]]
    input_shape: tuple[int, ...]
    train_rmse_path: list[float] = field(default_factory=list)

    @property
    def rank(self) -> int:
        return len(self.components)


# ---------------------------------------------------------------------------
# input validation
# ---------------------------------------------------------------------------

def _check_inputs(xs, residuals):
    xs = np.asarray(xs, dtype=np.float64)
    y = np.asarray(residuals, dtype=np.float64).ravel()
    if xs.ndim < 2:
        raise ValueError("xs must be a stacked (N, I_1..I_M) array with M >= 1")
    if xs.shape[0] < 1:
        raise ValueError("empty dataset")
    if xs.shape[0] != y.size:
        raise ValueError(f"{xs.shape[0]} tensors but {y.size} responses")
    if any(n < 1 for n in xs.shape[1:]):
        raise ValueError(f"degenerate tensor shape {xs.shape[1:]}")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    return xs, y


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(v)))) if v.size else 0.0


# ---------------------------------------------------------------------------
# mode-wise Lasso by cyclic coordinate descent (Gram form)
# ---------------------------------------------------------------------------

def _cd_kernel(G, c, w, q, threshold, max_sweeps, tol):
    """Cyclic CD sweeps over w in place, maintaining q = G w."""
    p = c.size
    for _ in range(max_sweeps):
        max_step = 0.0
        w_max = 1.0
        for k in range(p):
            gkk = G[k, k]
            wk_old = w[k]
            if gkk <= 0.0:
                if wk_old != 0.0:
                    for i in range(p):
                        q[i] -= G[i, k] * wk_old
                    w[k] = 0.0
                continue
            a = c[k] - q[k] + gkk * wk_old
            aa = abs(a) - threshold
            wk = 0.0 if aa <= 0.0 else (aa if a > 0 else -aa) / gkk
            delta = wk - wk_old
            if delta != 0.0:
                for i in range(p):
                    q[i] += G[i, k] * delta
                w[k] = wk
                step = abs(delta)
                if step > max_step:
                    max_step = step
            if abs(wk) > w_max:
                w_max = abs(wk)
        if max_step <= tol * w_max:
            break


try:  # the kernel dominates runtime; compile it when numba is available
    from numba import njit as _njit

    _cd_kernel = _njit(cache=True)(_cd_kernel)
except ImportError:  # pragma: no cover - numba is a declared dependency
    pass


def _cd_lasso(G, c, w0, threshold, max_sweeps=_CD_MAX_SWEEPS, tol=_CD_TOL):
    """min_w w'Gw - 2c'w + 2*threshold*||w||_1 by cyclic CD.

    Gram form of the mode subproblem: G = Z'Z, c = Z'y, threshold =
    kappa*N/2. Maintains q = G w incrementally; exact soft-thresholding
    per coordinate, sweeps until the largest coordinate move falls below
    tol relative to the largest weight.
    """
    w = w0.copy()
    q = G @ w
    _cd_kernel(np.ascontiguousarray(G), np.ascontiguousarray(c), w, q,
               threshold, max_sweeps, tol)
    return w


# ---------------------------------------------------------------------------
# rank-one power-iteration warm start
# ---------------------------------------------------------------------------

def _hopm(g, start, rng, max_iter=200, tol=1e-12):
    """Higher-order power iteration on g from the given start factors."""
    shape = g.shape
    factors = [f.copy() for f in start]
    gb = g[None]
    for _ in range(max_iter):
        delta = 0.0
        for j in range(len(shape)):
            v = contract_except_batch(gb, factors, j)[0]
            nrm = np.linalg.norm(v)
            if nrm <= 0.0:
                v = rng.standard_normal(shape[j])
                nrm = np.linalg.norm(v)
            v = v / nrm
            delta = max(delta, float(np.max(np.abs(v - factors[j]))))
            factors[j] = v
        if delta <= tol:
            break
    return factors


def _rank1_init(xs, y, rng):
    """Unit-norm factors approximating the top rank-one part of sum_i y_i X_i.

    Power iteration converges to a local maximizer whose basin depends on
    the start, and a single random start can land on a dominated one, so
    two deterministic starts are run (seeded random and one-hot at the
    gradient tensor's peak entry) and the one with the larger multilinear
    form wins.
    """
    g = np.tensordot(y, xs, axes=(0, 0))
    shape = g.shape
    rand = []
    for n in shape:
        v = rng.standard_normal(n)
        rand.append(v / np.linalg.norm(v))
    peak_idx = np.unravel_index(int(np.argmax(np.abs(g))), shape)
    peak = []
    for n, i in zip(shape, peak_idx):
        v = np.zeros(n)
        v[i] = 1.0
        peak.append(v)

    best, best_score = None, -1.0
    gb = g[None]
    for start in (rand, peak):
        factors = _hopm(g, start, rng)
        score = abs(float(contract_except_batch(gb, factors, 0)[0] @ factors[0]))
        if score > best_score:
            best, best_score = factors, score
    return best


def _canonicalize(factors):
    """Unit l2 norm and nonneg leading entry on all factors but the first.

    Scale and sign are absorbed into factor 0; the materialized tensor is
    unchanged. A vanishing factor collapses the component to all zeros.
    """
    if any(float(np.max(np.abs(f))) == 0.0 for f in factors):
        return [np.zeros_like(f) for f in factors]
    out = [f.copy() for f in factors]
    carry = 1.0
    for j in range(1, len(out)):
        nrm = float(np.linalg.norm(out[j]))
        out[j] /= nrm
        carry *= nrm
        k = int(np.argmax(np.abs(out[j])))
        if out[j][k] < 0:
            out[j] = -out[j]
            carry = -carry
    out[0] *= carry
    return out


# ---------------------------------------------------------------------------
# alternating fit of one rank-one component at fixed penalty
# ---------------------------------------------------------------------------

def _alternating_fit(xs, y, factors0, lam, cfg, kkt_stop=_KKT_STOP, max_cycles=None):
    """Alternating mode-wise Lasso at fixed lambda.

    Returns the factor list (all-zero on collapse). Each mode solve is an
    exact convex minimization that admits the zero vector, so the objective
    after any pass is <= the zero-solution objective. ``max_cycles``
    overrides the configured alternation cap (grid candidates get a lower
    one; only the final refit needs full tightness).
    """
    n = xs.shape[0]
    order = xs.ndim - 1
    factors = [f.copy() for f in factors0]
    l1s = [float(np.sum(np.abs(f))) for f in factors]
    zero = [np.zeros_like(f) for f in factors]
    if any(v == 0.0 for v in l1s):
        return zero

    prev_obj = None
    for _ in range(max_cycles if max_cycles is not None else cfg.inner_max_iters):
        resid = None
        for j in range(order):
            kappa = lam
            for l in range(order):
                if l != j:
                    kappa *= l1s[l]
            z = contract_except_batch(xs, factors, j)
            gram = z.T @ z
            c = z.T @ y
            w = _cd_lasso(gram, c, factors[j], kappa * n / 2.0)
            l1 = float(np.sum(np.abs(w)))
            if l1 == 0.0:
                return zero
            factors[j] = w
            l1s[j] = l1
            if j == order - 1:
                resid = z @ w - y
        penalty = lam
        for v in l1s:
            penalty *= v
        obj = float(resid @ resid) / n + penalty

        # rebalance scale across modes (objective-invariant)
        if order > 1:
            carry = 1.0
            for j in range(1, order):
                nrm = float(np.linalg.norm(factors[j]))
                factors[j] /= nrm
                carry *= nrm
            factors[0] *= carry
            l1s = [float(np.sum(np.abs(f))) for f in factors]

        if prev_obj is not None and abs(prev_obj - obj) <= cfg.convergence_tol * max(1.0, abs(prev_obj)):
            if _kkt_violation_factors(xs, y, factors, lam) <= kkt_stop:
                break
        prev_obj = obj
    return factors


def _kkt_violation_factors(xs, y, factors, lam) -> float:
    n = xs.shape[0]
    order = xs.ndim - 1
    l1s = [float(np.sum(np.abs(f))) for f in factors]
    worst = 0.0
    for j in range(order):
        kappa = lam
        for l in range(order):
            if l != j:
                kappa *= l1s[l]
        z = contract_except_batch(xs, factors, j)
        grad = (2.0 / n) * (z.T @ (z @ factors[j] - y))
        w = factors[j]
        nz = w != 0.0
        if np.any(nz):
            worst = max(worst, float(np.max(np.abs(grad[nz] + kappa * np.sign(w[nz])))))
        if np.any(~nz):
            worst = max(worst, float(np.max(np.maximum(np.abs(grad[~nz]) - kappa, 0.0))))
    return worst


def unit_rank_kkt_violation(xs, residuals, w: UnitRankTensor, lam: float) -> float:
    """Max subgradient violation over all mode subproblems at (w, lambda).

    For each mode j the check is against the effective penalty
    lam * prod_{l != j} ||w^(l)||_1: nonzero coordinates must satisfy
    grad + penalty*sign = 0, zero coordinates |grad| <= penalty.
    """
    xs, y = _check_inputs(xs, residuals)
    return _kkt_violation_factors(xs, y, [f.copy() for f in w.factors], lam)


def _restricted_als(xs, y, factors, max_iter=50, tol=1e-12):
    """Unpenalized alternating least squares on the factors' fixed supports.

    Shrinks nothing and grows nothing: every mode solve is an ordinary
    least squares over that factor's current nonzero coordinates, so the
    support is preserved while the l1 shrinkage bias is removed. Returns
    the input unchanged when a mode collapses.
    """
    n = xs.shape[0]
    order = xs.ndim - 1
    supports = [np.flatnonzero(f) for f in factors]
    if any(s.size == 0 for s in supports):
        return factors
    out = [f.copy() for f in factors]
    prev = None
    for _ in range(max_iter):
        resid = None
        for j in range(order):
            z = contract_except_batch(xs, out, j)[:, supports[j]]
            w, *_ = np.linalg.lstsq(z, y, rcond=None)
            if float(np.max(np.abs(w))) == 0.0:
                return factors
            out[j] = np.zeros_like(out[j])
            out[j][supports[j]] = w
            if j == order - 1:
                resid = z @ w - y
        obj = float(resid @ resid) / n
        if prev is not None and abs(prev - obj) <= tol * max(1.0, abs(prev)):
            break
        prev = obj
    return out


# ---------------------------------------------------------------------------
# one sequential step: penalty path + internal validation
# ---------------------------------------------------------------------------

def fit_unit_rank_fixed_lambda(xs, residuals, lam, cfg: FitConfig = FitConfig(),
                               step: int = 0) -> UnitRankTensor:
    """Fit a single rank-one component at a fixed penalty level."""
    xs, y = _check_inputs(xs, residuals)
    if float(np.max(np.abs(y))) == 0.0:
        return UnitRankTensor.zero(xs.shape[1:])
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & 0xFFFFFFFF, step, 0]))
    factors0 = _rank1_init(xs, y, rng)
    factors = _alternating_fit(xs, y, factors0, lam, cfg)
    return UnitRankTensor(tuple(_canonicalize(factors)))


def _lambda_path(xs, y, factors0, cfg):
    n = xs.shape[0]
    z0 = contract_except_batch(xs, factors0, 0)
    kappa_max = (2.0 / n) * float(np.max(np.abs(z0.T @ y)))
    prod_other = 1.0
    for f in factors0[1:]:
        prod_other *= float(np.sum(np.abs(f)))
    if kappa_max <= 0.0 or prod_other <= 0.0:
        return None
    lam_max = kappa_max / prod_other
    return np.geomspace(lam_max, lam_max * 1e-3, cfg.lambda_grid_size)


def fit_unit_rank(xs, residuals, cfg: FitConfig = FitConfig(), step: int = 0):
    """Fit one sparse rank-one component, selecting its penalty automatically.

    Candidates on a geometric grid below the critical penalty are fit on
    80% of the residuals (warm-started down the path), polished on their
    supports when debiasing is enabled, and scored by RMSE on the held-out
    20%. The chosen penalty is the largest one whose validation RMSE is
    within one standard error of the minimum (zero counts as the sparsest
    candidate, so a step that cannot clearly beat the zero predictor
    returns the all-zero component). The winner is refit on all residuals;
    the returned component solves the penalized problem at the returned
    lambda, debiasing of accepted steps happens in ``fit``.
    """
    xs, y = _check_inputs(xs, residuals)
    shape = xs.shape[1:]
    n = xs.shape[0]
    zero = UnitRankTensor.zero(shape)
    if float(np.max(np.abs(y))) == 0.0:
        return zero, 0.0

    ss = np.random.SeedSequence([cfg.seed & 0xFFFFFFFF, step, 0])
    rng_init, rng_split = [np.random.default_rng(s) for s in ss.spawn(2)]
    factors0 = _rank1_init(xs, y, rng_init)
    lams = _lambda_path(xs, y, factors0, cfg)
    if lams is None:
        return zero, 0.0

    # internal 80/20 split of the residual-fitting problem
    perm = rng_split.permutation(n)
    n_val = max(1, int(round(0.2 * n)))
    if n - n_val < 1:
        tr = va = np.arange(n)
    else:
        va, tr = perm[:n_val], perm[n_val:]
    xs_tr, y_tr = xs[tr], y[tr]
    xs_va, y_va = xs[va], y[va]

    zero_rmse = _rms(y_va)
    cand_rmse = np.full(len(lams), zero_rmse)
    cand_factors = [None] * len(lams)
    best_errors = None
    best_i = None
    warm = factors0
    cand_cycles = min(50, cfg.inner_max_iters)
    for i, lam in enumerate(lams):
        cand = _alternating_fit(xs_tr, y_tr, warm, lam, cfg, kkt_stop=1e-7,
                                max_cycles=cand_cycles)
        if all(float(np.max(np.abs(f))) == 0.0 for f in cand):
            continue
        warm = cand
        cand_factors[i] = [f.copy() for f in cand]
        scored = _restricted_als(xs_tr, y_tr, cand) if cfg.debias else cand
        errors = contract_except_batch(xs_va, scored, 0) @ scored[0] - y_va
        cand_rmse[i] = _rms(errors)
        if best_i is None or cand_rmse[i] <= cand_rmse[best_i]:
            best_i, best_errors = i, errors

    if best_i is None:
        return zero, float(lams[0])
    # one-standard-error band around the best validation RMSE: the step is
    # kept when the best candidate beats the zero predictor by a quarter
    # of that standard error, and the kept penalty is the largest one
    # whose validation RMSE stays inside the band
    rmse_min = cand_rmse[best_i]
    if len(best_errors) > 1 and rmse_min > 0:
        se = float(np.std(best_errors**2, ddof=1)) / (2.0 * rmse_min * np.sqrt(len(best_errors)))
    else:
        se = 0.0
    if zero_rmse <= rmse_min + 0.25 * se:
        return zero, float(lams[0])
    band = rmse_min + se
    star = next(i for i in range(len(lams))
                if cand_rmse[i] <= band and cand_factors[i] is not None)
    # confirmation against split-luck: the kept candidate must beat the
    # zero predictor on both halves of the validation set
    if len(va) >= 4:
        scored = (_restricted_als(xs_tr, y_tr, cand_factors[star])
                  if cfg.debias else cand_factors[star])
        preds = contract_except_batch(xs_va, scored, 0) @ scored[0]
        half = len(va) // 2
        for sl in (slice(0, half), slice(half, None)):
            if _rms(preds[sl] - y_va[sl]) >= _rms(y_va[sl]):
                return zero, float(lams[0])
    factors = _alternating_fit(xs, y, cand_factors[star], float(lams[star]), cfg)
    return UnitRankTensor(tuple(_canonicalize(factors))), float(lams[star])


# ---------------------------------------------------------------------------
# sequential model fit and inference
# ---------------------------------------------------------------------------

def fit(dataset, cfg: FitConfig = FitConfig()) -> RegressionModel:
    """Fit up to cfg.max_rank components sequentially on residuals.

    ``dataset`` is anything with ``.tensors`` (N, I_1..I_M) and ``.y``
    (N,) attributes, or a (tensors, y) pair. Stops early when a step
    returns the zero component or fails to reduce the training RMSE by
    the configured relative tolerance; the recorded RMSE path is
    therefore nonincreasing.
    """
    if hasattr(dataset, "tensors"):
        xs, y = dataset.tensors, dataset.y
    else:
        xs, y = dataset
    xs, y = _check_inputs(xs, y)
    shape = tuple(xs.shape[1:])

    residual = y.copy()
    prev_rmse = _rms(y)
    components: list[tuple[UnitRankTensor, float]] = []
    path: list[float] = []
    for r in range(cfg.max_rank):
        w, lam = fit_unit_rank(xs, residual, cfg, step=r)
        if w.is_zero():
            break
        if cfg.debias:
            polished = _restricted_als(xs, residual, [f.copy() for f in w.factors])
            w = UnitRankTensor(tuple(_canonicalize(polished)))
        preds = inner_product_batch(xs, w)
        new_resid = residual - preds
        new_rmse = _rms(new_resid)
        if prev_rmse - new_rmse <= cfg.convergence_tol * max(prev_rmse, 1e-15):
            break
        components.append((w, lam))
        path.append(new_rmse)
        residual = new_resid
        prev_rmse = new_rmse
    return RegressionModel(components, shape, path)


def predict(model: RegressionModel, x) -> float:
    """<W, x> for the fitted coefficient tensor W = sum of components."""
    x = np.asarray(x, dtype=np.float64)
    if tuple(x.shape) != tuple(model.input_shape):
        raise ValueError(f"shape {x.shape} does not match model {model.input_shape}")
    total = 0.0
    for w, _ in model.components:
        out = x
        for f in reversed(w.factors):
            out = out @ f
        total += float(out)
    return total


def predict_batch(model: RegressionModel, xs) -> np.ndarray:
    """Vectorized predict over a stacked (N, I_1..I_M) array."""
    xs = np.asarray(xs, dtype=np.float64)
    if tuple(xs.shape[1:]) != tuple(model.input_shape):
        raise ValueError(f"shape {xs.shape[1:]} does not match model {model.input_shape}")
    total = np.zeros(xs.shape[0])
    for w, _ in model.components:
        total += inner_product_batch(xs, w)
    return total


def prefix_predictions(model: RegressionModel, xs) -> np.ndarray:
    """(rank, N) cumulative predictions after 1..rank components.

    Sequential fitting is prefix-stable (component r depends only on the
    ones before it), so row r-1 equals the predictions of a model fit with
    max_rank = r. Used for rank sweeps and rank cross-validation.
    """
    xs = np.asarray(xs, dtype=np.float64)
    out = np.zeros((len(model.components), xs.shape[0]))
    acc = np.zeros(xs.shape[0])
    for r, (w, _) in enumerate(model.components):
        acc = acc + inner_product_batch(xs, w)
        out[r] = acc
    return out


def coefficient_tensor(model: RegressionModel) -> np.ndarray:
    """Materialized sum of all components (zero tensor when empty)."""
    if not model.input_shape:
        raise ValueError("model has an empty input shape")
    out = np.zeros(model.input_shape)
    for w, _ in model.components:
        out += materialize(w)
    return out


def model_sparsity(model: RegressionModel, zero_tol: float = 1e-10) -> float:
    """Percentage of coefficient entries with |value| <= zero_tol."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    coef = coefficient_tensor(model)
    return 100.0 * float(np.mean(np.abs(coef) <= zero_tol))


def modality_contribution(model: RegressionModel, modality_mode: int,
                          labels=MODALITIES) -> list[tuple[str, float]]:
    """Per-modality score: mean |modality-factor entry| across components.

    Returned sorted by descending score; ties keep the fixed label order.
    Requires the addressed mode to have length equal to ``len(labels)``.
    """
    if not 0 <= modality_mode < len(model.input_shape):
        raise ValueError(f"modality_mode {modality_mode} out of range")
    if model.input_shape[modality_mode] != len(labels):
        raise ValueError(
            f"mode {modality_mode} has length {model.input_shape[modality_mode]}, "
            f"expected {len(labels)}"
        )
    scores = np.zeros(len(labels))
    if model.components:
        for w, _ in model.components:
            scores += np.abs(w.factors[modality_mode])
        scores /= len(model.components)
    order = sorted(range(len(labels)), key=lambda i: (-scores[i], i))
    return [(labels[i], float(scores[i])) for i in order]


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def model_to_json(model: RegressionModel) -> str:
    """Serialize to a stable JSON document (exact float round-trip)."""
    doc = {
        "input_shape": list(model.input_shape),
        "components": [
            {"factors": [f.tolist() for f in w.factors], "lambda": lam}
            for w, lam in model.components
        ],
        "train_rmse_path": list(model.train_rmse_path),
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def model_from_json(text: str) -> RegressionModel:
    doc = json.loads(text)
    comps = [
        (UnitRankTensor(tuple(np.asarray(f, dtype=np.float64) for f in c["factors"])),
         float(c["lambda"]))
        for c in doc["components"]
    ]
    return RegressionModel(comps, tuple(doc["input_shape"]), list(doc["train_rmse_path"]))
