"""Dense and rank-one tensor algebra.

Tensors are plain numpy arrays in C (row-major, last index fastest) order;
``as_dense`` is the validating entry point. A rank-one tensor is kept in
factored form (one vector per mode) and is never materialized inside the
hot paths: inner products and the mode-wise partial contractions the
regression solver needs are computed by successive mode contractions.

Key identity used throughout: the elementwise l1 norm of an outer product
w^(1) x ... x w^(M) equals the product of the factor l1 norms, so an l1
penalty on a rank-one tensor separates over its factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DenseTensor",
    "UnitRankTensor",
    "as_dense",
    "materialize",
    "inner_product",
    "inner_product_dense",
    "l1_norm",
    "contract_except",
]

# A dense tensor is just an ndarray; the alias marks intent in signatures.
DenseTensor = np.ndarray


def as_dense(values) -> np.ndarray:
    """Validate and return a dense tensor as a float64, C-ordered array.

    Rejects empty shapes, zero-length modes and non-finite entries.
    """
    x = np.asarray(values, dtype=np.float64, order="C")
    if x.ndim < 1:
        x = x.reshape(1)
    if any(n < 1 for n in x.shape):
        raise ValueError(f"every mode must have size >= 1, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("tensor values must be finite (no NaN/Inf)")
    return x


@dataclass(frozen=True)
class UnitRankTensor:
    """A CP rank <= 1 tensor stored as one factor vector per mode.

    The all-zero tensor is representable (any factor identically zero).
    Factors are copied and frozen at construction; instances are safe to
    share across workers.
    """

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.factors) < 1:
            raise ValueError("need at least one factor")
        locked = []
        for j, f in enumerate(self.factors):
            f = np.asarray(f, dtype=np.float64).ravel()
            if f.size < 1:
                raise ValueError(f"factor {j} is empty")
            if not np.all(np.isfinite(f)):
                raise ValueError(f"factor {j} has non-finite entries")
            f = f.copy()
            f.flags.writeable = False
            locked.append(f)
        object.__setattr__(self, "factors", tuple(locked))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    @property
    def order(self) -> int:
        return len(self.factors)

    def is_zero(self, tol: float = 0.0) -> bool:
        """True when some factor vanishes, i.e. the tensor is identically 0."""
        return any(np.max(np.abs(f)) <= tol for f in self.factors)

    @classmethod
    def zero(cls, shape) -> "UnitRankTensor":
        return cls(tuple(np.zeros(n) for n in shape))


def materialize(w: UnitRankTensor) -> np.ndarray:
    """Expand the factored form into a dense array via outer products."""
    out = w.factors[0]
    for f in w.factors[1:]:
        out = np.multiply.outer(out, f)
    return np.ascontiguousarray(out)


def _check_shape(x: np.ndarray, shape: tuple[int, ...], what: str) -> None:
    if tuple(x.shape) != tuple(shape):
        raise ValueError(f"{what}: shape {tuple(x.shape)} does not match {tuple(shape)}")


def inner_product(x: DenseTensor, w: UnitRankTensor) -> float:
    """<materialize(w), x> computed by successive mode contractions.

    Never forms the dense outer product: contracts x against one factor
    at a time, O(prod I_j) total work and O(prod of remaining dims) memory.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_shape(x, w.shape, "inner_product")
    out = x
    for f in reversed(w.factors):
        out = out @ f  # contracts the current last mode
    return float(out)


def inner_product_dense(x: DenseTensor, w_sum: DenseTensor) -> float:
    """Plain elementwise inner product of two same-shape dense tensors."""
    x = np.asarray(x, dtype=np.float64)
    w_sum = np.asarray(w_sum, dtype=np.float64)
    _check_shape(x, w_sum.shape, "inner_product_dense")
    return float(np.dot(x.ravel(), w_sum.ravel()))


def l1_norm(w: UnitRankTensor) -> float:
    """l1 norm of the materialized tensor, via the product-of-factors form."""
    out = 1.0
    for f in w.factors:
        out *= float(np.sum(np.abs(f)))
    return out


def contract_except(x: DenseTensor, w: UnitRankTensor, mode: int) -> np.ndarray:
    """Contract x against all factors of w except ``mode``.

    Returns z of length I_mode with z[i] = <slice of x at index i of
    ``mode``, outer product of the other factors>, so that
    dot(w.factors[mode], z) == inner_product(x, w).
    """
    x = np.asarray(x, dtype=np.float64)
    if not 0 <= mode < w.order:
        raise ValueError(f"mode {mode} out of range for order {w.order}")
    if x.ndim != w.order:
        raise ValueError(f"contract_except: x has order {x.ndim}, factors imply {w.order}")
    for j in range(w.order):
        if j != mode and x.shape[j] != w.shape[j]:
            raise ValueError(
                f"contract_except: x mode {j} has size {x.shape[j]}, factor has {w.shape[j]}"
            )
    out = np.moveaxis(x, mode, 0)
    for f in reversed([f for j, f in enumerate(w.factors) if j != mode]):
        out = out @ f
    return out


def contract_except_batch(xs: np.ndarray, factors, mode: int) -> np.ndarray:
    """Vectorized contract_except over a stacked (N, I_1..I_M) array.

    Returns an (N, I_mode) matrix. ``factors`` is the full factor list;
    the one at ``mode`` is ignored.
    """
    out = np.moveaxis(xs, mode + 1, 1)
    rest = [f for j, f in enumerate(factors) if j != mode]
    for f in reversed(rest):
        out = out @ f
    return out


def inner_product_batch(xs: np.ndarray, w: UnitRankTensor) -> np.ndarray:
    """<materialize(w), x_i> for every subject in a stacked (N, ...) array."""
    out = xs
    for f in reversed(w.factors):
        out = out @ f
    return out
