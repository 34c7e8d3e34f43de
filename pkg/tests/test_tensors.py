"""Rank-one tensor algebra: identities checked against brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roitensor.tensors import (
    UnitRankTensor,
    as_dense,
    contract_except,
    contract_except_batch,
    inner_product,
    inner_product_batch,
    inner_product_dense,
    l1_norm,
    materialize,
)

TOL = dict(rtol=1e-10, atol=1e-12)


def random_unit_rank(rng, shape):
    return UnitRankTensor(tuple(rng.standard_normal(n) for n in shape))


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------

def test_as_dense_rejects_nonfinite():
    with pytest.raises(ValueError):
        as_dense([1.0, np.nan])
    with pytest.raises(ValueError):
        as_dense([[np.inf, 0.0]])


def test_as_dense_rejects_empty_mode():
    with pytest.raises(ValueError):
        as_dense(np.zeros((2, 0)))


def test_unit_rank_rejects_bad_factors():
    with pytest.raises(ValueError):
        UnitRankTensor(())
    with pytest.raises(ValueError):
        UnitRankTensor((np.array([1.0, np.nan]),))


def test_unit_rank_factors_are_frozen():
    w = UnitRankTensor((np.array([1.0, 2.0]), np.array([3.0])))
    with pytest.raises(ValueError):
        w.factors[0][0] = 5.0


# ---------------------------------------------------------------------------
# materialize
# ---------------------------------------------------------------------------

def test_materialize_single_nonzero():
    w = UnitRankTensor((np.array([1.0, 0.0]), np.array([0.0, 1.0])))
    assert materialize(w).tolist() == [[0.0, 1.0], [0.0, 0.0]]


def test_materialize_zero_factor_annihilates():
    w = UnitRankTensor((np.array([0.0, 0.0]), np.array([5.0, 7.0])))
    assert np.all(materialize(w) == 0.0)
    assert w.is_zero()


def test_materialize_elementwise_oracle():
    w = UnitRankTensor((np.array([1.0, -2.0]), np.array([3.0, 1.0])))
    expected = np.array([[1 * 3, 1 * 1], [-2 * 3, -2 * 1]], dtype=float)
    np.testing.assert_array_equal(materialize(w), expected)


# ---------------------------------------------------------------------------
# inner products
# ---------------------------------------------------------------------------

def test_inner_product_zero_component():
    x = np.arange(6.0).reshape(2, 3)
    w = UnitRankTensor((np.zeros(2), np.array([1.0, 2.0, 3.0])))
    assert inner_product(x, w) == 0.0


def test_inner_product_selects_entry():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    w = UnitRankTensor((np.array([1.0, 0.0]), np.array([0.0, 1.0])))
    assert inner_product(x, w) == 2.0


def test_inner_product_matches_materialization():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((4, 3, 2))
    w = random_unit_rank(rng, (4, 3, 2))
    brute = float(np.sum(materialize(w) * x))
    np.testing.assert_allclose(inner_product(x, w), brute, **TOL)


def test_inner_product_shape_mismatch():
    w = UnitRankTensor((np.ones(3), np.ones(2)))
    with pytest.raises(ValueError):
        inner_product(np.zeros((2, 2)), w)


def test_inner_product_dense_plain_sum():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert inner_product_dense(x, np.ones((2, 2))) == 10.0
    assert inner_product_dense(np.zeros((2, 2)), x) == 0.0
    with pytest.raises(ValueError):
        inner_product_dense(x, np.ones(4))


def test_inner_product_linearity_over_components():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((3, 4))
    ws = [random_unit_rank(rng, (3, 4)) for _ in range(3)]
    total = sum(inner_product(x, w) for w in ws)
    w_sum = sum(materialize(w) for w in ws)
    np.testing.assert_allclose(inner_product_dense(x, w_sum), total, **TOL)


# ---------------------------------------------------------------------------
# l1 factorization identity
# ---------------------------------------------------------------------------

def test_l1_zero_factor():
    w = UnitRankTensor((np.zeros(3), np.array([1.0, 2.0])))
    assert l1_norm(w) == 0.0


def test_l1_product_form_example():
    w = UnitRankTensor((np.array([1.0, -2.0]), np.array([3.0])))
    assert l1_norm(w) == pytest.approx(9.0, rel=1e-12)
    assert np.sum(np.abs(materialize(w))) == pytest.approx(9.0, rel=1e-12)


def test_l1_matches_materialization_many():
    rng = np.random.default_rng(7)
    for _ in range(100):
        order = rng.integers(2, 4)
        shape = tuple(int(rng.integers(1, 9)) for _ in range(order))
        w = random_unit_rank(rng, shape)
        np.testing.assert_allclose(
            l1_norm(w), float(np.sum(np.abs(materialize(w)))), **TOL)


# ---------------------------------------------------------------------------
# contract_except
# ---------------------------------------------------------------------------

def test_contract_except_column_selection():
    x = np.eye(2)
    w = UnitRankTensor((np.array([9.0, 9.0]), np.array([1.0, 0.0])))
    np.testing.assert_array_equal(contract_except(x, w, 0), np.array([1.0, 0.0]))


def test_contract_except_zero_other_factor():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 4))
    w = UnitRankTensor((rng.standard_normal(3), np.zeros(4)))
    assert np.all(contract_except(x, w, 0) == 0.0)


def test_contract_except_consistency_all_modes():
    rng = np.random.default_rng(21)
    x = rng.standard_normal((3, 4, 2))
    w = random_unit_rank(rng, (3, 4, 2))
    ref = inner_product(x, w)
    for j in range(3):
        z = contract_except(x, w, j)
        np.testing.assert_allclose(float(w.factors[j] @ z), ref, **TOL)


def test_contract_except_shape_checks():
    w = UnitRankTensor((np.ones(3), np.ones(4)))
    with pytest.raises(ValueError):
        contract_except(np.zeros((3, 5)), w, 0)
    with pytest.raises(ValueError):
        contract_except(np.zeros((3, 4)), w, 2)


def test_batch_helpers_match_scalar_paths():
    rng = np.random.default_rng(5)
    xs = rng.standard_normal((6, 3, 4, 2))
    w = random_unit_rank(rng, (3, 4, 2))
    ips = inner_product_batch(xs, w)
    for i in range(6):
        np.testing.assert_allclose(ips[i], inner_product(xs[i], w), **TOL)
    for j in range(3):
        zs = contract_except_batch(xs, list(w.factors), j)
        for i in range(6):
            np.testing.assert_allclose(zs[i], contract_except(xs[i], w, j), **TOL)


# ---------------------------------------------------------------------------
# algebraic properties
# ---------------------------------------------------------------------------

@st.composite
def _rank_one(draw):
    order = draw(st.integers(min_value=2, max_value=3))
    shape = tuple(draw(st.integers(min_value=1, max_value=6)) for _ in range(order))
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    rng = np.random.default_rng(seed)
    return UnitRankTensor(tuple(rng.standard_normal(n) for n in shape))


@settings(max_examples=60, deadline=None)
@given(_rank_one())
def test_property_l1_identity(w):
    np.testing.assert_allclose(
        l1_norm(w), float(np.sum(np.abs(materialize(w)))), **TOL)


@settings(max_examples=60, deadline=None)
@given(_rank_one(), st.floats(min_value=0.1, max_value=10.0))
def test_property_factor_rescaling_invariance(w, c):
    if w.order < 2:
        return
    scaled = UnitRankTensor((w.factors[0] * c, w.factors[1] / c) + w.factors[2:])
    np.testing.assert_allclose(materialize(scaled), materialize(w), **TOL)


@settings(max_examples=40, deadline=None)
@given(_rank_one(), st.integers(min_value=0, max_value=10**6))
def test_property_inner_product_agreement(w, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(w.shape)
    np.testing.assert_allclose(
        inner_product(x, w), inner_product_dense(x, materialize(w)), **TOL)
