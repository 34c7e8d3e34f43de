"""Gaussian kNN graph construction for the three tensor representations."""

import numpy as np
import pytest

from roitensor.graphs import (
    MODALITIES,
    N_ROI,
    GraphConfig,
    as_subject_features,
    build_concat,
    build_connectivity,
    build_connectivity_stack,
    build_representation,
    gaussian_similarity,
    knn_gaussian_graph,
)


def random_features(rng, scale=0.5):
    return rng.standard_normal((N_ROI, len(MODALITIES))) * scale


# ---------------------------------------------------------------------------
# configuration and validation
# ---------------------------------------------------------------------------

def test_graph_config_bounds():
    with pytest.raises(ValueError):
        GraphConfig(k=0)
    with pytest.raises(ValueError):
        GraphConfig(k=117)
    with pytest.raises(ValueError):
        GraphConfig(sigma=0.0)


def test_subject_features_shape_enforced():
    with pytest.raises(ValueError):
        as_subject_features(np.zeros((10, 3)))
    with pytest.raises(ValueError):
        as_subject_features(np.full((N_ROI, 3), np.nan))


# ---------------------------------------------------------------------------
# gaussian similarity
# ---------------------------------------------------------------------------

def test_similarity_identical_vectors():
    assert gaussian_similarity([1.0, 2.0], [1.0, 2.0]) == 1.0


def test_similarity_unit_distance():
    # direct evaluation: exp(-1) at sigma = 1
    assert gaussian_similarity([0.0], [1.0], 1.0) == pytest.approx(
        0.36787944117144233, rel=1e-12)


def test_similarity_monotone_in_sigma():
    a, b = np.array([0.0, 0.0]), np.array([2.0, 1.0])
    values = [gaussian_similarity(a, b, s) for s in (0.5, 1.0, 2.0, 5.0, 500.0)]
    assert all(u < v for u, v in zip(values, values[1:]))
    assert values[-1] > 0.999


def test_similarity_rejects_mismatch():
    with pytest.raises(ValueError):
        gaussian_similarity([1.0], [1.0, 2.0])


# ---------------------------------------------------------------------------
# size-generic kNN graph
# ---------------------------------------------------------------------------

def test_knn_three_points_on_a_line():
    # hand enumeration at positions 0, 1, 10 with k = 1: nearest non-self
    # neighbors are 0->1, 1->0, 2->1; union symmetrization keeps (0,1), (1,2)
    g = knn_gaussian_graph(np.array([0.0, 1.0, 10.0]), k=1)
    s01 = np.exp(-1.0)
    s12 = np.exp(-81.0)
    expected = np.array([
        [1.0, s01, 0.0],
        [s01, 1.0, s12],
        [0.0, s12, 1.0],
    ])
    np.testing.assert_allclose(g, expected, rtol=1e-12)


def test_knn_full_when_k_exceeds_n():
    pts = np.array([[0.0], [0.5], [2.0]])
    g = knn_gaussian_graph(pts, k=5)
    d2 = (pts - pts.T) ** 2
    full = np.exp(-d2)
    np.fill_diagonal(full, 1.0)
    np.testing.assert_allclose(g, full, rtol=1e-12)


def test_knn_tie_break_prefers_lower_index():
    # node 0 equidistant from 1 and 2: the kept neighbor must be index 1
    pts = np.array([0.0, 1.0, -1.0, 30.0])
    g = knn_gaussian_graph(pts, k=1)
    assert g[0, 1] > 0.0
    # union symmetrization may still add (2,0) because node 2's nearest is 0
    assert g[2, 0] > 0.0


def test_knn_edge_sets_grow_with_k():
    rng = np.random.default_rng(4)
    pts = rng.standard_normal((12, 2))
    prev = None
    for k in range(1, 12):
        g = knn_gaussian_graph(pts, k=k) > 0.0
        if prev is not None:
            assert np.all(g[prev])  # every earlier edge survives
        prev = g


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------

def test_concat_identity_mapping():
    rng = np.random.default_rng(0)
    f = random_features(rng)
    t = build_concat(f)
    assert t.shape == (N_ROI, 3)
    np.testing.assert_array_equal(t, f)
    assert np.all(build_concat(np.zeros((N_ROI, 3))) == 0.0)


def test_connectivity_contract():
    rng = np.random.default_rng(1)
    f = random_features(rng)
    for k in (1, 5, N_ROI):
        g = build_connectivity(f, GraphConfig(k=k))
        assert g.shape == (N_ROI, N_ROI)
        np.testing.assert_array_equal(g, g.T)
        assert np.all(np.diag(g) == 1.0)
        assert g.min() >= 0.0 and g.max() <= 1.0
        if k < N_ROI:
            off = g - np.diag(np.diag(g))
            assert np.all((off > 0).sum(axis=1) >= k)


def test_connectivity_k116_equals_full_kernel():
    rng = np.random.default_rng(2)
    f = random_features(rng)
    g = build_connectivity(f, GraphConfig(k=N_ROI))
    d2 = np.sum((f[:, None, :] - f[None, :, :]) ** 2, axis=-1)
    full = np.exp(-d2)
    np.fill_diagonal(full, 1.0)
    np.testing.assert_allclose(g, full, rtol=1e-12)
    assert np.all(g > 0.0)


def test_connectivity_identical_rows_all_ones():
    f = np.tile(np.array([0.3, -0.1, 0.8]), (N_ROI, 1))
    g = build_connectivity(f, GraphConfig(k=N_ROI))
    np.testing.assert_array_equal(g, np.ones((N_ROI, N_ROI)))


def test_connectivity_permutation_equivariance():
    rng = np.random.default_rng(3)
    f = random_features(rng)
    i, j = 10, 57
    fp = f.copy()
    fp[[i, j]] = fp[[j, i]]
    g = build_connectivity(f, GraphConfig(k=7))
    gp = build_connectivity(fp, GraphConfig(k=7))
    perm = np.arange(N_ROI)
    perm[[i, j]] = perm[[j, i]]
    np.testing.assert_allclose(gp, g[np.ix_(perm, perm)], rtol=1e-12)


def test_stack_slices_match_per_column_graphs():
    rng = np.random.default_rng(4)
    f = random_features(rng)
    cfg = GraphConfig(k=9)
    t = build_connectivity_stack(f, cfg)
    assert t.shape == (N_ROI, N_ROI, 3)
    for m in range(3):
        np.testing.assert_allclose(
            t[:, :, m], knn_gaussian_graph(f[:, m], cfg.k, cfg.sigma), rtol=1e-12)


def test_stack_all_zero_features_fully_connected():
    t = build_connectivity_stack(np.zeros((N_ROI, 3)), GraphConfig(k=N_ROI))
    assert np.all(t == 1.0)


def test_build_representation_dispatch():
    rng = np.random.default_rng(5)
    f = random_features(rng)
    assert build_representation(f, "concat").shape == (N_ROI, 3)
    assert build_representation(f, "connectivity").shape == (N_ROI, N_ROI)
    assert build_representation(f, "stack").shape == (N_ROI, N_ROI, 3)
    with pytest.raises(ValueError):
        build_representation(f, "nope")


def test_zscore_flag_changes_distances():
    rng = np.random.default_rng(6)
    f = random_features(rng)
    f[:, 0] *= 50.0  # dominant column without standardization
    g_raw = build_connectivity(f, GraphConfig(k=N_ROI, zscore=False))
    g_std = build_connectivity(f, GraphConfig(k=N_ROI, zscore=True))
    assert not np.allclose(g_raw, g_std)
