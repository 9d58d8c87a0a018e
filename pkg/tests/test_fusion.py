import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gipan.errors import DegenerateError, ShapeMismatchError
from gipan.fusion import (Method, cs_identities, fuse_gsa, fuse_mtf_glp_cbd, fuse_pcs,
                          fuse_pmra, mra_identities, residual_identities, total_error_check)
from gipan.metrics import spatial_rmse, spectral_rmse
from gipan.prior import gsa_weights, solve_prior_inverse
from gipan.response import estimate_A_dse
from gipan.sampling import BilinearUp, BlockMeanDown, ReplicateUp, dse_wrap

from conftest import desk_instance, random_explicit


def solvable_instance(rng, h=3, w=2, r=2, S=4):
    """X drawn, then Y = X A and Z = B X with block-mean B."""
    H, W = h * r, w * r
    X = rng.uniform(0, 100, size=(H * W, S))
    A = rng.uniform(0.05, 0.5, size=(S, 1))
    B = BlockMeanDown((H, W), r)
    V = ReplicateUp((h, w), r)
    return X, X @ A, B.apply(X), A, B, V


def test_method_forms():
    assert Method("cbd") is Method.MTF_GLP_CBD
    assert [m.form for m in Method] == ["cs", "mra", "cs", "mra"]


def test_pcs_tiny_dense_oracle():
    Y = np.array([[1.0], [2.0], [4.0], [8.0]])
    Z = np.array([[3.0, 5.0]])
    A = np.array([[0.25], [0.5]])
    G = np.array([[1.2, 1.4]])
    V = ReplicateUp((1, 1), 2)
    Vm = V.materialize()
    oracle = Vm @ Z + (Y - Vm @ Z @ A) @ G
    np.testing.assert_allclose(fuse_pcs(Y, Z, V, A, G).matrix, oracle, atol=1e-12)


def test_pcs_dense_oracle_with_bilinear(rng):
    Y, Z, _, _ = desk_instance(rng)
    V = BilinearUp((3, 2), 2)
    A = rng.uniform(size=(4, 1))
    G = rng.uniform(size=(1, 4))
    Vm = V.materialize()
    oracle = Vm @ Z + (Y - Vm @ Z @ A) @ G
    np.testing.assert_allclose(fuse_pcs(Y, Z, V, A, G).matrix, oracle, atol=1e-10)


def test_pmra_dense_oracle(rng):
    Y, Z, _, _ = desk_instance(rng)
    B = random_explicit(rng, (6, 4), (3, 2))
    V = random_explicit(rng, (3, 2), (6, 4))
    G = rng.uniform(size=(1, 4))
    Bm, Vm = B.materialize(), V.materialize()
    oracle = Vm @ Z + (np.eye(24) - Vm @ Bm) @ Y @ G
    np.testing.assert_allclose(fuse_pmra(Y, Z, B, V, G).matrix, oracle, atol=1e-9)


def test_gsa_and_cbd_dense_oracles(rng):
    Y, Z, B, V = desk_instance(rng)
    A = rng.uniform(size=(4, 1))
    Bm, Vm = B.materialize(), V.materialize()

    def weights(p, Q):
        pc, Qc = p - p.mean(), Q - Q.mean(axis=0)
        return (pc.T @ Qc / len(p)) / (pc.T @ pc / len(p))

    W = weights(Z @ A, Z)
    np.testing.assert_allclose(fuse_gsa(Y, Z, V, A).matrix,
                               Vm @ Z + (Y - Vm @ Z @ A) @ W, atol=1e-10)
    g = weights(Bm @ Y, Z)
    np.testing.assert_allclose(fuse_mtf_glp_cbd(Y, Z, B, V).matrix,
                               Vm @ Z + (Y - Vm @ Bm @ Y) @ g, atol=1e-10)


def test_pan_equal_to_synthetic_intensity_gives_upsampled_ms(rng):
    _, Z, _, V = desk_instance(rng)
    A = rng.uniform(size=(4, 1))
    Y = V.apply(Z @ A)
    G = rng.uniform(size=(1, 4))
    np.testing.assert_allclose(fuse_pcs(Y, Z, V, A, G).matrix, V.apply(Z), atol=1e-12)
    np.testing.assert_allclose(fuse_gsa(Y, Z, V, A).matrix, V.apply(Z), atol=1e-12)


def test_block_constant_pan_has_no_mra_detail(rng):
    _, Z, B, V = desk_instance(rng)
    Y = V.apply(rng.uniform(0, 10, size=(6, 1)))
    G = np.ones((1, 4))
    np.testing.assert_allclose(fuse_pmra(Y, Z, B, V, G).matrix, V.apply(Z), atol=1e-12)
    np.testing.assert_allclose(fuse_mtf_glp_cbd(Y, Z, B, V).matrix, V.apply(Z), atol=1e-12)


def test_cbd_proportional_gains(rng):
    Y, _, B, V = desk_instance(rng)
    c = np.array([[0.5, 2.0, -1.0]])
    Z = B.apply(Y) @ c
    res = fuse_mtf_glp_cbd(Y, Z, B, V)
    np.testing.assert_allclose(res.W_used, c, atol=1e-10)
    detail = Y - V.apply(B.apply(Y))
    np.testing.assert_allclose(res.matrix - V.apply(Z), detail @ c, atol=1e-10)


def test_cbd_degenerate_pan(rng):
    _, Z, B, V = desk_instance(rng)
    with pytest.raises(DegenerateError):
        fuse_mtf_glp_cbd(np.full((24, 1), 3.0), Z, B, V)


def test_result_shapes_and_provenance(rng):
    Y, Z, B, V = desk_instance(rng)
    A = np.full((4, 1), 0.25)
    res = fuse_pcs(Y, Z, V, A, np.ones((1, 4)), dse=True)
    assert res.X.shape == (6, 4) and res.X.bands == 4
    assert res.method is Method.PCS and res.dse
    assert res.warnings == () and res.predicted_spatial_residual is None


def test_warning_when_not_a_generalized_inverse(rng):
    Y, Z, B, V = desk_instance(rng)
    A = np.full((4, 1), 0.25)
    G = np.full((1, 4), 2.0)
    res = fuse_pcs(Y, Z, V, A, G)
    assert res.warnings
    # predicted residual matches the measured spatial RMSE
    assert res.predicted_spatial_residual == pytest.approx(spatial_rmse(res.matrix, A, Y), rel=1e-10)
    res = fuse_pmra(Y, Z, B, V, G, A)
    assert res.predicted_spatial_residual == pytest.approx(spatial_rmse(res.matrix, A, Y), rel=1e-10)


def test_shape_errors(rng):
    Y, Z, B, V = desk_instance(rng)
    with pytest.raises(ShapeMismatchError):
        fuse_pcs(Y, Z, V, np.ones((3, 1)), np.ones((1, 4)))
    with pytest.raises(ShapeMismatchError):
        fuse_pcs(Y, Z, V, np.ones((4, 1)), np.ones((1, 3)))
    with pytest.raises(ShapeMismatchError):
        fuse_pmra(Y[:20], Z, B, V, np.ones((1, 4)))


@settings(max_examples=30, deadline=None)
@given(h=st.integers(1, 4), w=st.integers(1, 4), S=st.integers(2, 6), seed=st.integers(0, 2**31))
def test_pcs_equals_pmra_under_dse(h, w, S, seed):
    rng = np.random.default_rng(seed)
    Y, Z, bhat, V = desk_instance(rng, h=h, w=w, S=S)
    B = dse_wrap(bhat, Z)
    A = estimate_A_dse(Y, Z, bhat, z_pinv=B.z_pinv).A
    G = solve_prior_inverse(A).m
    X_cs = fuse_pcs(Y, Z, V, A, G, dse=True).matrix
    X_mra = fuse_pmra(Y, Z, B, V, G, A, dse=True).matrix
    np.testing.assert_allclose(X_cs, X_mra, rtol=0, atol=1e-10)


def test_cs_equals_mra_on_consistent_pair_without_dse(rng):
    _, Y, Z, A, B, V = solvable_instance(rng)
    G = rng.uniform(size=(1, 4))
    np.testing.assert_allclose(fuse_pcs(Y, Z, V, A, G).matrix,
                               fuse_pmra(Y, Z, B, V, G).matrix, rtol=0, atol=1e-10)


def test_gsa_reconstructs_pan_and_ms(rng):
    _, Y, Z, A, B, V = solvable_instance(rng)
    X = fuse_gsa(Y, Z, V, A).matrix
    np.testing.assert_allclose(X @ A, Y, atol=1e-8)
    np.testing.assert_allclose(B.apply(X), Z, atol=1e-8)


def _random_setup(rng, kind):
    Y, Z, B, V = desk_instance(rng)
    if kind == "explicit":
        B = random_explicit(rng, (6, 4), (3, 2))
        V = random_explicit(rng, (3, 2), (6, 4))
    elif kind == "bilinear":
        V = BilinearUp((3, 2), 2)
    A = rng.standard_normal((4, 1))
    W = rng.standard_normal((1, 4))
    return Y, Z, A, B, V, W


@pytest.mark.parametrize("kind", ["replicate", "bilinear", "explicit"])
def test_identities_with_arbitrary_weights(rng, kind):
    for _ in range(10):
        Y, Z, A, B, V, W = _random_setup(rng, kind)
        X_cs = V.apply(Z) + (Y - V.apply(Z @ A)) @ W
        X_mra = V.apply(Z) + (Y - V.apply(B.apply(Y))) @ W
        for chk in cs_identities(X_cs, Y, Z, A, B, V, W) + mra_identities(X_mra, Y, Z, A, B, V, W):
            assert chk.max_deviation <= 1e-8, chk.name


def test_identities_dense_right_sides(rng):
    Y, Z, A, B, V, W = _random_setup(rng, "explicit")
    Bm, Vm = B.materialize(), V.materialize()
    I = np.eye(24)
    X_mra = Vm @ Z + (I - Vm @ Bm) @ Y @ W
    spatial, spectral = mra_identities(X_mra, Y, Z, A, B, V, W)
    np.testing.assert_allclose(
        spatial.rhs, Vm @ (Z @ A - Bm @ Y) - (I - Vm @ Bm) @ Y @ (1 - W @ A), atol=1e-9)
    np.testing.assert_allclose(
        spectral.rhs, (Bm @ Vm - np.eye(6)) @ Z + (Bm - Bm @ Vm @ Bm) @ Y @ W, atol=1e-9)


def test_cs_spatial_identity_vanishes_for_exact_inverse(rng):
    _, Z, B, V = desk_instance(rng)
    A = np.full((4, 1), 0.25)
    W = np.ones((1, 4))
    Y = V.apply(Z @ A)
    X = V.apply(Z) + (Y - V.apply(Z @ A)) @ W
    spatial = cs_identities(X, Y, Z, A, B, V, W)[0]
    assert np.abs(spatial.lhs).max() <= 1e-12 and np.abs(spatial.rhs).max() <= 1e-12


def test_residual_identities_pick_form(rng):
    Y, Z, B, V = desk_instance(rng)
    A = rng.uniform(size=(4, 1))
    names = [c.name for c in residual_identities(fuse_gsa(Y, Z, V, A), Y, Z, A, B, V)]
    assert names == ["spatial_cs", "spectral_cs"]
    res = fuse_mtf_glp_cbd(Y, Z, B, V, A)
    checks = residual_identities(res, Y, Z, A, B, V)
    assert [c.name for c in checks] == ["spatial_mra", "spectral_mra"]
    assert max(c.max_deviation for c in checks) <= 1e-8


def test_replicate_mra_has_zero_spectral_error_when_consistent(rng):
    _, Y, Z, A, B, V = solvable_instance(rng)
    G = rng.uniform(size=(1, 4))
    assert spectral_rmse(B, fuse_pmra(Y, Z, B, V, G).matrix, Z) <= 1e-10


@pytest.mark.parametrize("kind", ["replicate", "bilinear", "explicit"])
def test_total_error(rng, kind):
    for _ in range(5):
        X, Y, Z, A, B, V = solvable_instance(rng)
        if kind == "bilinear":
            V = BilinearUp((3, 2), 2)
        elif kind == "explicit":
            B = random_explicit(rng, (6, 4), (3, 2))
            V = random_explicit(rng, (3, 2), (6, 4))
            Z = B.apply(X)
        G = rng.uniform(0.9, 1.4, size=(1, 4))
        assert total_error_check(X, Y, Z, B, V, A, G) <= 1e-8


def test_total_error_block_constant_truth(rng):
    V = ReplicateUp((3, 2), 2)
    B = BlockMeanDown((6, 4), 2)
    X = V.apply(rng.uniform(0, 10, size=(6, 4)))
    A = rng.uniform(size=(4, 1))
    G = solve_prior_inverse(A).m
    X_mra = fuse_pmra(X @ A, B.apply(X), B, V, G).matrix
    np.testing.assert_allclose(X_mra, X, atol=1e-10)
    assert total_error_check(X, X @ A, B.apply(X), B, V, A, G) <= 1e-10


def test_total_error_spectral_annihilation(rng):
    B = BlockMeanDown((6, 4), 2)
    V = ReplicateUp((3, 2), 2)
    A = np.array([[0.5], [0.5]])
    G = np.array([[1.0, 1.0]])
    X = rng.uniform(0, 10, size=(24, 1)) @ np.array([[1.0, 1.0]])
    # every row of X is a multiple of (1, 1), so X (I - A G) = 0
    np.testing.assert_allclose(X @ (np.eye(2) - A @ G), 0, atol=1e-12)
    X_mra = fuse_pmra(X @ A, B.apply(X), B, V, G, A).matrix
    np.testing.assert_allclose(X_mra, X, atol=1e-10)


def test_gsa_weights_recorded(rng):
    Y, Z, B, V = desk_instance(rng)
    A = rng.uniform(size=(4, 1))
    res = fuse_gsa(Y, Z, V, A)
    np.testing.assert_array_equal(res.W_used, gsa_weights(Z, A))
