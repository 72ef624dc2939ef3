import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_kappa, brute_ric, rand_basis, svd_norm
from reprocs.linalg import (
    BasisMatrix,
    denseness_coeff,
    orthonormalize,
    ric_projector,
    spectral_norm,
    subspace_error,
    top_r_evd,
)

seeds = st.integers(0, 2**32 - 1)


# BasisMatrix ---------------------------------------------------------------

def test_basis_rejects_non_orthonormal():
    with pytest.raises(ValueError, match="orthonormal"):
        BasisMatrix(np.ones((3, 2)))


def test_basis_empty_and_width_check():
    e = BasisMatrix.empty(5)
    assert e.shape == (5, 0)
    with pytest.raises(ValueError):
        BasisMatrix(np.eye(3)[:, :2].T)  # 2 x 3 is wider than tall


# orthonormalize --------------------------------------------------------------

def test_orthonormalize_idempotent_on_orthonormal():
    rng = np.random.default_rng(0)
    M = rand_basis(rng, 5, 2)
    Q = orthonormalize(M).data
    assert svd_norm(Q @ Q.T - M @ M.T) <= 1e-10


def test_orthonormalize_collinear_drops_column():
    v = np.array([1.0, 2.0, -1.0, 0.5])
    assert orthonormalize(np.column_stack([v, 2 * v])).r == 1


def test_orthonormalize_zero_gives_empty():
    assert orthonormalize(np.zeros((4, 3))).r == 0


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_orthonormalize_random_against_svd(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((8, 3))
    Q = orthonormalize(M).data
    assert np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))) <= 1e-10
    assert svd_norm(M - Q @ (Q.T @ M)) <= 1e-8 * svd_norm(M)
    assert Q.shape[1] == np.linalg.matrix_rank(M)


# top_r_evd -------------------------------------------------------------------

def test_top_r_evd_diag():
    e = top_r_evd(np.diag([3.0, 2.0, 1.0]), 2)
    np.testing.assert_allclose(e.values, [3.0, 2.0])
    assert subspace_error(e.vectors, np.eye(3)[:, :2]) <= 1e-12


def test_top_r_evd_zero_rank():
    e = top_r_evd(np.eye(4), 0)
    assert e.vectors.r == 0 and e.values.size == 0


def test_top_r_evd_not_hermitian():
    A = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError, match="not Hermitian"):
        top_r_evd(A, 1)


def test_top_r_evd_sign_convention_and_determinism():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((6, 6))
    A = X + X.T
    e1 = top_r_evd(A, 3)
    e2 = top_r_evd(A.copy(), 3)
    assert np.array_equal(e1.vectors.data, e2.vectors.data)
    for col in e1.vectors.data.T:
        first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        assert first > 0


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_top_r_evd_constructed(seed):
    rng = np.random.default_rng(seed)
    P = rand_basis(rng, 10, 3)
    A = P @ np.diag([5.0, 4.0, 3.0]) @ P.T
    e = top_r_evd(A, 3)
    np.testing.assert_allclose(e.values, [5.0, 4.0, 3.0], atol=1e-10)
    assert subspace_error(e.vectors, P) <= 1e-8
    resid = A @ e.vectors.data - e.vectors.data * e.values
    assert np.max(np.linalg.norm(resid, axis=0)) <= 1e-8 * max(1.0, abs(e.values[0]))


# subspace_error --------------------------------------------------------------

def test_subspace_error_trivial_cases():
    P = np.eye(4)[:, :2]
    assert subspace_error(P, P) == pytest.approx(0.0, abs=1e-15)
    assert subspace_error(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])) == pytest.approx(1.0)
    assert subspace_error(np.zeros((4, 0)), P) == pytest.approx(1.0)
    assert subspace_error(np.zeros((4, 0)), np.zeros((4, 0))) == 0.0
    with pytest.raises(ValueError):
        subspace_error(np.eye(3)[:, :1], np.eye(4)[:, :1])


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_subspace_error_equivalent_forms(seed):
    rng = np.random.default_rng(seed)
    Ph, P = rand_basis(rng, 6, 2), rand_basis(rng, 6, 2)
    I = np.eye(6)
    se = subspace_error(Ph, P)
    assert se == pytest.approx(svd_norm((I - Ph @ Ph.T) @ P @ P.T), abs=1e-10)
    assert se == pytest.approx(svd_norm((I - P @ P.T) @ Ph @ Ph.T), abs=1e-10)


# spectral_norm ---------------------------------------------------------------

def test_spectral_norm_examples():
    assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0, rel=1e-12)
    u, v = np.array([1.0, 2.0, 2.0]), np.array([3.0, 4.0])
    assert spectral_norm(np.outer(u, v)) == pytest.approx(15.0, rel=1e-12)


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_spectral_norm_matches_svd(seed):
    M = np.random.default_rng(seed).standard_normal((12, 7))
    assert spectral_norm(M) == pytest.approx(svd_norm(M), rel=1e-9)


# denseness / RIC -------------------------------------------------------------

def test_denseness_sparse_vector():
    assert denseness_coeff(np.eye(10)[:, [3]], 1).kappa == pytest.approx(1.0)


def test_denseness_flat_vector():
    B = np.ones((4, 1)) / 2
    assert denseness_coeff(B, 2).kappa == pytest.approx(math.sqrt(0.5), abs=1e-12)


def test_denseness_against_subset_oracle():
    rng = np.random.default_rng(11)
    P = rand_basis(rng, 8, 2)
    rep = denseness_coeff(P, 2)
    assert rep.subsets_evaluated == 28
    assert rep.kappa == pytest.approx(brute_kappa(P, 2), abs=1e-12)


def test_denseness_loose_mode_and_cap():
    rng = np.random.default_rng(2)
    P = rand_basis(rng, 30, 3)
    kappa1 = np.max(np.linalg.norm(P, axis=1))
    assert denseness_coeff(P, 4, "loose").kappa == pytest.approx(4 * kappa1)
    with pytest.raises(ValueError, match="loose"):
        denseness_coeff(P, 10, "exact", cap=1000)
    with pytest.raises(ValueError):
        denseness_coeff(np.zeros((5, 2)), 2)


def test_ric_projector_examples():
    assert ric_projector(np.eye(4)[:, [0]], 1) == pytest.approx(1.0)
    assert ric_projector(np.ones((4, 1)) / 2, 2) == pytest.approx(0.5)


@given(seeds, st.integers(4, 8), st.integers(1, 2), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_ric_identity_random(seed, n, r, s):
    rng = np.random.default_rng(seed)
    P = rand_basis(rng, n, r)
    Phi = np.eye(n) - P @ P.T
    assert ric_projector(P, s) == pytest.approx(brute_ric(Phi, s), abs=1e-10)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_denseness_monotone_in_s(seed):
    P = rand_basis(np.random.default_rng(seed), 7, 2)
    ks = [denseness_coeff(P, s).kappa for s in range(1, 8)]
    assert all(a <= b + 1e-12 for a, b in zip(ks, ks[1:]))


# perturbation facts as properties ---------------------------------------------

@given(seeds, st.integers(3, 10), st.floats(1e-3, 1.0))
@settings(max_examples=60, deadline=None)
def test_principal_angle_facts(seed, n, eps):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, n // 2 + 1))
    P = rand_basis(rng, n, r)
    Ph = orthonormalize(P + eps * rng.standard_normal((n, r))).data
    if Ph.shape[1] != r:
        return
    I = np.eye(n)
    z = svd_norm((I - Ph @ Ph.T) @ P)
    assert svd_norm((I - P @ P.T) @ Ph) == pytest.approx(z, abs=1e-8)
    assert svd_norm(P @ P.T - Ph @ Ph.T) <= 2 * z + 1e-10
    Q = orthonormalize((I - P @ P.T) @ rng.standard_normal((n, n - r))).data
    if Q.shape[1]:
        assert svd_norm(Ph.T @ Q) <= z + 1e-10
        sv = np.linalg.svd((I - Ph @ Ph.T) @ Q, compute_uv=False)
        assert sv.min() >= math.sqrt(max(1 - z * z, 0.0)) - 1e-8
        assert sv.max() <= 1 + 1e-10


@given(seeds, st.integers(2, 12))
@settings(max_examples=60, deadline=None)
def test_weyl_and_ostrowski(seed, n):
    rng = np.random.default_rng(seed)
    X, Y = rng.standard_normal((n, n)), rng.standard_normal((n, n))
    A, H = X + X.T, Y + Y.T
    la, lh, lah = (np.linalg.eigvalsh(M) for M in (A, H, A + H))
    assert np.all(la + lh[0] <= lah + 1e-9) and np.all(lah <= la + lh[-1] + 1e-9)
    W = rng.standard_normal((n, n)) + n * np.eye(n)
    Hpd = Y @ Y.T + 0.1 * np.eye(n)
    lhs = np.linalg.eigvalsh(W @ Hpd @ W.T)[0]
    assert lhs >= np.linalg.eigvalsh(W @ W.T)[0] * np.linalg.eigvalsh(Hpd)[0] - 1e-9
