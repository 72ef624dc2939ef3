import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rand_basis
from reprocs.sparse_recovery import (
    BpdnConfig,
    BpdnError,
    IllConditionedSupport,
    ProjectedOperator,
    estimate_support,
    ls_refit,
    restricted_error,
    solve_bpdn,
)

seeds = st.integers(0, 2**32 - 1)


def sparse_vec(rng, n, s, lo=1.0, hi=3.0):
    x = np.zeros(n)
    T = np.sort(rng.choice(n, s, replace=False))
    x[T] = rng.uniform(lo, hi, s) * rng.choice([-1.0, 1.0], s)
    return x, T


# ProjectedOperator -----------------------------------------------------------

@given(seeds)
@settings(max_examples=30, deadline=None)
def test_operator_symmetric_idempotent(seed):
    rng = np.random.default_rng(seed)
    phi = ProjectedOperator(rand_basis(rng, 20, 4))
    v = rng.standard_normal(20)
    assert np.linalg.norm(phi(phi(v)) - phi(v)) <= 1e-10 * np.linalg.norm(v)
    D = phi.dense()
    assert np.allclose(D, D.T)
    T = np.array([1, 5, 7])
    np.testing.assert_allclose(phi.columns(T), D[:, T], atol=1e-14)


# solve_bpdn ------------------------------------------------------------------

def test_bpdn_zero_measurement():
    phi = ProjectedOperator(n=6)
    sol = solve_bpdn(phi, np.zeros(6), 0.1)
    assert np.array_equal(sol.x_hat, np.zeros(6)) and sol.converged


def test_bpdn_identity_equality_constraint():
    y = np.array([1.0, -2.0, 0.0, 0.5, 3.0])
    sol = solve_bpdn(ProjectedOperator(n=5), y, 0.0)
    assert sol.converged
    np.testing.assert_allclose(sol.x_hat, y, atol=1e-6)


def test_bpdn_infeasible_raises():
    P = np.eye(4)[:, [0]]
    with pytest.raises(BpdnError):
        solve_bpdn(ProjectedOperator(P), np.array([1.0, 0, 0, 0]), 0.5)


def test_bpdn_nonconvergence_flagged():
    rng = np.random.default_rng(0)
    phi = ProjectedOperator(rand_basis(rng, 30, 3))
    x, _ = sparse_vec(rng, 30, 4)
    sol = solve_bpdn(phi, phi(x), 0.05, BpdnConfig(max_iters=3))
    assert not sol.converged and sol.iterations == 3
    assert sol.residual_norm <= 0.05 * (1 + 1e-6)


@given(seeds, st.floats(0.01, 1.0))
@settings(max_examples=40, deadline=None)
def test_bpdn_feasible_and_certified(seed, xi):
    rng = np.random.default_rng(seed)
    n = 30
    phi = ProjectedOperator(rand_basis(rng, n, 4))
    x, _ = sparse_vec(rng, n, 3)
    z = rng.standard_normal(n)
    y = phi(x) + xi * z / np.linalg.norm(z)
    sol = solve_bpdn(phi, y, xi)
    assert sol.converged
    assert sol.residual_norm <= xi * (1 + 1e-6)
    assert sol.duality_gap <= 1e-4 * max(1.0, np.abs(sol.x_hat).sum())


def test_bpdn_matches_reference_solver():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(5)
    for _ in range(5):
        n = 25
        P = rand_basis(rng, n, 3)
        phi = ProjectedOperator(P)
        x, _ = sparse_vec(rng, n, 3)
        y = phi(x) + 0.05 * rng.standard_normal(n)
        xi = 0.2
        sol = solve_bpdn(phi, y, xi)
        v = cp.Variable(n)
        prob = cp.Problem(cp.Minimize(cp.norm1(v)), [cp.norm2(y - phi.dense() @ v) <= xi])
        prob.solve(solver=cp.CLARABEL)
        assert np.abs(sol.x_hat).sum() <= prob.value + 1e-5


# estimate_support --------------------------------------------------------------

def test_estimate_support_examples():
    assert estimate_support(np.array([3.0, 0.1, -2.0]), 1.0).tolist() == [0, 2]
    assert estimate_support(np.array([0.5, -0.2]), 1.0).size == 0
    assert estimate_support(np.array([1.0]), 1.0).size == 0


# ls_refit --------------------------------------------------------------------

def test_ls_refit_identity_and_empty():
    y = np.array([0.0, 2.0, 0.0, -1.0])
    phi = ProjectedOperator(n=4)
    np.testing.assert_allclose(ls_refit(phi, y, [1, 3]), y)
    assert np.array_equal(ls_refit(phi, y, []), np.zeros(4))


def test_ls_refit_ill_conditioned():
    P = np.zeros((5, 1))
    P[2, 0] = 1.0
    with pytest.raises(IllConditionedSupport, match="ill-conditioned support"):
        ls_refit(ProjectedOperator(P), np.ones(5), [2])


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_ls_refit_error_closed_form(seed):
    rng = np.random.default_rng(seed)
    n = 20
    P = rand_basis(rng, n, 3)
    phi = ProjectedOperator(P)
    S, T = sparse_vec(rng, n, 3)
    L = P @ rng.standard_normal(3) + 0.1 * rng.standard_normal(n)
    S_hat = ls_refit(phi, phi(S + L), T)
    Phi = np.eye(n) - P @ P.T
    closed = np.zeros(n)
    closed[T] = np.linalg.pinv(Phi[:, T]) @ (Phi @ L)
    err = S_hat - S
    assert np.linalg.norm(err - closed) <= 1e-8 * max(np.linalg.norm(closed), 1e-300) + 1e-14
    np.testing.assert_allclose(restricted_error(phi, T, L), closed, atol=1e-12)
