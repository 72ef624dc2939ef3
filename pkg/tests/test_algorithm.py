import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rand_basis
from reprocs.algorithm import (
    DegenerateDataError,
    ReprocsParams,
    init,
    proj_pca,
    process_frame,
    run_stream,
    schedule,
)
from reprocs.linalg import BasisMatrix, subspace_error
from reprocs.signal_model import ModelConfig, gen_model

seeds = st.integers(0, 2**32 - 1)


def params(**kw):
    base = dict(xi=0.5, omega=1.0, alpha=20, K=3, t_change=(100,), r0=2, c=1)
    base.update(kw)
    return ReprocsParams(**base)


# proj_pca --------------------------------------------------------------------

def test_proj_pca_empty_P_is_standard_pca():
    rng = np.random.default_rng(0)
    D = rng.standard_normal((8, 30))
    Q = proj_pca(D, None, 3)
    w, V = np.linalg.eigh(D @ D.T / 30)
    assert subspace_error(Q, V[:, -3:]) <= 1e-10
    assert subspace_error(proj_pca(D, BasisMatrix.empty(8), 3), Q) <= 1e-12


def test_proj_pca_inside_span_is_degenerate():
    rng = np.random.default_rng(1)
    P = rand_basis(rng, 10, 3)
    D = P @ rng.standard_normal((3, 15))
    with pytest.raises(DegenerateDataError, match="no energy in projected data"):
        proj_pca(D, P, 1)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_proj_pca_recovers_new_directions(seed):
    rng = np.random.default_rng(seed)
    B = rand_basis(rng, 20, 5)
    P, P_new = B[:, :3], B[:, 3:]
    A = rng.standard_normal((2, 40)) + 3 * np.eye(2, 40)
    D = P @ rng.standard_normal((3, 40)) + P_new @ A + 1e-9 * rng.standard_normal((20, 40))
    Q = proj_pca(D, P, 2)
    assert np.max(np.abs(Q.data.T @ Q.data - np.eye(2))) <= 1e-10
    assert subspace_error(Q, P_new) <= 1e-6
    assert np.max(np.abs(P.T @ Q.data)) <= 1e-8


def test_proj_pca_rejects_bad_rank():
    with pytest.raises(ValueError):
        proj_pca(np.ones((3, 2)), None, 4)


# init ------------------------------------------------------------------------

def test_init_noiseless_training():
    rng = np.random.default_rng(2)
    P0 = rand_basis(rng, 30, 4)
    st0 = init(P0 @ rng.standard_normal((4, 60)), 4)
    assert subspace_error(st0.P_hat_star, P0) <= 1e-8
    assert st0.P_hat_new.r == 0 and (st0.j, st0.k) == (1, 1)


def test_init_rank_zero_gives_identity_operator():
    st0 = init(np.zeros((5, 3)), 0)
    assert st0.P_hat_star.r == 0
    v = np.arange(5.0)
    assert np.array_equal(st0.operator()(v), v)


def test_init_too_few_frames():
    with pytest.raises(ValueError):
        init(np.ones((5, 2)), 3)


def test_init_full_scale():
    cfg = ModelConfig(n=200, r0=12, J=2, c=2, t_change=(100, 400), t_train=40, total_T=500)
    g = gen_model(cfg)
    st0 = init(g.M[:, :40], 12)
    assert st0.P_hat_star.r == 12 and subspace_error(st0.P_hat_star, g.P[0]) <= 1e-8


# params ----------------------------------------------------------------------

def test_params_validation_and_spacing_warning():
    with pytest.raises(ValueError):
        params(alpha=0)
    with pytest.raises(ValueError):
        params(omega=0.0)
    with pytest.raises(ValueError):
        params(t_change=(100, 90))
    with pytest.warns(RuntimeWarning, match="closer than"):
        params(t_change=(100, 130))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        params(t_change=(100, 160))


def test_update_schedule_formula():
    p = params()
    assert p.update_times(1) == [119, 139, 159]
    assert schedule((100, 300), 20, 3) == [(119, 1, 1), (139, 1, 2), (159, 1, 3),
                                           (319, 2, 1), (339, 2, 2), (359, 2, 3)]


# process_frame ----------------------------------------------------------------

def _stream(seed=0, **kw):
    base = dict(n=40, r0=2, c=1, J=1, t_change=(100,), t_train=20, total_T=200,
                gamma_star=5.0, gamma_new=0.5, lambda_minus=1.0, lambda_plus=2.0,
                s=3, support_dwell=10, gamma_interval=20, seed=seed)
    base.update(kw)
    return gen_model(ModelConfig(**base))


def test_zero_sparse_stream_without_change():
    g = _stream(s=0, J=0, t_change=())
    p = params(t_change=(), xi=0.1)
    state = init(g.M[:, :20], 2)
    for t in range(20, 60):
        est, state = process_frame(state, g.M[:, t], t, p)
        assert np.linalg.norm(est.y) <= 1e-10
        assert not np.any(est.S_cs) and est.T_hat.size == 0
        assert not np.any(est.S_hat) and np.array_equal(est.L_hat, g.M[:, t])


def test_time_must_increase():
    g = _stream()
    state = init(g.M[:, :20], 2)
    _, state = process_frame(state, g.M[:, 20], 20, params())
    with pytest.raises(ValueError):
        process_frame(state, g.M[:, 20], 20, params())


def test_update_timing_and_merge():
    g = _stream()
    p = params()
    state = init(g.M[:, :20], 2)
    fired, merged = [], []
    for t in range(20, 200):
        est, new = process_frame(state, g.M[:, t], t, p)
        assert np.array_equal(est.L_hat, g.M[:, t] - est.S_hat)
        assert len(new.buffer) <= p.alpha
        if new.P_hat_new.r:
            assert np.max(np.abs(new.P_hat_new.data.T @ new.P_hat_star.data)) <= 1e-8
        if est.updated:
            fired.append(t)
        if est.merged:
            merged.append(t)
            assert new.P_hat_star.r == p.r0 + p.c
            assert new.P_hat_new.r == 0 and new.j == 2 and new.k == 1
        state = new
    assert fired == [119, 139, 159] and merged == [159]


def test_subspace_tracked_after_merge():
    g = _stream(seed=3)
    states = []
    run_stream(g.M, 20, params(), on_frame=lambda t, est, st: states.append(st))
    assert subspace_error(states[-1].P_hat, g.P[1]) <= 1e-2


def test_run_stream_deterministic():
    g = _stream(seed=5)
    a = run_stream(g.M, 20, params())
    b = run_stream(g.M.copy(), 20, params())
    assert all(np.array_equal(x.S_hat, y.S_hat) and np.array_equal(x.T_hat, y.T_hat)
               for x, y in zip(a, b))


def test_differencing_mode_runs():
    g = _stream(seed=6)
    out = run_stream(g.M, 20, params(b_diff=0.5))
    assert len(out) == 180
    assert sum(e.merged for e in out) == 1
