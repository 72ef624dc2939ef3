"""Recursive projected compressed sensing (ReProCS).

Each frame is projected orthogonally to the current subspace estimate, the
sparse part is recovered by BPDN, thresholded and refit by least squares,
and the low-rank part is what remains.  After every known change time the
estimate of the new directions is refreshed ``K`` times, each from the
``alpha`` most recent low-rank estimates, and then merged into the main
basis.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .linalg import BasisLike, BasisMatrix, as_array, orthonormalize, top_r_evd
from .sparse_recovery import (
    BpdnConfig,
    IllConditionedSupport,
    ProjectedOperator,
    estimate_support,
    ls_refit,
    solve_bpdn,
)

_logger = logging.getLogger(__name__)

ENERGY_FLOOR = 1e-12


class DegenerateDataError(ValueError):
    """Projected data carries no energy in the requested number of directions."""


@dataclass(frozen=True)
class ReprocsParams:
    """Algorithm knobs.

    Attributes
    ----------
    xi : float
        Residual bound of the BPDN step.
    omega : float
        Support threshold.
    alpha : int
        Frames per projection-PCA update.
    K : int
        Number of projection-PCA updates per change.
    t_change : tuple of int
        Known change times (0-based).
    r0 : int
        Initial rank.
    c : int
        Directions added per change.
    bpdn : BpdnConfig
    b_diff : float or None
        If set, projection-PCA is run on ``L_hat_t - b_diff * L_hat_{t-1}``
        instead of ``L_hat_t``.
    """

    xi: float
    omega: float
    alpha: int
    K: int
    t_change: tuple[int, ...]
    r0: int
    c: int
    bpdn: BpdnConfig = field(default_factory=BpdnConfig)
    b_diff: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "t_change", tuple(int(t) for t in self.t_change))
        if self.alpha < 1 or self.K < 1:
            raise ValueError("alpha and K must be at least 1")
        if self.omega <= 0 or self.xi <= 0:
            raise ValueError("omega and xi must be positive")
        if any(b <= a for a, b in zip(self.t_change, self.t_change[1:])):
            raise ValueError("t_change must be strictly increasing")
        if self.r0 < 0 or self.c < 0:
            raise ValueError("r0 and c must be non-negative")
        span = self.K * self.alpha
        for a, b in zip(self.t_change, self.t_change[1:]):
            if b - a < span:
                warnings.warn(
                    f"change times {a} and {b} are closer than K*alpha = {span}",
                    RuntimeWarning,
                    stacklevel=3,
                )

    def update_times(self, j: int) -> list[int]:
        """Times at which the updates for change ``j`` (1-based) fire."""
        tj = self.t_change[j - 1]
        return [tj + k * self.alpha - 1 for k in range(1, self.K + 1)]


@dataclass(frozen=True)
class ReprocsState:
    """Evolving estimate.

    Attributes
    ----------
    P_hat_star : BasisMatrix
        Basis of all merged directions.
    P_hat_new : BasisMatrix
        Current estimate of the directions added at the pending change.
    j : int
        1-based index of the next change to be handled.
    k : int
        Index of the next projection-PCA update, in ``1 .. K``.
    buffer : tuple of ndarray
        Low-rank estimates collected for the next update.
    t : int
        Last processed time (``-1`` before any frame).
    prev_L_hat : ndarray or None
        Previous low-rank estimate, used only in differencing mode.
    """

    P_hat_star: BasisMatrix
    P_hat_new: BasisMatrix
    j: int = 1
    k: int = 1
    buffer: tuple = ()
    t: int = -1
    prev_L_hat: np.ndarray | None = None
    phi: ProjectedOperator | None = field(default=None, compare=False, repr=False)

    def operator(self) -> ProjectedOperator:
        if self.phi is not None:
            return self.phi
        return ProjectedOperator.from_bases(self.P_hat_star, self.P_hat_new)

    @property
    def P_hat(self) -> BasisMatrix:
        """Full current estimate ``[P_hat_star, P_hat_new]``."""
        if self.P_hat_new.r == 0:
            return self.P_hat_star
        return self.P_hat_star.hstack(self.P_hat_new)


@dataclass(frozen=True)
class FrameEstimate:
    """Per-frame output of :func:`process_frame`.

    ``L_hat`` equals ``M_t - S_hat`` exactly.  ``bpdn_converged`` is False
    when the solver hit its iteration cap, and ``ls_fallback`` is True when
    the LS refit was skipped because the support was ill-conditioned.
    """

    S_hat: np.ndarray
    L_hat: np.ndarray
    T_hat: np.ndarray
    y: np.ndarray
    S_cs: np.ndarray
    converged: bool
    ls_fallback: bool = False
    updated: bool = False
    merged: bool = False


def proj_pca(D: np.ndarray, P: BasisLike | None, r: int) -> BasisMatrix:
    """Top-``r`` eigenvectors of the sample covariance of ``(I - PP') D``.

    Parameters
    ----------
    D : ndarray, shape (n, m)
        Data columns.
    P : BasisMatrix, ndarray or None
        Subspace to project out first; None or width 0 gives plain PCA.
    r : int

    Raises
    ------
    DegenerateDataError
        When all ``r`` leading eigenvalues are below 1e-12.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[1] < 1:
        raise ValueError("proj_pca needs at least one data column")
    n, m = D.shape
    if not 0 <= r <= n:
        raise ValueError(f"r={r} outside [0, {n}]")
    Pa = np.zeros((n, 0)) if P is None else as_array(P)
    Dp = D - Pa @ (Pa.T @ D) if Pa.shape[1] else D
    if r == 0:
        return BasisMatrix.empty(n)
    C = Dp @ Dp.T / m
    eig = top_r_evd(C, r)
    if np.all(eig.values < ENERGY_FLOOR):
        raise DegenerateDataError("no energy in projected data")
    Q = eig.vectors.data
    if Pa.shape[1] and np.max(np.abs(Pa.T @ Q)) > 1e-10:
        # directions with negligible energy may leak into span(P); clean them
        Q = orthonormalize(Q - Pa @ (Pa.T @ Q)).data
    return BasisMatrix(Q)


def init(training: np.ndarray, r0: int) -> ReprocsState:
    """Initial state from outlier-free training frames (``n x t_train``)."""
    training = np.asarray(training, dtype=float)
    n, t_train = training.shape
    if t_train < r0:
        raise ValueError(f"need at least r0 = {r0} training frames, got {t_train}")
    P0 = proj_pca(training, None, r0) if t_train else BasisMatrix.empty(n)
    last = training[:, -1].copy() if t_train else None
    return ReprocsState(P_hat_star=P0, P_hat_new=BasisMatrix.empty(n), prev_L_hat=last)


def process_frame(
    state: ReprocsState, M_t: np.ndarray, t: int, params: ReprocsParams
) -> tuple[FrameEstimate, ReprocsState]:
    """Recover ``(S_t, L_t)`` from ``M_t`` and advance the state.

    Returns
    -------
    FrameEstimate, ReprocsState
    """
    if t <= state.t:
        raise ValueError(f"time must increase: got {t} after {state.t}")
    M_t = np.asarray(M_t, dtype=float)
    phi = state.operator()

    y = phi.apply(M_t)
    sol = solve_bpdn(phi, y, params.xi, params.bpdn)
    if not sol.converged:
        _logger.warning("t=%d: BPDN did not converge; using its last iterate", t)
    S_cs = sol.x_hat
    T_hat = estimate_support(S_cs, params.omega)
    ls_fallback = False
    try:
        S_hat = ls_refit(phi, y, T_hat)
    except IllConditionedSupport as exc:
        _logger.warning("t=%d: %s; keeping thresholded BPDN output", t, exc)
        S_hat = np.where(np.abs(S_cs) > params.omega, S_cs, 0.0)
        ls_fallback = True
    L_hat = M_t - S_hat

    P_star, P_new, j, k = state.P_hat_star, state.P_hat_new, state.j, state.k
    buffer = state.buffer
    new_phi = phi
    updated = merged = False
    if j <= len(params.t_change) and t >= params.t_change[j - 1]:
        tj = params.t_change[j - 1]
        if params.b_diff is not None and state.prev_L_hat is not None:
            col = L_hat - params.b_diff * state.prev_L_hat
        else:
            col = L_hat
        buffer = buffer + (col,)
        if t >= tj + k * params.alpha - 1:
            D = np.column_stack(buffer)
            P_new = proj_pca(D, P_star, params.c)
            buffer = ()
            updated = True
            _logger.debug("t=%d: projection-PCA update k=%d for change j=%d", t, k, j)
            if k == params.K:
                P_star = P_star.hstack(P_new)
                P_new = BasisMatrix.empty(P_star.n)
                j += 1
                k = 1
                merged = True
            else:
                k += 1
            new_phi = ProjectedOperator.from_bases(P_star, P_new)

    est = FrameEstimate(
        S_hat=S_hat,
        L_hat=L_hat,
        T_hat=T_hat,
        y=y,
        S_cs=S_cs,
        converged=sol.converged,
        ls_fallback=ls_fallback,
        updated=updated,
        merged=merged,
    )
    new_state = replace(
        state,
        P_hat_star=P_star,
        P_hat_new=P_new,
        j=j,
        k=k,
        buffer=buffer,
        t=t,
        prev_L_hat=L_hat,
        phi=new_phi,
    )
    return est, new_state


def run_stream(
    M: np.ndarray,
    t_train: int,
    params: ReprocsParams,
    on_frame=None,
) -> list[FrameEstimate]:
    """Run ReProCS on an ``n x T`` stream whose first ``t_train`` frames are clean.

    ``on_frame(t, estimate, state)`` is called after each frame, with the
    state as it was when the frame was processed.
    """
    state = init(M[:, :t_train], params.r0)
    out = []
    for t in range(t_train, M.shape[1]):
        before = state
        est, state = process_frame(state, M[:, t], t, params)
        if on_frame is not None:
            on_frame(t, est, before)
        out.append(est)
    return out


def schedule(t_change: Sequence[int], alpha: int, K: int) -> list[tuple[int, int, int]]:
    """All ``(t, j, k)`` update events implied by the change times."""
    return [
        (tj + k * alpha - 1, j, k)
        for j, tj in enumerate(t_change, start=1)
        for k in range(1, K + 1)
    ]


__all__ = [
    "DegenerateDataError",
    "FrameEstimate",
    "ReprocsParams",
    "ReprocsState",
    "init",
    "proj_pca",
    "process_frame",
    "run_stream",
    "schedule",
]
