"""Projected compressed sensing: BPDN, support thresholding and LS refit.

The measurement operator is always an orthogonal projector
``Phi = I - Q Q'`` and is applied matrix-free.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import BasisLike, as_array

_logger = logging.getLogger(__name__)

GRAM_COND_CAP = 1e12


class BpdnError(RuntimeError):
    """The BPDN problem is infeasible or the solver produced no usable iterate."""


class IllConditionedSupport(ValueError):
    """The restricted Gram matrix on the candidate support is near-singular."""


class ProjectedOperator:
    """``Phi = I - Q Q'`` for a basis ``Q`` (possibly empty).

    Parameters
    ----------
    P_hat : BasisMatrix or ndarray, shape (n, r)
        Orthonormal columns spanning the subspace to project out.
    n : int, optional
        Ambient dimension; required only when ``P_hat`` is None.
    """

    __slots__ = ("Q", "n")

    def __init__(self, P_hat: BasisLike | None = None, n: int | None = None):
        if P_hat is None:
            if n is None:
                raise ValueError("need a basis or a dimension")
            P_hat = np.zeros((n, 0))
        Q = np.ascontiguousarray(as_array(P_hat))
        if n is not None and Q.shape[0] != n:
            raise ValueError("basis dimension does not match n")
        self.Q = Q
        self.n = Q.shape[0]

    @classmethod
    def from_bases(cls, *bases: BasisLike) -> "ProjectedOperator":
        """Operator projecting out several mutually orthogonal bases."""
        arrays = [as_array(b) for b in bases]
        return cls(np.hstack(arrays))

    @property
    def r(self) -> int:
        return self.Q.shape[1]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``Phi v`` for a vector or a matrix of column vectors."""
        if self.Q.shape[1] == 0:
            return np.array(v, dtype=float, copy=True)
        return v - self.Q @ (self.Q.T @ v)

    __call__ = apply

    def dense(self) -> np.ndarray:
        """Materialize ``Phi`` (intended for small test instances)."""
        return np.eye(self.n) - self.Q @ self.Q.T

    def columns(self, T) -> np.ndarray:
        """``Phi[:, T]`` without forming ``Phi``."""
        T = np.asarray(T, dtype=np.intp)
        out = -self.Q @ self.Q[T].T
        out[T, np.arange(T.size)] += 1.0
        return out


@dataclass(frozen=True)
class BpdnConfig:
    """ADMM settings for :func:`solve_bpdn`.

    Attributes
    ----------
    penalty : float
        Initial augmented-Lagrangian penalty ``rho``.
    max_iters : int
    tol : float
        Absolute and relative tolerance for the primal and dual residuals.
    feas_tol : float
        Relative slack allowed on the residual constraint.
    adaptive : bool
        Rebalance ``rho`` when the primal and dual residuals drift apart.
    """

    penalty: float = 1.0
    max_iters: int = 20000
    tol: float = 1e-7
    feas_tol: float = 1e-6
    adaptive: bool = True


@dataclass(frozen=True)
class BpdnSolution:
    """Output of :func:`solve_bpdn`.

    ``duality_gap`` is ``||x_hat||_1`` minus the value of a dual-feasible
    point built from the final multiplier, so it upper-bounds suboptimality.
    """

    x_hat: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    duality_gap: float = math.nan


def _soft(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def solve_bpdn(
    phi: ProjectedOperator,
    y: np.ndarray,
    xi: float,
    cfg: BpdnConfig | None = None,
) -> BpdnSolution:
    """Solve ``min ||x||_1  s.t.  ||y - Phi x||_2 <= xi``.

    ADMM on the split ``x = w`` where ``x`` is kept inside the constraint
    set and ``w`` carries the l1 term.  Because ``Phi`` is an orthogonal
    projector the constraint set is a cylinder: the component of ``x`` in
    the null space of ``Phi`` is free, and ``Phi x`` must lie in a ball
    around ``Phi y`` of radius ``sqrt(xi^2 - ||(I - Phi) y||^2)``.  The
    projection onto it is therefore exact and cheap.

    Parameters
    ----------
    phi : ProjectedOperator
    y : ndarray, shape (n,)
    xi : float
        Residual bound, ``xi >= 0``.
    cfg : BpdnConfig, optional

    Returns
    -------
    BpdnSolution
        ``x_hat`` is the constrained iterate, so it is feasible whether or
        not the iteration converged.

    Raises
    ------
    BpdnError
        If no point satisfies the constraint.
    """
    cfg = cfg or BpdnConfig()
    y = np.asarray(y, dtype=float)
    n = phi.n
    if y.shape != (n,):
        raise ValueError(f"y must have shape ({n},), got {y.shape}")
    if xi < 0:
        raise ValueError("xi must be non-negative")

    phi_y = phi.apply(y)
    out_sq = float(np.dot(y - phi_y, y - phi_y))
    if out_sq > xi * xi * (1.0 + cfg.feas_tol) ** 2:
        raise BpdnError(
            f"infeasible: ||(I-Phi)y|| = {math.sqrt(out_sq):.6g} exceeds xi = {xi:.6g}"
        )
    radius = math.sqrt(max(xi * xi - out_sq, 0.0))

    def project(v: np.ndarray) -> np.ndarray:
        d = phi.apply(v - y)
        nd = math.sqrt(float(np.dot(d, d)))
        if nd <= radius:
            return v
        return v - d * (1.0 - radius / nd)

    if float(np.dot(phi_y, phi_y)) <= radius * radius:
        # zero is feasible, hence optimal
        return BpdnSolution(np.zeros(n), 0, math.sqrt(float(np.dot(phi_y, phi_y)) + out_sq), True, 0.0)

    rho = float(cfg.penalty)
    w = np.zeros(n)
    u = np.zeros(n)
    x = w
    sqrt_n = math.sqrt(n)
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        x = project(w - u)
        w_old = w
        w = _soft(x + u, 1.0 / rho)
        r_vec = x - w
        u = u + r_vec
        r_norm = math.sqrt(float(np.dot(r_vec, r_vec)))
        dw = w - w_old
        s_norm = rho * math.sqrt(float(np.dot(dw, dw)))
        eps_pri = cfg.tol * (sqrt_n + max(np.linalg.norm(x), np.linalg.norm(w)))
        eps_dual = cfg.tol * (sqrt_n + rho * np.linalg.norm(u))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break
        if cfg.adaptive and it % 10 == 0:
            if r_norm > 10.0 * s_norm:
                rho *= 2.0
                u /= 2.0
            elif s_norm > 10.0 * r_norm:
                rho /= 2.0
                u *= 2.0

    resid = y - phi.apply(x)
    res_norm = math.sqrt(float(np.dot(resid, resid)))
    gap = _duality_gap(phi, y, xi, x, rho * u)
    if not converged:
        _logger.warning(
            "BPDN stopped after %d iterations (residual %.3g, gap %.3g)", it, res_norm, gap
        )
    return BpdnSolution(x, it, res_norm, converged, gap)


def _duality_gap(phi: ProjectedOperator, y, xi, x, mult) -> float:
    """``||x||_1`` minus the dual objective ``lam'y - xi ||lam||``.

    The dual point is the ADMM multiplier restricted to the range of ``Phi``,
    scaled so that ``||Phi lam||_inf <= 1``, plus the multiple of
    ``(I - Phi) y`` that makes it parallel to the residual at the optimum.
    """
    lam = phi.apply(mult)
    scale = max(1.0, float(np.max(np.abs(lam))) if lam.size else 1.0)
    lam = lam / scale
    phi_y = phi.apply(y)
    out = y - phi_y
    radius = float(np.linalg.norm(phi_y - phi.apply(x)))
    if radius > 0.0:
        lam = lam + (float(np.linalg.norm(lam)) / radius) * out
    dual = float(lam @ y) - xi * float(np.linalg.norm(lam))
    return float(np.sum(np.abs(x))) - dual


def estimate_support(x: np.ndarray, omega: float) -> np.ndarray:
    """Indices with ``|x_i| > omega`` (strict), in increasing order."""
    if omega < 0:
        raise ValueError("omega must be non-negative")
    return np.flatnonzero(np.abs(np.asarray(x)) > omega)


def ls_refit(phi: ProjectedOperator, y: np.ndarray, T) -> np.ndarray:
    """Least-squares estimate supported on ``T``.

    Solves ``min ||y - Phi_T z||_2`` and scatters ``z`` into a length-``n``
    vector.  Since ``Phi`` is a symmetric idempotent, ``Phi_T' Phi_T`` reduces
    to ``I - Q_T Q_T'`` and ``Phi_T' y`` to ``(Phi y)_T``.

    Raises
    ------
    IllConditionedSupport
        When the condition number of ``Phi_T' Phi_T`` exceeds 1e12.
    """
    T = np.asarray(T, dtype=np.intp)
    n = phi.n
    out = np.zeros(n)
    if T.size == 0:
        return out
    if T.size >= n:
        raise IllConditionedSupport("ill-conditioned support: |T| must be below n")
    QT = phi.Q[T]
    G = np.eye(T.size) - QT @ QT.T
    evals = np.linalg.eigvalsh(G)
    lo, hi = float(evals[0]), float(evals[-1])
    if lo <= 0.0 or hi / lo > GRAM_COND_CAP:
        raise IllConditionedSupport(
            f"ill-conditioned support: Gram condition number {hi / lo if lo > 0 else math.inf:.3g}"
        )
    rhs = phi.apply(np.asarray(y, dtype=float))[T]
    out[T] = scipy.linalg.solve(G, rhs, assume_a="pos")
    return out


def restricted_error(phi: ProjectedOperator, T, beta: np.ndarray) -> np.ndarray:
    """``I_T (Phi_T' Phi_T)^{-1} I_T' Phi beta``: the LS error when ``T`` is exact."""
    return ls_refit(phi, phi.apply(np.asarray(beta, dtype=float)), T)


__all__ = [
    "BpdnConfig",
    "BpdnError",
    "BpdnSolution",
    "IllConditionedSupport",
    "ProjectedOperator",
    "estimate_support",
    "ls_refit",
    "restricted_error",
    "solve_bpdn",
]
