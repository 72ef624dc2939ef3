"""Batch principal component pursuit baseline.

Solves ``min ||L||_* + lam ||S||_1  s.t.  L + S = M`` by the inexact
augmented Lagrangian method: singular-value thresholding for ``L``,
entrywise soft-thresholding for ``S``, and a geometrically increasing
penalty.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PcpConfig:
    """Solver settings.

    Attributes
    ----------
    tol : float
        Stop when ``||M - L - S||_F <= tol * ||M||_F`` and the sparse
        iterate has settled, ``||S_k - S_{k-1}||_F <= dual_tol * ||M||_F``.
    dual_tol : float
    max_iters : int
    mu_factor : float
        Initial penalty is ``mu_factor / ||M||_2``.
    rho : float
        Penalty growth per iteration.  Faster growth reaches feasibility
        sooner but can stall short of the optimum.
    mu_max : float
        Upper limit on the penalty.
    """

    tol: float = 1e-7
    dual_tol: float = 1e-7
    max_iters: int = 1000
    mu_factor: float = 1.25
    rho: float = 1.1
    mu_max: float = 1e10


@dataclass(frozen=True)
class PcpSolution:
    L: np.ndarray
    S: np.ndarray
    iterations: int
    primal_residual: float
    converged: bool
    residual_history: tuple[float, ...] = ()


def default_lambda(n: int, T: int) -> float:
    return 1.0 / math.sqrt(max(n, T))


def _shrink(X: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(X) * np.maximum(np.abs(X) - tau, 0.0)


def _svt(X: np.ndarray, tau: float) -> tuple[np.ndarray, int]:
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    keep = int(np.count_nonzero(s > tau))
    if keep == 0:
        return np.zeros_like(X), 0
    return (U[:, :keep] * (s[:keep] - tau)) @ Vt[:keep], keep


def solve_pcp(M: np.ndarray, lam: float | None = None, cfg: PcpConfig | None = None) -> PcpSolution:
    """Split ``M`` into low-rank ``L`` and sparse ``S``.

    Parameters
    ----------
    M : ndarray, shape (n, T)
    lam : float, optional
        Weight of the l1 term; defaults to ``1 / sqrt(max(n, T))``.
    cfg : PcpConfig, optional

    Returns
    -------
    PcpSolution
        ``converged`` is False if ``max_iters`` ran out; the residual is
        reported either way.
    """
    cfg = cfg or PcpConfig()
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or min(M.shape) < 1:
        raise ValueError("M must be a non-empty 2-D array")
    n, T = M.shape
    lam = default_lambda(n, T) if lam is None else float(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    normF = float(np.linalg.norm(M))
    if normF == 0.0:
        return PcpSolution(np.zeros_like(M), np.zeros_like(M), 0, 0.0, True, (0.0,))

    norm2 = float(np.linalg.norm(M, 2))
    # dual initialization scaled so that it is feasible for both norms
    Y = M / max(norm2, np.max(np.abs(M)) / lam)
    mu = cfg.mu_factor / norm2
    L = np.zeros_like(M)
    S = np.zeros_like(M)
    history = []
    converged = False
    it = 0
    res = normF
    for it in range(1, cfg.max_iters + 1):
        L, _ = _svt(M - S + Y / mu, 1.0 / mu)
        S_prev = S
        S = _shrink(M - L + Y / mu, lam / mu)
        Z = M - L - S
        Y = Y + mu * Z
        step = float(np.linalg.norm(S - S_prev))
        mu = min(mu * cfg.rho, cfg.mu_max)
        res = float(np.linalg.norm(Z))
        history.append(res / normF)
        if res <= cfg.tol * normF and step <= cfg.dual_tol * normF:
            converged = True
            break
    if not converged:
        _logger.warning("PCP stopped after %d iterations, relative residual %.3g", it, res / normF)
    return PcpSolution(L, S, it, res, converged, tuple(history))


__all__ = ["PcpConfig", "PcpSolution", "default_lambda", "solve_pcp"]
