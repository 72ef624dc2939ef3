"""Shared oracles and fixtures.

The oracles here deliberately avoid the package's own code paths: norms come
from full SVDs and restricted isometry constants from enumerating every
column subset of an explicitly formed matrix.
"""

from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]


def svd_norm(M) -> float:
    """Spectral norm from a full SVD."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def rand_basis(rng, n, r) -> np.ndarray:
    """Orthonormal ``n x r`` basis via numpy QR."""
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return q


def brute_ric(Psi: np.ndarray, s: int) -> float:
    """``max_{|T| = s} ||Psi_T' Psi_T - I||_2`` by enumeration over column subsets."""
    n_cols = Psi.shape[1]
    best = 0.0
    for T in itertools.combinations(range(n_cols), s):
        sub = Psi[:, T]
        ev = np.linalg.eigvalsh(sub.T @ sub)
        best = max(best, abs(ev[-1] - 1.0), abs(1.0 - ev[0]))
    return best


def brute_kappa(P: np.ndarray, s: int) -> float:
    """``max_{|T| = s} ||P[T, :]||_2`` by enumeration, SVD per subset."""
    best = 0.0
    for T in itertools.combinations(range(P.shape[0]), s):
        best = max(best, svd_norm(P[list(T)]))
    return best


def flat_vector(rng, n) -> np.ndarray:
    """Unit vector with equal-magnitude entries and random signs."""
    return rng.choice(np.array([-1.0, 1.0]), n) / np.sqrt(n)


@pytest.fixture(scope="session")
def tracking_config_doc() -> dict:
    with open(ROOT / "configs" / "tracking.json") as fh:
        return json.load(fh)
