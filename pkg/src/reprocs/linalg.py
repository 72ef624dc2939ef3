"""Dense linear-algebra primitives shared by the rest of the package.

Everything here is a pure function of its inputs.  Subspaces are carried as
:class:`BasisMatrix` objects (matrices with orthonormal columns); a basis of
width zero stands for the empty matrix and is accepted everywhere.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
import scipy.linalg

_logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-10
SIGN_TOL = 1e-12
DEFAULT_SUBSET_CAP = 2_000_000


class BasisMatrix:
    """An ``n x r`` matrix with orthonormal columns.

    Parameters
    ----------
    data : array_like, shape (n, r)
        Column-orthonormal matrix. ``r`` may be zero.
    check : bool, default True
        Verify ``max |Q'Q - I| <= 1e-10`` on construction.
    """

    __slots__ = ("_data",)

    def __init__(self, data, check: bool = True):
        arr = np.array(data, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ValueError("basis data must be a 2-D array")
        n, r = arr.shape
        if n < 1:
            raise ValueError("basis must have at least one row")
        if r > n:
            raise ValueError(f"basis width {r} exceeds dimension {n}")
        if check and r > 0:
            dev = np.max(np.abs(arr.T @ arr - np.eye(r)))
            if dev > ORTHO_TOL:
                raise ValueError(f"columns are not orthonormal (max deviation {dev:.3e})")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def empty(cls, n: int) -> "BasisMatrix":
        """The width-zero basis in dimension ``n``."""
        return cls(np.zeros((n, 0)), check=False)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def r(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def hstack(self, other: "BasisMatrix") -> "BasisMatrix":
        """Concatenate two mutually orthogonal bases column-wise."""
        if other.n != self.n:
            raise ValueError("dimension mismatch in hstack")
        return BasisMatrix(np.hstack([self._data, other._data]))

    def project_out(self, X: np.ndarray) -> np.ndarray:
        """Return ``(I - QQ') X`` without forming the projector."""
        if self.r == 0:
            return np.array(X, dtype=float, copy=True)
        Q = self._data
        return X - Q @ (Q.T @ X)

    def __repr__(self) -> str:
        return f"BasisMatrix(n={self.n}, r={self.r})"


BasisLike = Union[BasisMatrix, np.ndarray]


def as_array(P: BasisLike) -> np.ndarray:
    """Raw 2-D array behind a basis (plain arrays pass through)."""
    if isinstance(P, BasisMatrix):
        return P.data
    arr = np.asarray(P, dtype=float)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


@dataclass(frozen=True)
class SymEig:
    """Leading eigenpairs of a symmetric matrix, values non-increasing."""

    vectors: BasisMatrix
    values: np.ndarray


@dataclass(frozen=True)
class DensenessReport:
    """Result of :func:`denseness_coeff`."""

    kappa: float
    s: int
    mode: str
    subsets_evaluated: int


def orthonormalize(M, rank_tol: float = 1e-10) -> BasisMatrix:
    """Orthonormal basis for the numerical column span of ``M``.

    Classical Gram-Schmidt with one re-orthogonalization pass.  A column is
    dropped when the norm of what remains after projecting out the earlier
    columns is below ``rank_tol`` times its original norm.

    Parameters
    ----------
    M : array_like, shape (n, m)
    rank_tol : float, default 1e-10

    Returns
    -------
    BasisMatrix
        Width equals the numerical rank; an all-zero ``M`` gives width 0.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    A = np.asarray(M, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    n, m = A.shape
    if n < 1:
        raise ValueError("orthonormalize needs n >= 1")
    Q = np.zeros((n, min(n, m)))
    k = 0
    for j in range(m):
        col = A[:, j]
        norm0 = np.linalg.norm(col)
        if norm0 == 0.0 or k == n:
            continue
        v = col.copy()
        for _ in range(2):
            if k:
                v -= Q[:, :k] @ (Q[:, :k].T @ v)
        res = np.linalg.norm(v)
        if res <= rank_tol * norm0:
            continue
        Q[:, k] = v / res
        k += 1
    return BasisMatrix(Q[:, :k])


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Make the first entry with magnitude above 1e-12 positive, per column."""
    for i in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, i]) > SIGN_TOL)
        if nz.size and V[nz[0], i] < 0:
            V[:, i] = -V[:, i]
    return V


def top_r_evd(A, r: int, sym_tol: float = 1e-10) -> SymEig:
    """The ``r`` largest eigenpairs of a symmetric matrix.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Symmetric within ``sym_tol`` (scaled by ``max(1, max|A|)``).
    r : int
        Number of pairs, ``0 <= r <= n``.

    Returns
    -------
    SymEig
        Eigenvalues in non-increasing order; each eigenvector has its first
        entry of magnitude above 1e-12 positive.

    Raises
    ------
    ValueError
        "not Hermitian" when ``A`` is asymmetric beyond tolerance.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("top_r_evd expects a square matrix")
    n = A.shape[0]
    if not 0 <= r <= n:
        raise ValueError(f"r={r} outside [0, {n}]")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > sym_tol * scale:
        raise ValueError("not Hermitian")
    if r == 0:
        return SymEig(BasisMatrix.empty(n), np.zeros(0))
    As = 0.5 * (A + A.T)
    w, V = scipy.linalg.eigh(As, subset_by_index=[n - r, n - 1], driver="evr")
    order = np.argsort(w, kind="stable")[::-1]
    w = w[order]
    V = _fix_signs(np.ascontiguousarray(V[:, order]))
    return SymEig(BasisMatrix(V, check=False), w)


def spectral_norm(M) -> float:
    """Largest singular value of ``M``.

    Computed as the square root of the top eigenvalue of the smaller Gram
    matrix, which is accurate to working precision for the largest value.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim == 1:
        return float(np.linalg.norm(A))
    if A.size == 0:
        return 0.0
    G = A.T @ A if A.shape[0] >= A.shape[1] else A @ A.T
    top = scipy.linalg.eigvalsh(G, subset_by_index=[G.shape[0] - 1, G.shape[0] - 1])
    return float(math.sqrt(max(top[0], 0.0)))


def subspace_error(P_hat: BasisLike, P: BasisLike) -> float:
    """``||(I - P_hat P_hat') P||_2``, the sine of the largest principal angle.

    An empty ``P_hat`` gives 1 against a non-empty ``P``; an empty ``P`` gives 0.
    """
    Ph = as_array(P_hat)
    Pt = as_array(P)
    if Ph.shape[0] != Pt.shape[0]:
        raise ValueError(f"dimension mismatch: {Ph.shape[0]} vs {Pt.shape[0]}")
    if Pt.shape[1] == 0:
        return 0.0
    R = Pt - Ph @ (Ph.T @ Pt) if Ph.shape[1] else Pt
    return min(spectral_norm(R), 1.0)


def _max_row_block_norm(Q: np.ndarray, s: int, cap: int) -> tuple[float, int]:
    """Max over row subsets of size ``s`` of ``||Q[T, :]||_2``, enumerated."""
    n, r = Q.shape
    total = math.comb(n, s)
    if r == 1 or s == 1:
        # closed forms: top-s squared entries of a vector, or the largest row norm
        sq = np.sum(Q * Q, axis=1)
        best = float(np.sort(sq)[::-1][:s].sum()) if r == 1 else float(sq.max())
        return math.sqrt(best), total
    if total > cap:
        raise ValueError(
            f"C({n},{s}) = {total} subsets exceeds the enumeration cap {cap}; use mode='loose'"
        )
    best = 0.0
    chunk = 50_000
    combos = itertools.combinations(range(n), s)
    evaluated = 0
    while True:
        block = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.intp
        )
        if block.size == 0:
            break
        idx = block.reshape(-1, s)
        sub = Q[idx]  # (C, s, r)
        G = sub @ sub.transpose(0, 2, 1) if s <= r else sub.transpose(0, 2, 1) @ sub
        lam = np.linalg.eigvalsh(G)[:, -1]
        best = max(best, float(lam.max()))
        evaluated += idx.shape[0]
    return math.sqrt(max(best, 0.0)), evaluated


def denseness_coeff(
    B,
    s: int,
    mode: Literal["exact", "loose"] = "exact",
    cap: int = DEFAULT_SUBSET_CAP,
) -> DensenessReport:
    """Denseness coefficient ``max_{|T|<=s} ||I_T' basis(B)||_2``.

    Parameters
    ----------
    B : array_like, shape (n, r)
        Any nonzero matrix; its column span is orthonormalized first.
    s : int
        Subset size.
    mode : {"exact", "loose"}
        ``exact`` enumerates all ``C(n, s)`` row subsets (the maximum is
        attained at ``|T| = s`` by monotonicity).  ``loose`` returns the cheap
        upper bound ``s * kappa_1``.
    cap : int
        Largest number of subsets the exact mode will enumerate.
    """
    A = as_array(B)
    if not np.any(A):
        raise ValueError("denseness coefficient undefined for an all-zero matrix")
    Q = orthonormalize(A).data
    n = Q.shape[0]
    if s < 0:
        raise ValueError("s must be non-negative")
    s_eff = min(s, n)
    if mode == "loose":
        kappa1 = float(np.max(np.linalg.norm(Q, axis=1)))
        return DensenessReport(s * kappa1, s, "loose", n)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if s_eff == 0:
        return DensenessReport(0.0, s, "exact", 0)
    kappa, evaluated = _max_row_block_norm(Q, s_eff, cap)
    return DensenessReport(min(kappa, 1.0), s, "exact", evaluated)


def ric_projector(P: BasisLike, s: int, cap: int = DEFAULT_SUBSET_CAP) -> float:
    """RIC of ``I - PP'`` at sparsity ``s``, via ``delta_s = kappa_s(P)^2``."""
    Pa = as_array(P)
    if Pa.shape[1] == 0:
        return 0.0
    return denseness_coeff(Pa, s, "exact", cap).kappa ** 2
