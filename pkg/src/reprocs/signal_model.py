"""Synthetic low-rank-plus-sparse streams with AR(1) coefficients.

The observed frame is ``M_t = L_t + S_t`` with ``L_t = P_(t) a_t``.  The
subspace grows by ``c`` fresh directions at each change time, the
coefficients follow ``a_t = b a_{t-1} + nu_t`` with bounded uniform
innovations, and ``S_t`` has ``s`` nonzeros whose support shifts cyclically.

Time is 0-based: frames ``0 .. t_train-1`` form the outlier-free training
window and ``t_train .. total_T-1`` are the evaluation frames.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .linalg import BasisMatrix, orthonormalize

_logger = logging.getLogger(__name__)

BURN_IN = 200


@dataclass(frozen=True)
class ModelConfig:
    """Generative description of a stream.

    Attributes
    ----------
    n : int
        Ambient dimension.
    r0 : int
        Rank of the initial subspace.
    c : int
        Number of directions added at each change.
    J : int
        Number of subspace changes.
    t_change : tuple of int
        Change times, strictly increasing, in ``[t_train, total_T)``.
    t_train, total_T : int
        Training length and total stream length.
    b : float
        AR(1) coefficient in ``[0, 1)``.
    gamma_star : float
        Bound on coefficient magnitudes; innovations satisfy
        ``|nu| <= (1 - b) * gamma_star``.
    gamma_new : float
        Initial amplitude of newly added directions.
    v : float
        Per-interval growth factor of the new-direction amplitude.
    lambda_minus, lambda_plus : float
        Range of stationary variances of the existing coordinates.
    s : int
        Number of outliers per evaluation frame.
    S_min, S_max : float
        Outlier magnitude range.
    support_dwell : int
        Frames between unit shifts of the outlier support.
    gamma_interval : int
        Frames per amplitude step of the new directions.
    seed : int
    """

    n: int = 200
    r0: int = 12
    c: int = 2
    J: int = 2
    t_change: tuple[int, ...] = (100, 400)
    t_train: int = 40
    total_T: int = 700
    b: float = 0.5
    gamma_star: float = 5.0
    gamma_new: float = 0.3
    v: float = 1.1
    lambda_minus: float = 1.0
    lambda_plus: float = 2.5
    s: int = 7
    S_min: float = 2.0
    S_max: float = 3.0
    support_dwell: int = 50
    gamma_interval: int = 60
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "t_change", tuple(int(t) for t in self.t_change))
        validate_config(self)

    def replace(self, **changes) -> "ModelConfig":
        d = asdict(self)
        d.update(changes)
        return ModelConfig(**d)

    def innovation_halfwidths(self) -> np.ndarray:
        """Half-widths of the uniform innovations for the ``r0`` initial coordinates.

        The stationary variances are spread linearly from ``lambda_plus`` down
        to ``lambda_minus``; a uniform variable on ``[-h, h]`` has variance
        ``h^2 / 3``, and the AR recursion scales the innovation variance by
        ``1 / (1 - b^2)``.
        """
        lam = np.linspace(self.lambda_plus, self.lambda_minus, self.r0)
        return np.sqrt(3.0 * (1.0 - self.b**2) * lam)


def validate_config(cfg: ModelConfig) -> None:
    """Raise ``ValueError`` with a readable message if ``cfg`` is inconsistent."""
    errs = []
    if cfg.n < 1:
        errs.append("n must be positive")
    if cfg.r0 < 0 or cfg.c < 0 or cfg.J < 0:
        errs.append("r0, c and J must be non-negative")
    if cfg.r0 + cfg.J * cfg.c > cfg.n:
        errs.append(f"r0 + J*c = {cfg.r0 + cfg.J * cfg.c} exceeds n = {cfg.n}")
    if len(cfg.t_change) != cfg.J:
        errs.append(f"t_change has {len(cfg.t_change)} entries but J = {cfg.J}")
    if any(b <= a for a, b in zip(cfg.t_change, cfg.t_change[1:])):
        errs.append("t_change must be strictly increasing")
    if cfg.t_change and (cfg.t_change[0] < cfg.t_train or cfg.t_change[-1] >= cfg.total_T):
        errs.append("change times must lie in [t_train, total_T)")
    if not 0 <= cfg.t_train <= cfg.total_T:
        errs.append("need 0 <= t_train <= total_T")
    if not 0.0 <= cfg.b < 1.0:
        errs.append("b must lie in [0, 1)")
    if not 0.0 < cfg.lambda_minus <= cfg.lambda_plus:
        errs.append("need 0 < lambda_minus <= lambda_plus")
    if not 0.0 < cfg.S_min <= cfg.S_max:
        errs.append("need 0 < S_min <= S_max")
    if cfg.v <= 1.0:
        errs.append("v must exceed 1")
    if not 0 <= cfg.s <= cfg.n:
        errs.append("s must lie in [0, n]")
    if cfg.support_dwell < 1 or cfg.gamma_interval < 1:
        errs.append("support_dwell and gamma_interval must be positive")
    if cfg.gamma_new < 0 or cfg.gamma_star <= 0:
        errs.append("need gamma_new >= 0 and gamma_star > 0")
    if not errs and cfg.r0 > 0:
        h = cfg.innovation_halfwidths()
        if h.max() > (1.0 - cfg.b) * cfg.gamma_star * (1 + 1e-12):
            errs.append(
                f"lambda_plus = {cfg.lambda_plus} needs innovations of half-width {h.max():.4g}, "
                f"above the bound (1-b)*gamma_star = {(1 - cfg.b) * cfg.gamma_star:.4g}"
            )
    if errs:
        raise ValueError("invalid ModelConfig: " + "; ".join(errs))


def gamma_new_k(k: int, v: float, gamma_new: float, gamma_star: float) -> float:
    """Amplitude of new directions during the ``k``-th interval after a change."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return min(v ** (k - 1) * gamma_new, gamma_star)


@dataclass
class GroundTruth:
    """Realized stream and its hidden components.

    Attributes
    ----------
    config : ModelConfig
    P : list of BasisMatrix
        ``P[j]`` is the subspace in force on ``[t_j, t_{j+1})``; each extends
        the previous one by ``c`` orthogonal columns.
    a : ndarray, shape (r0 + J*c, total_T)
        Coefficients; rows of directions not yet added are zero.
    L, S, M : ndarray, shape (n, total_T)
    supports : list of ndarray
        Sorted outlier support of each frame (empty during training).
    """

    config: ModelConfig
    P: list[BasisMatrix]
    a: np.ndarray
    L: np.ndarray
    S: np.ndarray
    M: np.ndarray
    supports: list[np.ndarray] = field(repr=False)

    def phase(self, t: int) -> int:
        """Index ``j`` of the subspace in force at time ``t``."""
        return int(np.searchsorted(self.config.t_change, t, side="right"))

    def basis_at(self, t: int) -> BasisMatrix:
        return self.P[self.phase(t)]

    def rank_at(self, t: int) -> int:
        return self.basis_at(t).r


def support_at(cfg: ModelConfig, base: np.ndarray, t: int) -> np.ndarray:
    """Outlier support at time ``t`` given the initial support ``base``."""
    if t < cfg.t_train or cfg.s == 0:
        return np.zeros(0, dtype=np.intp)
    shift = (t - cfg.t_train) // cfg.support_dwell
    return np.sort((base + shift) % cfg.n)


def gen_model(config: ModelConfig) -> GroundTruth:
    """Draw a stream from ``config`` (deterministic given ``config.seed``)."""
    validate_config(config)
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    n, T = cfg.n, cfg.total_T
    r_max = cfg.r0 + cfg.J * cfg.c

    bases = [orthonormalize(rng.standard_normal((n, cfg.r0))) if cfg.r0 else BasisMatrix.empty(n)]
    for _ in range(cfg.J):
        prev = bases[-1]
        G = prev.project_out(rng.standard_normal((n, cfg.c)))
        new = orthonormalize(prev.project_out(G))
        if new.r != cfg.c:
            raise ValueError("failed to draw new directions of full rank")
        bases.append(prev.hstack(new))

    base_support = rng.choice(n, size=cfg.s, replace=False) if cfg.s else np.zeros(0, np.intp)

    half = np.zeros(r_max)
    half[: cfg.r0] = cfg.innovation_halfwidths() if cfg.r0 else 0.0
    a_prev = np.zeros(r_max)
    for _ in range(BURN_IN):
        a_prev[: cfg.r0] = cfg.b * a_prev[: cfg.r0] + rng.uniform(-1.0, 1.0, cfg.r0) * half[: cfg.r0]

    A = np.zeros((r_max, T))
    L = np.zeros((n, T))
    S = np.zeros((n, T))
    supports = []
    starts = list(cfg.t_change)
    for t in range(T):
        j = int(np.searchsorted(starts, t, side="right"))
        r_t = cfg.r0 + j * cfg.c
        width = half.copy()
        for jj in range(j):
            k = (t - starts[jj]) // cfg.gamma_interval + 1
            amp = (1.0 - cfg.b) * gamma_new_k(k, cfg.v, cfg.gamma_new, cfg.gamma_star)
            lo = cfg.r0 + jj * cfg.c
            width[lo : lo + cfg.c] = amp
        nu = rng.uniform(-1.0, 1.0, r_max) * width
        a_t = cfg.b * a_prev + nu
        a_t[r_t:] = 0.0
        A[:, t] = a_t
        a_prev = a_t
        L[:, t] = bases[j].data @ a_t[:r_t] if r_t else 0.0

        supp = support_at(cfg, base_support, t)
        supports.append(supp)
        if supp.size:
            mags = rng.uniform(cfg.S_min, cfg.S_max, supp.size)
            signs = rng.choice(np.array([-1.0, 1.0]), supp.size)
            S[supp, t] = mags * signs

    M = L + S
    return GroundTruth(cfg, bases, A, L, S, M, supports)


def dump_stream(truth: GroundTruth, out: str | Path) -> list[Path]:
    """Write a replayable text dump of a stream.

    ``out`` receives the observations, one frame per row: ``t`` followed by
    the ``n`` entries of ``M_t``.  Side files ``<stem>.L.csv`` and
    ``<stem>.S.csv`` use the same layout for ``L_t`` and ``S_t``, and
    ``<stem>.supports.csv`` lists ``t`` followed by the sorted support.
    Values are written with 17 significant digits so a reload is bit-exact.

    Returns
    -------
    list of Path
        The files written, observations first.
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("") if out.suffix == ".csv" else out
    paths = [out, Path(f"{stem}.L.csv"), Path(f"{stem}.S.csv"), Path(f"{stem}.supports.csv")]
    n, T = truth.M.shape
    header = "t," + ",".join(f"x{i}" for i in range(n))
    ts = np.arange(T, dtype=float).reshape(-1, 1)
    try:
        for path, mat in zip(paths[:3], (truth.M, truth.L, truth.S)):
            np.savetxt(path, np.hstack([ts, mat.T]), delimiter=",", header=header,
                       comments="", fmt=["%d"] + ["%.17g"] * n)
        with open(paths[3], "w") as fh:
            fh.write("t,support\n")
            for t, supp in enumerate(truth.supports):
                fh.write(f"{t}," + " ".join(str(int(i)) for i in supp) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write stream dump to {out}: {exc}") from exc
    return paths


def load_stream(path: str | Path) -> np.ndarray:
    """Read a dump written by :func:`dump_stream`; returns the ``n x T`` matrix."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return np.ascontiguousarray(data[:, 1:].T)


def stationary_check(truth: GroundTruth, start: int, stop: int) -> np.ndarray:
    """Eigenvalues of the sample covariance of ``a_t`` over ``[start, stop)``."""
    r = truth.rank_at(start)
    block = truth.a[:r, start:stop]
    C = block @ block.T / block.shape[1]
    return np.sort(np.linalg.eigvalsh(C))[::-1]


__all__ = [
    "GroundTruth",
    "ModelConfig",
    "dump_stream",
    "gamma_new_k",
    "gen_model",
    "load_stream",
    "stationary_check",
    "support_at",
    "validate_config",
]
