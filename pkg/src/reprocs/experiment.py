"""Monte-Carlo experiments: configuration, per-frame metrics and output.

A run draws one stream per trial (seed ``base_seed + trial``), runs
ReProCS over the evaluation frames, records per-frame errors, and solves
batch PCP on the observed prefix ``M[:, :tau]`` at each checkpoint ``tau``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import bounds
from .algorithm import ReprocsParams, init, process_frame
from .linalg import subspace_error
from .pcp import PcpConfig, solve_pcp
from .signal_model import GroundTruth, ModelConfig, gen_model
from .sparse_recovery import BpdnConfig

_logger = logging.getLogger(__name__)

CSV_FIELDS = ("trial", "t", "s_err_rel", "l_err", "se", "support_exact")
# below this fraction of ||S_t|| the realized error is at round-off level
IDENTITY_FLOOR = 1e-6


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run.

    Attributes
    ----------
    model : ModelConfig
        ``model.seed`` is the base seed; trial ``i`` uses ``seed + i``.
    algo : ReprocsParams
    trials : int
    pcp_checkpoints : tuple of int
        Prefix lengths ``tau`` at which batch PCP is solved.
    output_path : str or None
    output_format : {"csv", "json"}
    pcp : PcpConfig
    """

    model: ModelConfig
    algo: ReprocsParams
    trials: int = 1
    pcp_checkpoints: tuple[int, ...] = ()
    output_path: str | None = None
    output_format: str = "csv"
    pcp: PcpConfig = field(default_factory=PcpConfig)

    def __post_init__(self):
        object.__setattr__(self, "pcp_checkpoints", tuple(int(t) for t in self.pcp_checkpoints))
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        for tau in self.pcp_checkpoints:
            if not 1 <= tau <= self.model.total_T:
                raise ConfigError(f"PCP checkpoint {tau} outside [1, {self.model.total_T}]")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("output_format must be 'csv' or 'json'")
        if tuple(self.algo.t_change) != tuple(self.model.t_change):
            warnings.warn("algorithm change times differ from the model's", RuntimeWarning, stacklevel=2)


@dataclass
class FrameRecord:
    """Metrics of one frame of one trial.

    ``identity_rel`` compares the realized sparse error with the closed form for
    an exactly recovered support (NaN when the support was not exact).
    """

    trial: int
    t: int
    s_err_rel: float
    l_err: float
    se: float
    support_exact: bool
    identity_rel: float = math.nan
    identity_floor_hit: bool = False
    bpdn_converged: bool = True


@dataclass
class UpdateRecord:
    """Error of the new-direction estimate right after a projection-PCA step."""

    trial: int
    t: int
    j: int
    k: int
    zeta: float


@dataclass
class PcpRecord:
    trial: int
    tau: int
    s_err_rel_last: float
    s_err_rel_mean: float
    l_err_last: float
    converged: bool


@dataclass
class RunResult:
    """Output of :func:`run_experiment`."""

    config: ExperimentConfig
    records: list[FrameRecord]
    updates: list[UpdateRecord]
    pcp: list[PcpRecord]
    trials_ok: list[int]
    failed_trials: list[int]

    def metric(self, name: str) -> np.ndarray:
        """``(trials_ok, frames)`` array of a per-frame metric."""
        T = self.config.model.total_T - self.config.model.t_train
        vals = np.array([getattr(r, name) for r in self.records], dtype=float)
        return vals.reshape(len(self.trials_ok), T)

    @property
    def times(self) -> np.ndarray:
        m = self.config.model
        return np.arange(m.t_train, m.total_T)

    def aggregate(self) -> dict[str, Any]:
        """Means across successful trials, per frame and overall."""
        out: dict[str, Any] = {
            "trials": self.config.trials,
            "trials_ok": len(self.trials_ok),
            "failed_trials": list(self.failed_trials),
            "frames_per_trial": int(self.times.size),
        }
        if self.records:
            out["t"] = [int(t) for t in self.times]
            for name in ("s_err_rel", "l_err", "se", "support_exact"):
                out["mean_" + name] = [float(v) for v in self.metric(name).mean(axis=0)]
            out["support_exact_rate"] = float(self.metric("support_exact").mean())
        else:
            out["t"] = []
            out["support_exact_rate"] = math.nan if self.config.model.total_T > self.config.model.t_train else 1.0
        taus = sorted({p.tau for p in self.pcp})
        out["pcp"] = [
            {
                "tau": tau,
                "mean_s_err_rel_last": float(np.mean([p.s_err_rel_last for p in self.pcp if p.tau == tau])),
                "mean_s_err_rel": float(np.mean([p.s_err_rel_mean for p in self.pcp if p.tau == tau])),
            }
            for tau in taus
        ]
        return out


def auto_params(model: ModelConfig, alpha: int, K: int, zeta: float | None = None,
                bpdn: BpdnConfig | None = None, b_diff: float | None = None) -> ReprocsParams:
    """Parameters from the theory formulas.

    ``xi = xi0(zeta)`` with ``zeta`` defaulting to the accuracy cap, and
    ``omega`` at the midpoint of ``[7 xi, S_min - 7 xi]``.  When that window
    is empty (typical at small scale) ``omega = S_min / 2`` is used and a
    warning is issued.
    """
    r = max(model.r0 + (model.J - 1) * model.c, 1)
    f = model.lambda_plus / model.lambda_minus
    if zeta is None:
        zeta = bounds.zeta_cap(r, f, model.gamma_star)
    xi = bounds.xi0(model.c, r, zeta, model.gamma_new)
    lo, hi = 7.0 * xi, model.S_min - 7.0 * xi
    if lo <= hi:
        omega = 0.5 * (lo + hi)
    else:
        omega = model.S_min / 2.0
        warnings.warn(
            f"threshold window [7 xi, S_min - 7 xi] = [{lo:.3g}, {hi:.3g}] is empty; "
            f"using omega = S_min/2 = {omega:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return ReprocsParams(
        xi=xi, omega=omega, alpha=alpha, K=K, t_change=model.t_change, r0=model.r0, c=model.c,
        bpdn=bpdn or BpdnConfig(), b_diff=b_diff,
    )


def _error_closed_form(phi, T: np.ndarray, L_t: np.ndarray) -> np.ndarray:
    """``I_T (Phi_T)^+ Phi L_t`` through a dense least-squares solve."""
    out = np.zeros(phi.n)
    if T.size:
        cols = phi.columns(T)
        out[T] = np.linalg.lstsq(cols, phi.apply(L_t), rcond=None)[0]
    return out


def _new_direction_error(truth: GroundTruth, state, j: int) -> float:
    """``||(I - P_hat P_hat') P_j,new||_2`` for the estimate held in ``state``."""
    cfg = truth.config
    lo = cfg.r0 + (j - 1) * cfg.c
    P_new = truth.P[j].data[:, lo : lo + cfg.c]
    return subspace_error(state.P_hat, P_new)


def run_trial(cfg: ExperimentConfig, trial: int) -> tuple[list[FrameRecord], list[UpdateRecord], list[PcpRecord]]:
    """One trial: generate, run ReProCS, score, and solve PCP at checkpoints."""
    model = cfg.model.replace(seed=cfg.model.seed + trial)
    truth = gen_model(model)
    params = cfg.algo
    frames: list[FrameRecord] = []
    updates: list[UpdateRecord] = []

    state = init(truth.M[:, : model.t_train], params.r0)
    for t in range(model.t_train, model.total_T):
        S_t = truth.S[:, t]
        L_t = truth.L[:, t]
        est, new_state = process_frame(state, truth.M[:, t], t, params)

        s_norm = float(np.linalg.norm(S_t))
        err = est.S_hat - S_t
        e_norm = float(np.linalg.norm(err))
        supp_ok = np.array_equal(est.T_hat, truth.supports[t])
        rec = FrameRecord(
            trial=trial,
            t=t,
            s_err_rel=e_norm / s_norm if s_norm > 0 else e_norm,
            l_err=float(np.linalg.norm(est.L_hat - L_t)),
            se=subspace_error(state.P_hat, truth.basis_at(t)),
            support_exact=bool(supp_ok),
            bpdn_converged=est.converged,
        )
        if supp_ok and not est.ls_fallback:
            closed = _error_closed_form(state.operator(), est.T_hat, L_t)
            c_norm = float(np.linalg.norm(closed))
            floor = IDENTITY_FLOOR * s_norm
            rec.identity_floor_hit = c_norm < floor
            denom = max(c_norm, floor, np.finfo(float).tiny)
            rec.identity_rel = float(np.linalg.norm(err - closed)) / denom
        frames.append(rec)

        if est.updated:
            j, k = state.j, state.k
            updates.append(UpdateRecord(trial, t, j, k, _new_direction_error(truth, new_state, j)))
        state = new_state

    pcp_recs = [_pcp_checkpoint(cfg, truth, trial, tau) for tau in cfg.pcp_checkpoints]
    return frames, updates, pcp_recs


def _pcp_checkpoint(cfg: ExperimentConfig, truth: GroundTruth, trial: int, tau: int) -> PcpRecord:
    """Solve PCP on the observed prefix ``M[:, :tau]`` and score its sparse part."""
    sol = solve_pcp(truth.M[:, :tau], None, cfg.pcp)
    lo = min(truth.config.t_train, tau - 1)
    S_true = truth.S[:, lo:tau]
    norms = np.linalg.norm(S_true, axis=0)
    errs = np.linalg.norm(sol.S[:, lo:tau] - S_true, axis=0)
    rel = np.where(norms > 0, errs / np.where(norms > 0, norms, 1.0), errs)
    return PcpRecord(
        trial=trial,
        tau=tau,
        s_err_rel_last=float(rel[-1]),
        s_err_rel_mean=float(rel.mean()),
        l_err_last=float(np.linalg.norm(sol.L[:, tau - 1] - truth.L[:, tau - 1])),
        converged=sol.converged,
    )


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Run all trials; a trial that raises is logged and excluded."""
    records: list[FrameRecord] = []
    updates: list[UpdateRecord] = []
    pcp: list[PcpRecord] = []
    ok: list[int] = []
    failed: list[int] = []
    for trial in range(config.trials):
        try:
            fr, up, pc = run_trial(config, trial)
        except Exception:  # noqa: BLE001 - any failure excludes the trial
            _logger.exception("trial %d failed; excluded from aggregation", trial)
            failed.append(trial)
            continue
        records.extend(fr)
        updates.extend(up)
        pcp.extend(pc)
        ok.append(trial)
        _logger.info("trial %d done", trial)
    if failed:
        _logger.warning("%d of %d trials failed", len(failed), config.trials)
    return RunResult(config, records, updates, pcp, ok, failed)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def records_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in result.records:
        w.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def records_json(result: RunResult) -> str:
    doc = {
        "records": [
            {f: (bool(getattr(r, f)) if f == "support_exact" else getattr(r, f)) for f in CSV_FIELDS}
            for r in result.records
        ],
        "aggregate": result.aggregate(),
    }
    return json.dumps(doc, indent=1, allow_nan=True) + "\n"


def write_records(result: RunResult, path: str | Path, fmt: str = "csv") -> Path:
    """Serialize per-frame records.

    CSV has the header ``trial,t,s_err_rel,l_err,se,support_exact`` with
    floats written as their shortest round-trip repr and the flag as 0/1.
    JSON is an object with a ``records`` array and an ``aggregate`` object.
    Output depends only on ``result``, so identical results give identical
    bytes.
    """
    path = Path(path)
    if fmt == "csv":
        text = records_csv(result)
    elif fmt == "json":
        text = records_json(result)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc
    return path


def _build(cls, data: dict, what: str):
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown {what} keys: {sorted(extra)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def config_from_dict(doc: dict, trials: int | None = None, seed: int | None = None,
                     fmt: str | None = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from the documented JSON layout.

    ``algo.xi`` and ``algo.omega`` may be ``"auto"`` (or omitted), in which
    case they come from :func:`auto_params`.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    model_doc = dict(doc.get("model", {}))
    if seed is not None:
        model_doc["seed"] = seed
    model = _build(ModelConfig, model_doc, "model")

    algo_doc = dict(doc.get("algo", {}))
    bpdn = _build(BpdnConfig, dict(algo_doc.pop("bpdn", {})), "algo.bpdn")
    try:
        alpha = int(algo_doc.pop("alpha"))
        K = int(algo_doc.pop("K"))
    except KeyError as exc:
        raise ConfigError(f"algo.{exc.args[0]} is required") from exc
    xi = algo_doc.pop("xi", "auto")
    omega = algo_doc.pop("omega", "auto")
    zeta = algo_doc.pop("zeta", None)
    b_diff = algo_doc.pop("b_diff", None)
    if algo_doc:
        raise ConfigError(f"unknown algo keys: {sorted(algo_doc)}")
    try:
        if "auto" in (xi, omega):
            auto = auto_params(model, alpha, K, zeta, bpdn, b_diff)
            xi = auto.xi if xi == "auto" else xi
            omega = auto.omega if omega == "auto" else omega
        params = ReprocsParams(
            xi=float(xi),
            omega=float(omega),
            alpha=alpha, K=K, t_change=model.t_change, r0=model.r0, c=model.c,
            bpdn=bpdn, b_diff=b_diff,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid algo: {exc}") from exc

    pcp_cfg = _build(PcpConfig, dict(doc.get("pcp", {})), "pcp")
    extra = set(doc) - {"model", "algo", "pcp", "trials", "pcp_checkpoints", "output_path", "output_format"}
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    try:
        return ExperimentConfig(
            model=model,
            algo=params,
            trials=int(trials if trials is not None else doc.get("trials", 1)),
            pcp_checkpoints=tuple(doc.get("pcp_checkpoints", ())),
            output_path=doc.get("output_path"),
            output_format=fmt or doc.get("output_format", "csv"),
            pcp=pcp_cfg,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read a JSON experiment config from ``path``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc, **overrides)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Inverse of :func:`config_from_dict` with explicit ``xi`` and ``omega``."""
    model = asdict(cfg.model)
    model["t_change"] = list(model["t_change"])
    a = cfg.algo
    return {
        "model": model,
        "algo": {"xi": a.xi, "omega": a.omega, "alpha": a.alpha, "K": a.K,
                 "b_diff": a.b_diff, "bpdn": asdict(a.bpdn)},
        "pcp": asdict(cfg.pcp),
        "trials": cfg.trials,
        "pcp_checkpoints": list(cfg.pcp_checkpoints),
        "output_path": cfg.output_path,
        "output_format": cfg.output_format,
    }


__all__ = [
    "CSV_FIELDS",
    "ConfigError",
    "ExperimentConfig",
    "FrameRecord",
    "PcpRecord",
    "RunResult",
    "UpdateRecord",
    "auto_params",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "records_csv",
    "records_json",
    "run_experiment",
    "run_trial",
    "write_records",
]
