"""Calculators for the guarantee quantities of ReProCS.

These are deterministic formulas: the number of projection-PCA steps
``K(zeta)``, the CS residual bound ``xi_0``, the interval length
``alpha_add``, the recursion for the subspace-error envelope ``zeta_k^+``,
RIC bounds for the projected operator, and the plug-in constant checks that
follow from the accuracy cap on ``zeta``.

Normalization used by the envelope recursion
--------------------------------------------
Eigenvalue bounds enter the recursion only through ratios, so everything is
expressed in units of the smallest new-direction variance:
``lambda_new,k^- = lambda^- = 1``, ``lambda_new,k^+ = g`` and
``lambda^+ = f``.  Products involving ``lambda^+`` are then carried by the
arguments ``zeta_star_f`` (for ``zeta_* f``) and ``zeta_star_rf`` (an upper
bound on ``zeta_* sqrt(r/c) f`` and ``zeta_* (r/c) f``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal, localcontext

_logger = logging.getLogger(__name__)


def k_of_zeta(c: int, zeta: float) -> int:
    """Number of projection-PCA steps, ``ceil(log(0.85 c zeta) / log 0.6)``.

    Quotients within 1e-9 of an integer are treated as that integer so that
    exact powers of 0.6 are not pushed up by rounding.
    """
    x = 0.85 * c * zeta
    if not 0.0 < x < 1.0:
        raise ValueError(f"0.85*c*zeta = {x:.6g} must lie in (0, 1)")
    q = math.log(x) / math.log(0.6)
    nearest = round(q)
    K = nearest if abs(q - nearest) < 1e-9 else math.ceil(q)
    return max(int(K), 1)


def xi0(c: float, r: float, zeta: float, gamma_new: float) -> float:
    """CS residual bound ``sqrt(c) gamma_new + sqrt(zeta) (sqrt(r) + sqrt(c))``."""
    if min(c, r, zeta, gamma_new) < 0:
        raise ValueError("xi0 inputs must be non-negative")
    return math.sqrt(c) * gamma_new + math.sqrt(zeta) * (math.sqrt(r) + math.sqrt(c))


def alpha_add(
    K: int,
    J: int,
    n: int,
    zeta: float,
    lambda_minus: float,
    gamma_new: float,
    gamma_star: float,
) -> int:
    """Interval length sufficient for the high-probability argument.

    ``ceil((ln(61 K J) + 11 ln n) * 8 * 192^2 * min(1.2^(4K) gamma_new^4,
    gamma_star^4) / (zeta^2 lambda_minus^2))``.  The values are large (often
    above 1e15), so the arithmetic is done in 60-digit decimal with float
    inputs read through their shortest repr.
    """
    if min(K, J, n) < 1 or min(zeta, lambda_minus, gamma_new, gamma_star) <= 0:
        raise ValueError("alpha_add inputs must be positive")
    with localcontext() as ctx:
        ctx.prec = 60
        D = lambda v: Decimal(repr(v)) if isinstance(v, float) else Decimal(v)  # noqa: E731
        logs = D(61 * K * J).ln() + 11 * D(n).ln()
        amp = min(D(1.2) ** (4 * K) * D(gamma_new) ** 4, D(gamma_star) ** 4)
        val = logs * 8 * 192**2 * amp / (D(zeta) ** 2 * D(lambda_minus) ** 2)
        return int(val.to_integral_value(rounding="ROUND_CEILING"))


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the envelope recursion and RIC bounds.

    Defaults are the worst-case plug-ins under the main guarantee's
    conditions.  ``alpha = inf`` selects the infinite-interval limit of the
    AR(1) correction terms.
    """

    b: float = 0.4
    c_zeta: float = 1e-4
    zeta_star: float = 1e-4
    zeta_star_f: float = 1.5e-4
    zeta_star_rf: float = 1.5e-4
    kappa_s: float = 0.15
    kappa_2s_star: float = 0.3
    kappa_2s_new: float = 0.15
    kappa_tilde_2s: float = 0.15
    phi: float = 1.1735
    phi0: float = 1.1111
    eta: float = 1.7
    g: float = math.sqrt(2.0)
    alpha: float = math.inf

    def __post_init__(self):
        if not 0.0 <= self.b < 1.0:
            raise ValueError("b must lie in [0, 1)")
        if self.c_zeta < 0 or self.zeta_star < 0 or self.eta <= 0:
            raise ValueError("c_zeta, zeta_star must be >= 0 and eta > 0")
        if self.g < 1.0:
            raise ValueError("g must be at least 1")
        for name in ("kappa_s", "kappa_2s_star", "kappa_2s_new", "kappa_tilde_2s"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.alpha < 1:
            raise ValueError("alpha must be at least 1")

    @classmethod
    def from_model(
        cls,
        r: int,
        c: int,
        zeta: float,
        f: float,
        g: float,
        b: float,
        eta: float,
        **overrides,
    ) -> "BoundParams":
        """Plug-ins computed from model quantities with ``zeta_* = r zeta``."""
        zs = r * zeta
        return cls(
            b=b,
            c_zeta=c * zeta,
            zeta_star=zs,
            zeta_star_f=zs * f,
            zeta_star_rf=zs * r * f,
            eta=eta,
            g=g,
            **overrides,
        )

    def replace(self, **changes) -> "BoundParams":
        d = asdict(self)
        d.update(changes)
        return BoundParams(**d)


def eta_from_model(c: int, gamma_star: float, lambda_plus: float, gamma_new_K: float,
                   lambda_new_minus: float) -> float:
    """Amplitude-to-variance ratio ``max(c gamma*^2 / lambda^+, c gamma_new,K^2 / lambda_new^-)``."""
    return max(c * gamma_star**2 / lambda_plus, c * gamma_new_K**2 / lambda_new_minus)


def _ar_factors(b: float, alpha: float) -> tuple[float, float]:
    """``b^2 (1 - b^(2 alpha)) / (1 - b^2)`` and the same divided by 100."""
    tail = 0.0 if math.isinf(alpha) else b ** (2 * alpha)
    B = b * b * (1.0 - tail) / (1.0 - b * b)
    return B, B / 100.0


@dataclass(frozen=True)
class StepTerms:
    """The three bounding terms and the resulting ``zeta_k^+`` for one step."""

    b_A: float
    b_A_perp: float
    b_H: float
    zeta: float


def f_inc(zeta_prev: float, p: BoundParams, first: bool = False, phi: float | None = None) -> StepTerms:
    """One step of the envelope recursion.

    ``zeta_k^+ = (b_H + 0.125 c zeta) / (b_A - b_A_perp - b_H - 0.25 c zeta)``
    in the normalized units described in the module docstring.

    Parameters
    ----------
    zeta_prev : float
        ``zeta_{k-1}^+``.
    p : BoundParams
    first : bool
        Use the variant of ``b_H`` for the first step, whose last
        new-direction term carries no AR(1) inflation and which has no
        squared AR(1) new-direction term.
    phi : float, optional
        RIC-derived factor; defaults to ``p.phi0`` when ``first`` else ``p.phi``.

    Raises
    ------
    ValueError
        If the denominator is not positive.
    """
    ph = (p.phi0 if first else p.phi) if phi is None else phi
    z, zf, zrf, k, x = p.zeta_star, p.zeta_star_f, p.zeta_star_rf, p.kappa_s, zeta_prev
    g = p.g
    B, B100 = _ar_factors(p.b, p.alpha)
    Be = B * p.eta
    sq = math.sqrt(1.0 - z * z)

    b_A = (1.0 - z * z) * (1.0 - B100) - 2.0 * Be * zrf
    b_A_perp = z * zf + 2.0 * Be * z * zrf

    new_scale = 1.0 if first else 1.0 + Be
    terms = [
        ph**2 * z * zf,
        ph**2 * (k * x) ** 2 * g,
        2.0 * Be * zrf * x * k * ph**2,
        Be * z * zrf * ph**2,
        0.0 if first else Be * g * (ph * k * x) ** 2,
        2.0 * ph * k * z * (zf + Be * zrf) / sq,
        2.0 * ph * max(0.15 * p.c_zeta, x) * k * k / sq * g * (1.0 + Be),
        4.0 * Be * zrf * ph * k / sq,
        (1.0 + ph) * (1.0 + ph * k / sq) * z * zf * (1.0 + Be),
        x * ph * k * (1.0 + ph * x * k * k / sq) * g * new_scale,
        Be * zrf * ((1.0 + ph) * (1.0 + k * k * x * ph / sq) + ph * k * x * (1.0 + ph * k / sq)),
    ]
    b_H = math.fsum(terms)
    den = b_A - b_A_perp - b_H - 0.25 * p.c_zeta
    if den <= 0.0:
        raise ValueError(
            f"recursion denominator {den:.6g} is not positive (zeta_prev = {zeta_prev:.6g})"
        )
    return StepTerms(b_A, b_A_perp, b_H, (b_H + 0.125 * p.c_zeta) / den)


@dataclass(frozen=True)
class ZetaSequence:
    """``zeta_0^+ .. zeta_K^+`` with the per-step bounding terms (index 0 unused)."""

    values: list[float]
    b_Ak: list[float] = field(default_factory=list)
    b_Ak_perp: list[float] = field(default_factory=list)
    b_H: list[float] = field(default_factory=list)
    envelope_ok: bool = True

    def envelope(self, c_zeta: float) -> list[float]:
        return [0.6**k + 0.15 * c_zeta for k in range(len(self.values))]


def zeta_plus_seq(p: BoundParams, K: int) -> ZetaSequence:
    """Run the envelope recursion for ``K`` steps starting from ``zeta_0^+ = 1``."""
    if K < 0:
        raise ValueError("K must be non-negative")
    vals = [1.0]
    bA, bAp, bH = [math.nan], [math.nan], [math.nan]
    for k in range(1, K + 1):
        st = f_inc(vals[-1], p, first=(k == 1))
        vals.append(st.zeta)
        bA.append(st.b_A)
        bAp.append(st.b_A_perp)
        bH.append(st.b_H)
    ok = all(v <= 0.6**k + 0.15 * p.c_zeta for k, v in enumerate(vals))
    if not ok:
        _logger.info("envelope 0.6^k + 0.15 c zeta violated: %s", vals[: min(len(vals), 5)])
    return ZetaSequence(vals, bA, bAp, bH, ok)


@dataclass(frozen=True)
class RicPhiBounds:
    delta2s_phi0_bound: float
    delta2s_phik_bound: float
    phi_bound: float


def ric_phi_bounds(p: BoundParams, zeta_star_plus: float, zeta_km1_plus: float) -> RicPhiBounds:
    """RIC bounds for the projected operators and the implied ``phi`` bound.

    ``delta_2s(Phi_0) <= kappa_2s,*^2 + 2 zeta_*``;
    ``delta_2s(Phi_{k-1}) <=`` that plus
    ``(kappa_2s,new + kappa~_2s zeta_{k-1} + zeta_*)^2``;
    ``phi <= 1 / (1 - delta_2s(Phi_{k-1}))``.
    """
    d0 = p.kappa_2s_star**2 + 2.0 * zeta_star_plus
    dk = d0 + (p.kappa_2s_new + p.kappa_tilde_2s * zeta_km1_plus + zeta_star_plus) ** 2
    if d0 >= 1.0 or dk >= 1.0:
        raise ValueError(f"RIC bound vacuous (delta bounds {d0:.4g}, {dk:.4g})")
    return RicPhiBounds(d0, dk, 1.0 / (1.0 - dk))


def zeta_cap(r: int, f: float, gamma_star: float) -> float:
    """Largest ``zeta`` allowed: ``min(1e-4/r^2, 1.5e-4/(r^2 f), 1/(r^3 gamma*^2))``."""
    return min(1e-4 / r**2, 1.5e-4 / (r**2 * f), 1.0 / (r**3 * gamma_star**2))


@dataclass(frozen=True)
class FactItem:
    """One bound chain ``value <= bounds[0] <= bounds[1] ...``."""

    name: str
    value: float
    bounds: tuple[float, ...]
    holds: bool


def _chain(name: str, value: float, *bounds: float) -> FactItem:
    seq = (value,) + bounds
    ok = all(a <= b * (1 + 1e-12) + 1e-300 for a, b in zip(seq, seq[1:]))
    return FactItem(name, value, tuple(bounds), ok)


def fact_constants(
    r0: int,
    J: int,
    c: int,
    zeta: float,
    gamma_star: float,
    f: float,
    gamma_new: float = 1.0,
    k: int = 1,
    zeta_km1: float | None = None,
    v: float = 1.2,
) -> list[FactItem]:
    """Evaluate the eight plug-in bounds implied by the cap on ``zeta``.

    ``r = r0 + (J-1) c`` and ``zeta_* = r zeta``.  Items 6 to 8 concern
    step ``k``; ``zeta_km1`` defaults to the envelope ``0.6^(k-1) + 0.15 c zeta``
    and ``gamma_new,k = min(v^(k-1) gamma_new, gamma_star)``.

    Raises
    ------
    ValueError
        If ``zeta`` exceeds :func:`zeta_cap`.
    """
    r = r0 + (J - 1) * c
    if r < 1:
        raise ValueError("r0 + (J-1)c must be positive")
    cap = zeta_cap(r, f, gamma_star)
    if zeta > cap * (1 + 1e-12):
        raise ValueError(
            f"zeta = {zeta:.6g} exceeds the accuracy cap {cap:.6g} "
            "min(1e-4/r^2, 1.5e-4/(r^2 f), 1/(r^3 gamma*^2))"
        )
    zs = r * zeta
    sz = math.sqrt(zeta)
    czeta = c * zeta
    zk = 0.6 ** (k - 1) + 0.15 * czeta if zeta_km1 is None else zeta_km1
    g_k = min(v ** (k - 1) * gamma_new, gamma_star)
    return [
        _chain("zeta*gamma_star", zeta * gamma_star, sz / r**1.5, sz),
        _chain("zeta_star", zs, 1e-4 / r, 1e-4),
        _chain("zeta_star*gamma_star^2", zs * gamma_star**2, 1.0 / r**2, 1.0),
        _chain("zeta_star*gamma_star", zs * gamma_star, sz / math.sqrt(r), sz),
        _chain("zeta_star*f", zs * f, 1.5e-4 / r, 1.5e-4),
        _chain("zeta_{k-1}", zk, 0.6 ** (k - 1) + 0.15 * czeta),
        _chain(
            "zeta_{k-1}*gamma_new,k",
            zk * g_k,
            0.72 ** (k - 1) * gamma_new + 0.15 * czeta * gamma_star,
            0.72 ** (k - 1) * gamma_new + 0.15 * sz / math.sqrt(r),
            0.72 ** (k - 1) * gamma_new + 0.15 * sz,
        ),
        _chain(
            "zeta_{k-1}*gamma_new,k^2",
            zk * g_k**2,
            0.864 ** (k - 1) * gamma_new**2 + 0.15 * czeta * gamma_star**2,
            0.864 ** (k - 1) * gamma_new**2 + 0.15 / r**2,
            0.864 ** (k - 1) * gamma_new**2 + 0.15,
        ),
    ]


def bounds_report(
    r0: int,
    J: int,
    c: int,
    n: int,
    zeta: float,
    gamma_new: float,
    gamma_star: float,
    lambda_minus: float,
    f: float,
    K_max: int | None = None,
    p: BoundParams | None = None,
) -> dict:
    """Everything the ``bounds`` subcommand prints, as a JSON-ready dict."""
    r = r0 + (J - 1) * c
    K = k_of_zeta(c, zeta)
    p = p or BoundParams(c_zeta=c * zeta)
    report: dict = {
        "K": K,
        "xi0": xi0(c, r, zeta, gamma_new),
        "alpha_add": alpha_add(K, J, n, zeta, lambda_minus, gamma_new, gamma_star),
        "zeta_cap": zeta_cap(r, f, gamma_star),
    }
    try:
        seq = zeta_plus_seq(p, K_max if K_max is not None else K)
        report["zeta_plus"] = seq.values
        report["envelope_ok"] = seq.envelope_ok
    except ValueError as exc:
        report["zeta_plus_error"] = str(exc)
    try:
        report["fact_checks"] = [asdict(it) for it in fact_constants(r0, J, c, zeta, gamma_star, f, gamma_new)]
    except ValueError as exc:
        report["fact_checks_error"] = str(exc)
    return report


__all__ = [
    "BoundParams",
    "FactItem",
    "RicPhiBounds",
    "StepTerms",
    "ZetaSequence",
    "alpha_add",
    "bounds_report",
    "eta_from_model",
    "f_inc",
    "fact_constants",
    "k_of_zeta",
    "ric_phi_bounds",
    "xi0",
    "zeta_cap",
    "zeta_plus_seq",
]
