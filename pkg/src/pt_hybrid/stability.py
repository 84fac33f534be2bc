"""Lyapunov certificates, decay constants, and prescribed-time bound checks.

A certificate supplies one function V_q per mode together with monomial
sandwich constants (c1, c2), flow rates (c3 on stable modes, c5 on unstable
ones), an input gain c4 with channel tag Delta in {zero, one, mu_pow}, and a
reset factor chi.  From these and the switching parameters the module forms
the conditioning ratio r, the dilated decay rate lambda, and the bound
constants (kappa1, kappa2, kappa3) entering the prescribed-time estimate

    |x(t, j) - target| <= kappa1 * exp(-kappa2 (s + j)) * |x(0,0) - target|
                          + input term,          s = dilate(t),

whose mu_pow variant multiplies a squared-constant front factor by
min(exp(-kappa2 s), normalized_gain(s)^(-ell)) so the input's residual
effect is also suppressed at the terminal time.

Certificate verification is sample based: a failed sample is a definitive
counterexample, a pass is evidence only.  kappa3 carries the factor r^N0
from the flow analysis; the plain ISS lemma's variant omits it (see the
``kappa3_note`` metadata on the constants).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .blowup import BlowUpParams, dilate, normalized_gain
from .errors import DomainError, InvalidDwellError
from .hybrid import HybridArc, HybridSystemDef
from .switching import AatParams, AdtParams

__all__ = [
    "LyapunovCertificate",
    "TheoremConstants",
    "SampleSpec",
    "CheckReport",
    "conditioning_ratio",
    "min_dwell_time",
    "dwell_activation_margin",
    "decay_constants",
    "verify_certificate",
    "check_pt_bound",
]

KAPPA3_NOTE = "kappa3 includes the chatter factor r**N0 from the weighted flow analysis"


@dataclass
class LyapunovCertificate:
    """Per-mode Lyapunov data with the constants of the decrease conditions.

    V[q](x, tau) -> scalar; grad[q](x, tau) -> (dV/dx, dV/dtau).
    c1/c2 bound V between c1 |x - offset|^p and c2 |x - offset|^p; c3 is the
    stable-mode decay rate, c5 the unstable-mode growth rate, c4 the input
    gain through the channel Delta(mu) = {0, 1, mu^-ell}.  chi bounds the
    reset: V_q(R_o(x), tau - 1) <= chi V_o(x, tau).  chi <= 1 is required by
    the decay estimates; certificates may carry chi > 1 (a reset bound that
    permits expansion), flagged by ``reset_contractive``.
    """

    modes: tuple
    V: Mapping
    grad: Mapping
    c1: Mapping
    c2: Mapping
    c3: Mapping = field(default_factory=dict)
    c5: Mapping = field(default_factory=dict)
    c4: Mapping = field(default_factory=dict)
    p: float = 2.0
    chi: float = 1.0
    delta: str = "zero"  # "zero" | "one" | "mu_pow"
    ell: float = 0.0
    unstable: frozenset = frozenset()
    offset: np.ndarray = None

    def __post_init__(self):
        if self.p <= 0.0:
            raise DomainError("p must be positive")
        if self.chi <= 0.0:
            raise DomainError("chi must be positive")
        if self.delta not in ("zero", "one", "mu_pow"):
            raise DomainError(f"unknown input channel {self.delta!r}")
        if self.delta == "mu_pow" and self.ell <= 0.0:
            raise DomainError("mu_pow channel needs ell > 0")
        for q in self.modes:
            if self.c1[q] <= 0.0 or self.c2[q] <= 0.0:
                raise DomainError("sandwich constants must be positive")
        for q in self.stable_modes:
            if self.c3[q] <= 0.0:
                raise DomainError("stable-mode rates must be positive")
        for q in self.unstable:
            if self.c5[q] <= 0.0:
                raise DomainError("unstable-mode rates must be positive")
        if self.offset is None:
            raise DomainError("certificate needs the target offset")
        self.offset = np.asarray(self.offset, dtype=float)

    @property
    def stable_modes(self) -> tuple:
        return tuple(q for q in self.modes if q not in self.unstable)

    @property
    def reset_contractive(self) -> bool:
        return self.chi <= 1.0

    def distance(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.offset))


@dataclass(frozen=True)
class TheoremConstants:
    """Constants of the prescribed-time decay estimate."""

    r: float
    lam: float
    kappa1: float
    kappa2: float
    kappa3: float
    p: float
    kappa3_note: str = KAPPA3_NOTE

    def as_dict(self) -> dict:
        return {
            "r": self.r,
            "lambda": self.lam,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "kappa3": self.kappa3,
        }


def conditioning_ratio(cert: LyapunovCertificate) -> float:
    """r = max_q c2 / min_q c1 >= 1."""
    return max(cert.c2[q] for q in cert.modes) / min(cert.c1[q] for q in cert.modes)


def min_dwell_time(cert: LyapunovCertificate) -> float:
    """Dwell-time threshold ln(r) / min_q c3; zero when r = 1."""
    r = conditioning_ratio(cert)
    c3_min = min(cert.c3[q] for q in cert.stable_modes)
    return math.log(r) / c3_min


def dwell_activation_margin(cert: LyapunovCertificate, tau_d: float, tau_a: float) -> tuple:
    """Mixed stable/unstable admissibility check.

    Evaluates 1 > ln(r)/(c3_min tau_d) + (1 + c5_max/c3_min)/tau_a and
    returns (holds, margin) with margin = 1 - right-hand side.
    """
    r = conditioning_ratio(cert)
    c3_min = min(cert.c3[q] for q in cert.stable_modes)
    c5_max = max((cert.c5[q] for q in cert.unstable), default=0.0)
    rhs = math.log(r) / (c3_min * tau_d) + (1.0 + c5_max / c3_min) / tau_a
    return rhs < 1.0, 1.0 - rhs


def _kappas(c_lo, c_hi, c4_max, rho_gain, lam, p, tau_d, N0):
    """Shared (kappa1, kappa2, kappa3) assembly; N0 = 0 is allowed here."""
    kappa1 = (c_hi / c_lo) ** (1.0 / p) * math.exp(
        (lam / (2.0 * p)) * (tau_d / (1.0 + tau_d)) * N0
    )
    kappa2 = lam * tau_d / (2.0 * p * (1.0 + tau_d))
    kappa3 = (2.0 * c4_max * rho_gain / (lam * c_lo)) ** (1.0 / p) if c4_max > 0.0 else 0.0
    return kappa1, kappa2, kappa3


def decay_constants(
    cert: LyapunovCertificate,
    adt: AdtParams,
    aat: Optional[AatParams] = None,
    _n0_override: Optional[float] = None,
) -> TheoremConstants:
    """Decay/bound constants for a certificate under a switching class.

    Without an activation budget: lambda = c3_min - ln(r)/tau_d and the
    chatter-weighted bounds use c_hi = r**N0 max c2, c_lo = min c1.  With a
    budget the rate is reduced by delta = ln(r)/tau_d + (c3_min+c5_max)/tau_a
    and the upper constant gains the factor exp((c3_min+c5_max) T0).

    Raises InvalidDwellError when the resulting rate is not positive.
    """
    r = conditioning_ratio(cert)
    n0 = adt.N0 if _n0_override is None else _n0_override
    c3_min = min(cert.c3[q] for q in cert.stable_modes)
    c4_max = max((cert.c4.get(q, 0.0) for q in cert.modes), default=0.0)
    c2_max = max(cert.c2[q] for q in cert.modes)
    c1_min = min(cert.c1[q] for q in cert.modes)
    if aat is None:
        lam = c3_min - math.log(r) / adt.tau_d
        if lam <= 0.0:
            raise InvalidDwellError(
                f"tau_d={adt.tau_d} is below the threshold {min_dwell_time(cert):.6g}"
            )
        c_hi = r**n0 * c2_max
        k1, k2, k3 = _kappas(c1_min, c_hi, c4_max, r**n0, lam, cert.p, adt.tau_d, n0)
    else:
        c5_max = max((cert.c5[q] for q in cert.unstable), default=0.0)
        delta = math.log(r) / adt.tau_d + (c3_min + c5_max) / aat.tau_a
        lam = c3_min - delta
        if lam <= 0.0:
            raise InvalidDwellError(
                f"(tau_d={adt.tau_d}, tau_a={aat.tau_a}) violates the rate condition"
            )
        phi_hi = c2_max * math.exp(math.log(r) * n0 + (c3_min + c5_max) * aat.T0)
        k1, k2, k3 = _kappas(c1_min, phi_hi, c4_max, phi_hi / c2_max, lam, cert.p, adt.tau_d, n0)
    return TheoremConstants(r=r, lam=lam, kappa1=k1, kappa2=k2, kappa3=k3, p=cert.p)


@dataclass(frozen=True)
class SampleSpec:
    """Sampling plan for certificate verification."""

    n_samples: int = 2000
    radius: float = 3.0
    seed: int = 0
    n_tau: int = 5
    n_eta: int = 3
    mu_values: tuple = (1.0, 2.0, 10.0, 1e3)
    u_values: tuple = (1.0,)
    exclude_ball: float = 1e-12
    fd_samples: int = 25
    fd_rel_tol: float = 1e-4
    margin_tol: float = 1e-9  # normalized margins below -margin_tol fail


@dataclass
class CheckReport:
    """Outcome of a sampled verification or a trajectory bound check."""

    passed: bool
    worst_margin: float
    witness: Optional[dict] = None
    constants: Optional[dict] = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        doc = {
            "pass": self.passed,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
        }
        if self.constants is not None:
            doc["constants"] = self.constants
        doc.update(self.details)
        return doc

    def write(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2, sort_keys=True, default=float)
            f.write("\n")


def _delta_value(cert, mu):
    if cert.delta == "zero":
        return 0.0
    if cert.delta == "one":
        return 1.0
    return mu ** (-cert.ell)


def verify_certificate(
    cert: LyapunovCertificate,
    system: HybridSystemDef,
    adt: AdtParams,
    spec: SampleSpec = SampleSpec(),
    N0: Optional[float] = None,
) -> CheckReport:
    """Spot-check the certificate inequalities on sampled points.

    Checks, over x in a box around the target, tau in [0, N0], eta in
    [0, 1/tau_d], mu in the sample grid, and the declared input values:

    * the sandwich c1 d^p <= V <= c2 d^p (d = distance to the target);
    * the flow inequality <grad V, (f, eta)> <= -c3 V + c4 Delta(mu) |u|^p
      on stable modes (growth form with +c5 V on unstable modes);
    * the reset inequality V_q(R_o(x), tau - 1) <= chi V_o(x, tau);
    * agreement of the analytic gradient with central finite differences.

    A negative margin is a counterexample and fails the report.
    """
    n0 = adt.N0 if N0 is None else N0
    rng = np.random.default_rng(spec.seed)
    xs = cert.offset + rng.uniform(-spec.radius, spec.radius, size=(spec.n_samples, system.n))
    taus = np.linspace(0.0, n0, spec.n_tau)
    etas = np.linspace(0.0, 1.0 / adt.tau_d, spec.n_eta)
    u_values = spec.u_values if cert.delta != "zero" else (0.0,)

    worst = {"sandwich": math.inf, "flow": math.inf, "reset": math.inf, "gradient": math.inf}
    witness = None

    def note(kind, margin, scale=1.0, **info):
        nonlocal witness
        margin = float(margin) / max(1.0, abs(scale))
        if margin < worst[kind]:
            worst[kind] = margin
            if margin < -spec.margin_tol and (witness is None or margin < witness.get("margin", 0.0)):
                witness = {"kind": kind, "margin": margin, **info}

    for q in cert.modes:
        Vq, Gq = cert.V[q], cert.grad[q]
        stable = q not in cert.unstable
        rate = cert.c3[q] if stable else -cert.c5[q]
        c4 = cert.c4.get(q, 0.0)
        for x in xs:
            d = cert.distance(x)
            if d < spec.exclude_ball:
                continue
            for tau in taus:
                v = Vq(x, tau)
                note("sandwich", v - cert.c1[q] * d**cert.p, scale=v, q=q, x=list(x), tau=tau)
                note("sandwich", cert.c2[q] * d**cert.p - v, scale=v, q=q, x=list(x), tau=tau)
                gx, gtau = Gq(x, tau)
                for mu in spec.mu_values:
                    for u in u_values:
                        f = np.asarray(system.flow(x, u, tau, q, mu), dtype=float)
                        inner = float(np.dot(gx, f))
                        allowance = c4 * _delta_value(cert, mu) * abs(u) ** cert.p
                        for eta in etas:
                            lhs = inner + gtau * eta
                            note(
                                "flow",
                                -rate * v + allowance - lhs,
                                scale=abs(rate) * v + abs(lhs),
                                q=q,
                                x=list(x),
                                tau=tau,
                                mu=mu,
                                eta=eta,
                            )

    # reset inequality over mode pairs, tau in [1, N0]
    if n0 >= 1.0:
        taus_jump = np.linspace(1.0, n0, spec.n_tau)
        for o in cert.modes:
            for q in cert.modes:
                if q == o and len(cert.modes) > 1:
                    continue
                for x in xs[: max(1, spec.n_samples // 2)]:
                    xr = np.asarray(system.reset(x, o), dtype=float)
                    for tau in taus_jump:
                        vo = cert.V[o](x, tau)
                        m = cert.chi * vo - cert.V[q](xr, tau - 1.0)
                        note("reset", m, scale=vo, o=o, q=q, x=list(x), tau=tau)

    # analytic gradient vs central differences
    for q in cert.modes:
        Vq, Gq = cert.V[q], cert.grad[q]
        for x in xs[: spec.fd_samples]:
            tau = float(rng.uniform(0.0, n0))
            gx, gtau = Gq(x, tau)
            g = np.concatenate([np.asarray(gx, dtype=float).ravel(), [gtau]])
            fd = np.empty_like(g)
            for i in range(system.n):
                h = 1e-6 * (1.0 + abs(x[i]))
                xp, xm = x.copy(), x.copy()
                xp[i] += h
                xm[i] -= h
                fd[i] = (Vq(xp, tau) - Vq(xm, tau)) / (2 * h)
            htau = 1e-6 * (1.0 + abs(tau))
            fd[-1] = (Vq(x, tau + htau) - Vq(x, max(tau - htau, 0.0))) / (
                htau + min(htau, tau)
            )
            scale = max(1.0, float(np.linalg.norm(g)))
            note("gradient", spec.fd_rel_tol - float(np.linalg.norm(fd - g)) / scale, q=q, x=list(x))

    margin = min(worst.values())
    return CheckReport(
        passed=margin >= -spec.margin_tol,
        worst_margin=margin,
        witness=witness,
        details={"margins": worst},
    )


def check_pt_bound(
    arc: HybridArc,
    consts: TheoremConstants,
    params: BlowUpParams,
    delta_tag: str,
    set_offset,
    u_sup: float = 0.0,
    ell: float = 0.0,
    tol: float = 1e-6,
) -> CheckReport:
    """Check the prescribed-time decay estimate along an arc.

    Every sample's distance to the target must stay below the bound built
    from ``consts``; the report's ``max_ratio`` is the largest
    trajectory/bound ratio (pass iff <= 1 + tol).
    """
    if arc.scale != "original":
        raise DomainError("bound checking expects an original-scale arc")
    if delta_tag not in ("zero", "one", "mu_pow"):
        raise DomainError(f"unknown input channel {delta_tag!r}")
    offset = np.asarray(set_offset, dtype=float)
    d0 = float(np.linalg.norm(arc.segments[0].x[0] - offset))
    max_ratio = 0.0
    witness = None
    for seg in arc.segments:
        s = seg.s
        d = np.linalg.norm(seg.x - offset[None, :], axis=1)
        decay = np.exp(-consts.kappa2 * (s + seg.j))
        if delta_tag == "zero":
            bound = consts.kappa1 * decay * d0
        elif delta_tag == "one":
            bound = consts.kappa1 * decay * d0 + consts.kappa3 * u_sup
        else:
            inner = consts.kappa1**2 * d0 * np.exp(-0.5 * consts.kappa2 * (s + seg.j))
            inner = inner + 2.0 * consts.kappa1 * consts.kappa3 * u_sup
            suppress = np.minimum(
                np.exp(-consts.kappa2 * s), normalized_gain(params, s) ** (-ell)
            )
            bound = inner * suppress
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(bound > 0.0, d / bound, np.where(d > 0.0, np.inf, 0.0))
        i = int(np.argmax(ratio))
        if ratio[i] > max_ratio:
            max_ratio = float(ratio[i])
            witness = {"t": float(seg.t[i]), "j": seg.j, "distance": float(d[i]), "bound": float(bound[i])}
    return CheckReport(
        passed=max_ratio <= 1.0 + tol,
        worst_margin=1.0 + tol - max_ratio,
        witness=witness,
        constants=consts.as_dict(),
        details={"max_ratio": max_ratio, "kappa3_note": consts.kappa3_note},
    )
