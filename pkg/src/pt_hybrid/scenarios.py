"""Application scenarios: consensus regulation, intermittent feedback, games.

Each builder expands a declarative spec into a ``BuiltScenario`` holding the
hybrid plant, its Lyapunov certificate, the recommended switching
parameters, and derived constants.  Scenarios:

* ``build_consensus`` - multi-agent regulation to a common target under
  switching digraphs, with rank-deficient per-agent measurements; the graph
  coupling restores definiteness mode by mode.
* ``build_intermittent`` - scalar regulation with unknown matched drift and
  feedback that is switched off in unstable modes, under a dwell and an
  activation budget.
* ``build_nesmr`` - Nash-equilibrium seeking with a momentum state that is
  restarted (x2 -> x1) at every switch; ``build_ptpsg`` is the plain
  pseudo-gradient-flow baseline (descent sign) for comparison.
* ``build_scalar_reset`` - the minimal single-mode plant with normalized
  field -x + u and halving resets, used for bound demonstrations.

The momentum-game helpers expose the coupling-matrix eigenvalue floor, the
grid check that the floor holds, the conservative dwell threshold for the
momentum dynamics, and their decay constants.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .blowup import BlowUpParams
from .errors import BuildError
from .hybrid import HybridSystemDef
from .stability import CheckReport, LyapunovCertificate, TheoremConstants
from .switching import AatParams, AdtParams

__all__ = [
    "ConsensusSpec",
    "IntermittentSpec",
    "GameSpec",
    "BuiltScenario",
    "build_consensus",
    "build_intermittent",
    "build_nesmr",
    "build_ptpsg",
    "build_scalar_reset",
    "consensus_reference",
    "intermittent_reference",
    "game_reference",
    "game_bound_reference",
    "coupling_floor",
    "momentum_matrix_check",
    "momentum_dwell_threshold",
    "momentum_decay_constants",
    "reset_expansion_bound",
]


@dataclass
class BuiltScenario:
    """A ready-to-simulate scenario: plant + certificate + signal class."""

    name: str
    system: HybridSystemDef
    certificate: LyapunovCertificate
    params: BlowUpParams
    adt: AdtParams
    aat: Optional[AatParams]
    offset: np.ndarray
    initial_state: Callable
    metadata: dict = field(default_factory=dict)

    @property
    def modes(self) -> tuple:
        return self.system.modes

    @property
    def unstable(self) -> frozenset:
        return self.system.unstable


# ---------------------------------------------------------------------------
# consensus regulation over switching digraphs
# ---------------------------------------------------------------------------


def _cycle_laplacian(listen_to) -> np.ndarray:
    """Laplacian I - P of the digraph where node i uses node listen_to[i]."""
    n = len(listen_to)
    perm = np.zeros((n, n))
    for i, j in enumerate(listen_to):
        perm[i, j] = 1.0
    return np.eye(n) - perm


def _default_b_blocks(n_agents, dim):
    # alternating rank-one measurements: first half of the agents see the
    # first coordinate only, the rest the second; every kernel is nontrivial
    blocks = []
    for i in range(n_agents):
        d = np.zeros(dim)
        d[0 if i < n_agents // 2 else dim - 1] = 1.0
        blocks.append(np.diag(d))
    return tuple(blocks)


@dataclass
class ConsensusSpec:
    """Multi-agent regulation data.

    b_blocks are the per-agent PSD measurement matrices (rank deficiency
    allowed); laplacians the per-mode digraph Laplacians (agent level).  The
    drift of mode q is q * tanh(x) and is exactly cancelled by the control,
    so the closed loop is error-linear with A_q = -(k_r B + k_c L_q).
    """

    n_agents: int
    agent_dim: int
    target: tuple
    b_blocks: tuple
    laplacians: tuple
    params: BlowUpParams
    adt: AdtParams
    k_r: float = 1.0
    k_c: float = 1.0


def consensus_reference() -> ConsensusSpec:
    """Four agents in the plane, three switching cycle digraphs."""
    cycles = ([1, 2, 3, 0], [3, 0, 1, 2], [2, 3, 1, 0])
    return ConsensusSpec(
        n_agents=4,
        agent_dim=2,
        target=(-1.0, 1.0),
        b_blocks=_default_b_blocks(4, 2),
        laplacians=tuple(_cycle_laplacian(c) for c in cycles),
        params=BlowUpParams(10.0, 1.0, 1.0),
        adt=AdtParams(0.3129, 3.0),
    )


def build_consensus(spec: ConsensusSpec) -> BuiltScenario:
    """Assemble the closed-loop consensus plant and its quadratic certificate."""
    n = spec.n_agents * spec.agent_dim
    big_b = np.zeros((n, n))
    for i, blk in enumerate(spec.b_blocks):
        sl = slice(i * spec.agent_dim, (i + 1) * spec.agent_dim)
        big_b[sl, sl] = blk
    offset = np.tile(np.asarray(spec.target, dtype=float), spec.n_agents)

    mats = {}
    p_mats = {}
    for q, lap in enumerate(spec.laplacians, start=1):
        coupling = spec.k_r * big_b + spec.k_c * np.kron(lap, np.eye(spec.agent_dim))
        sym_eigs = np.linalg.eigvalsh(0.5 * (coupling + coupling.T))
        if sym_eigs.min() <= 0.0:
            raise BuildError(
                f"mode {q}: measurement+graph coupling is not positive definite "
                f"(min symmetric eigenvalue {sym_eigs.min():.3g})"
            )
        mats[q] = -coupling
        p_mats[q] = solve_continuous_lyapunov(mats[q].T, -np.eye(n))

    modes = tuple(mats)

    def flow(x, u, tau, q, mu, _mats=mats):
        return _mats[q] @ (np.asarray(x, dtype=float) - offset)

    def make_v(P):
        def V(x, tau):
            e = np.asarray(x, dtype=float) - offset
            return float(e @ P @ e)

        def grad(x, tau):
            e = np.asarray(x, dtype=float) - offset
            return 2.0 * (P @ e), 0.0

        return V, grad

    V, G, c1, c2, c3 = {}, {}, {}, {}, {}
    for q, P in p_mats.items():
        V[q], G[q] = make_v(P)
        eigs = np.linalg.eigvalsh(P)
        c1[q], c2[q] = float(eigs.min()), float(eigs.max())
        c3[q] = 1.0 / float(eigs.max())  # from P A + A^T P = -I

    # sharp cross-mode reset factor: with identity resets the jump
    # inequality V_q <= chi V_o needs the worst generalized eigenvalue of
    # the (P_q, P_o) pairs; it may exceed 1 but never the conditioning
    # ratio, so the dwell-weighted jump analysis stays nonincreasing.
    from scipy.linalg import eigh as generalized_eigh

    chi = 1.0
    for q in modes:
        for o in modes:
            if q != o:
                top = float(generalized_eigh(p_mats[q], p_mats[o], eigvals_only=True).max())
                chi = max(chi, top)

    cert = LyapunovCertificate(
        modes=modes, V=V, grad=G, c1=c1, c2=c2, c3=c3, chi=chi, offset=offset
    )
    system = HybridSystemDef(n=n, flow=flow, modes=modes)

    def initial_state(rng):
        return rng.uniform(-3.0, 3.0, n)

    decay = min(
        float(np.linalg.eigvalsh(0.5 * (mats[q] + mats[q].T)).max()) for q in modes
    )
    return BuiltScenario(
        name="consensus",
        system=system,
        certificate=cert,
        params=spec.params,
        adt=spec.adt,
        aat=None,
        offset=offset,
        initial_state=initial_state,
        metadata={
            "common_quadratic_rate": -decay,  # min over modes of |max eig of sym(A_q)|
            "P_condition_numbers": {q: c2[q] / c1[q] for q in modes},
        },
    )


# ---------------------------------------------------------------------------
# intermittent feedback with unknown matched drift
# ---------------------------------------------------------------------------


@dataclass
class IntermittentSpec:
    """Scalar plant dx/dt = q tanh(x) + [feedback in stable modes].

    The drift bound used by the controller is q |x| in stable modes, giving
    the law u = -gain * (eta_q + delta_q (q |x|)^2) x; in unstable modes the
    input channel is cut and only the drift acts.  The constant drift bound
    q enters the unstable input gain.
    """

    stable_modes: tuple
    unstable_modes: tuple
    eta: dict
    delta_gain: dict
    params: BlowUpParams
    adt: AdtParams
    aat: AatParams


def intermittent_reference() -> IntermittentSpec:
    # mu0 = 2 keeps the drift-to-feedback ratio below 1/2 from the start, so
    # the error is provably nonincreasing on every stable window
    return IntermittentSpec(
        stable_modes=(1, 2),
        unstable_modes=(3,),
        eta={1: 1.0, 2: 1.0},
        delta_gain={1: 1.0, 2: 0.5},
        params=BlowUpParams(10.0, 1.0, 2.0),
        adt=AdtParams(1.0, 1.5),
        aat=AatParams(2.0, 2.0),
    )


def build_intermittent(spec: IntermittentSpec) -> BuiltScenario:
    """Assemble the intermittent-feedback loop and its certificate.

    Raises BuildError when the dwell/activation pair cannot certify decay.
    """
    from .stability import dwell_activation_margin

    modes = tuple(spec.stable_modes) + tuple(spec.unstable_modes)
    unstable = frozenset(spec.unstable_modes)

    def flow(x, u, tau, q, mu):
        x = np.asarray(x, dtype=float)
        drift = q * np.tanh(x) / mu
        if q in unstable:
            return drift
        dbar_sq = (q * np.abs(x)) ** 2
        return -(spec.eta[q] + spec.delta_gain[q] * dbar_sq) * x + drift

    def V(x, tau):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ x)

    def grad(x, tau):
        return np.asarray(x, dtype=float), 0.0

    c4 = {q: 1.0 / (4.0 * spec.delta_gain[q]) for q in spec.stable_modes}
    c4.update({q: q**2 / 2.0 for q in unstable})
    cert = LyapunovCertificate(
        modes=modes,
        V={q: V for q in modes},
        grad={q: grad for q in modes},
        c1={q: 0.5 for q in modes},
        c2={q: 0.5 for q in modes},
        c3={q: 2.0 * spec.eta[q] for q in spec.stable_modes},
        c5={q: 1.0 for q in unstable},
        c4=c4,
        chi=1.0,
        delta="mu_pow",
        ell=2.0,
        unstable=unstable,
        offset=np.zeros(1),
    )
    holds, margin = dwell_activation_margin(cert, spec.adt.tau_d, spec.aat.tau_a)
    if not holds:
        raise BuildError(
            f"dwell/activation pair (tau_d={spec.adt.tau_d}, tau_a={spec.aat.tau_a}) "
            f"fails the rate condition by {-margin:.3g}"
        )
    system = HybridSystemDef(n=1, flow=flow, modes=modes, unstable=unstable)
    return BuiltScenario(
        name="intermittent",
        system=system,
        certificate=cert,
        params=spec.params,
        adt=spec.adt,
        aat=spec.aat,
        offset=np.zeros(1),
        initial_state=lambda rng: np.array([3.0]),
        metadata={"rate_margin": margin, "input_sup": 1.0},
    )


# ---------------------------------------------------------------------------
# switching games: momentum dynamics with restarts, and the PSG baseline
# ---------------------------------------------------------------------------


@dataclass
class GameSpec:
    """Mode-indexed strongly monotone game with affine pseudo-gradients.

    The pseudo-gradient of mode q is G_q(x1) = scale * A_q (x1 - equilibrium).
    eta_band = (eta_lo, eta_hi) is the momentum-coefficient range; delta_eta
    and delta_d are the tuning fractions entering the coupling floor.
    """

    matrices: tuple
    scale: float
    equilibrium: tuple
    eta_band: tuple
    delta_eta: float
    delta_d: float
    params: BlowUpParams
    adt: AdtParams

    @property
    def n(self) -> int:
        return np.asarray(self.matrices[0]).shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.matrices)

    def mode_constants(self):
        """Per-mode (kappa, ell, sigma, zeta): monotonicity and Lipschitz
        moduli of G_q, the deviation of its Jacobian from the identity, and
        the co-coercivity constant kappa/ell^2."""
        out = {}
        for q, A in enumerate(self.matrices, start=1):
            A = np.asarray(A, dtype=float)
            sym = 0.5 * self.scale * (A + A.T)
            kappa = float(np.linalg.eigvalsh(sym).min())
            ell = float(np.linalg.svd(self.scale * A, compute_uv=False).max())
            sigma = float(
                np.linalg.svd(np.eye(self.n) - self.scale * A, compute_uv=False).max()
            )
            out[q] = (kappa, ell, sigma, kappa / ell**2)
        return out

    def eta_fn(self, N0: float):
        lo, hi = self.eta_band
        slope = (hi - lo) / N0

        def eta(tau):
            return tau * slope + lo

        return eta, slope


def game_reference() -> GameSpec:
    """The 2-player, 3-mode configuration driving the comparison figure."""
    return GameSpec(
        matrices=(
            np.array([[6.0, -1.5], [-1.5, 6.0]]),
            np.array([[8.0, -2.0], [2.0, 8.0]]),
            np.array([[4.0, 0.0], [0.0, 8.0]]),
        ),
        scale=0.05,
        equilibrium=(1.0, 1.0),
        eta_band=(0.7, 1.0),
        delta_eta=0.55,
        delta_d=0.2,
        params=BlowUpParams(10.0, 1.0, 1.0),
        adt=AdtParams(1.14, 1.75),
    )


def game_bound_reference() -> GameSpec:
    """A near-identity game satisfying every hypothesis of the momentum
    decay estimate (contractive resets, dwell above the conservative
    threshold), used for bound-conformance runs."""
    return GameSpec(
        matrices=(
            np.array([[1.0, 0.1], [-0.1, 1.0]]),
            np.array([[1.0, 0.15], [-0.15, 1.0]]),
            np.array([[1.0, 0.2], [-0.2, 1.0]]),
        ),
        scale=1.0,
        equilibrium=(1.0, 1.0),
        eta_band=(0.75, 2.4),
        delta_eta=0.3,
        delta_d=0.25,
        params=BlowUpParams(10.0, 1.0, 1.0),
        adt=AdtParams(200.0, 1.75),
    )


def _game_aggregates(spec: GameSpec):
    consts = spec.mode_constants()
    kappa_lo = min(c[0] for c in consts.values())
    ell_hi = max(c[1] for c in consts.values())
    sigma_hi = max(c[2] for c in consts.values())
    zeta_lo = min(c[3] for c in consts.values())
    return consts, kappa_lo, ell_hi, sigma_hi, zeta_lo


def _check_tuning(spec: GameSpec):
    consts, kappa_lo, ell_hi, sigma_hi, zeta_lo = _game_aggregates(spec)
    lo, hi = spec.eta_band
    if not (0.0 < lo < hi):
        raise BuildError("momentum band must satisfy 0 < eta_lo < eta_hi")
    delta = spec.delta_eta + spec.delta_d
    if not (0.0 < spec.delta_eta < 1.0 and spec.delta_d > 0.0 and delta < 1.0):
        raise BuildError("need delta_eta in (0,1), delta_d > 0, delta_eta + delta_d < 1")
    if hi**2 * sigma_hi**2 > spec.delta_eta * zeta_lo + 1e-12:
        raise BuildError(
            "eta_hi^2 * sigma_max^2 exceeds delta_eta * zeta_min; the coupling "
            "floor cannot be certified"
        )
    if 1.0 / spec.adt.tau_d > spec.delta_d * spec.adt.N0 * zeta_lo / (hi - lo) + 1e-12:
        raise BuildError("1/tau_d exceeds delta_d * N0 * zeta_min / (eta_hi - eta_lo)")
    return consts, kappa_lo, ell_hi, sigma_hi, zeta_lo


def floor_from_aggregates(delta_eta: float, delta_d: float, sigma_hi: float, zeta_lo: float) -> float:
    """(1 - delta_d - delta_eta) sigma^2 / (delta_eta (1 - delta_d) zeta + sigma^2)."""
    num = (1.0 - delta_d - delta_eta) * sigma_hi**2
    den = delta_eta * (1.0 - delta_d) * zeta_lo + sigma_hi**2
    return num / den


def coupling_floor(spec: GameSpec) -> float:
    """Uniform eigenvalue floor of the momentum coupling matrix."""
    _, _, _, sigma_hi, zeta_lo = _game_aggregates(spec)
    return floor_from_aggregates(spec.delta_eta, spec.delta_d, sigma_hi, zeta_lo)


def momentum_matrix_check(spec: GameSpec, n_tau: int = 50, n_rate: int = 50) -> CheckReport:
    """Grid check that the coupling matrix stays above the eigenvalue floor.

    Assembles, per mode and over (tau, rate) in [0, N0] x [0, 1/tau_d], the
    symmetric block matrix

        [ I / eta(tau)^2            I - dG_q^T          ]
        [ I - dG_q        (zeta_q - rate * eta') I      ]

    and requires its smallest eigenvalue to reach the floor.  With affine
    pseudo-gradients the matrix is independent of x1, so the grid covers the
    whole domain.
    """
    floor = coupling_floor(spec)
    consts = spec.mode_constants()
    eta, slope = spec.eta_fn(spec.adt.N0)
    n = spec.n
    worst = math.inf
    witness = None
    for q, A in enumerate(spec.matrices, start=1):
        jac_dev = np.eye(n) - spec.scale * np.asarray(A, dtype=float)
        zeta = consts[q][3]
        for tau in np.linspace(0.0, spec.adt.N0, n_tau):
            top = np.eye(n) / eta(tau) ** 2
            for rate in np.linspace(0.0, 1.0 / spec.adt.tau_d, n_rate):
                bottom = (zeta - rate * slope) * np.eye(n)
                M = np.block([[top, jac_dev.T], [jac_dev, bottom]])
                lam_min = float(np.linalg.eigvalsh(M).min())
                if lam_min - floor < worst:
                    worst = lam_min - floor
                    if worst < 0.0:
                        witness = {"q": q, "tau": float(tau), "rate": float(rate), "lam_min": lam_min}
    return CheckReport(
        passed=worst >= 0.0,
        worst_margin=worst,
        witness=witness,
        details={"floor": floor},
    )


def reset_expansion_bound(spec: GameSpec) -> float:
    """Worst-case certificate growth factor across a momentum restart.

    Values <= 1 certify contraction at jumps; larger values flag possible
    expansion (the momentum decay constants are then vacuous).
    """
    _, kappa_lo, ell_hi, _, _ = _game_aggregates(spec)
    eta, _ = spec.eta_fn(spec.adt.N0)
    return (ell_hi**2 / kappa_lo**2) * (eta(spec.adt.N0 - 1.0) ** 2 / eta(1.0) ** 2) + 1.0 / (
        2.0 * kappa_lo**2 * eta(1.0) ** 2
    )


def momentum_dwell_threshold(spec: GameSpec) -> float:
    """Conservative dwell-time threshold for the momentum dynamics.

    Infinite when the coupling floor degenerates to zero (exact-identity
    pseudo-gradient Jacobians).
    """
    _, kappa_lo, ell_hi, _, _ = _game_aggregates(spec)
    lo, hi = spec.eta_band
    nu = coupling_floor(spec)
    if nu <= 0.0:
        return math.inf
    lead = max(3.0, 2.0 * (1.0 / kappa_lo**2 + hi**2)) / (4.0 * lo * nu)
    return lead * math.log(
        max(3.0, 2.0 + 2.0 * ell_hi**2 * hi**2) / min(1.0, 2.0 * lo * kappa_lo**2)
    )


def _momentum_sandwich(spec: GameSpec):
    consts = spec.mode_constants()
    lo, hi = spec.eta_band
    v1 = {q: 0.25 * min(1.0, 2.0 * c[0] ** 2 * lo**2) for q, c in consts.items()}
    v2 = {q: 0.25 * max(3.0, 2.0 + 2.0 * c[1] ** 2 * hi**2) for q, c in consts.items()}
    return v1, v2


def momentum_decay_constants(spec: GameSpec) -> TheoremConstants:
    """Decay constants of the momentum dynamics' prescribed-time estimate.

    The rate is the smaller of the jump contraction (1 - reset bound) and
    the flow rate net of the conditioning penalty ln(r)/tau_d; negative
    rates are returned as-is (vacuous estimate) rather than raised, so the
    constants can be reported for configurations outside the hypotheses.
    """
    _, kappa_lo, ell_hi, _, _ = _game_aggregates(spec)
    lo, hi = spec.eta_band
    nu = coupling_floor(spec)
    v1, v2 = _momentum_sandwich(spec)
    v1_min, v2_max = min(v1.values()), max(v2.values())
    r = v2_max / v1_min
    c3_lo = 4.0 * lo * nu / max(3.0, 2.0 * (1.0 / kappa_lo**2 + hi**2))
    log_term = math.log(
        max(3.0, 2.0 + 2.0 * ell_hi**2 * hi**2) / min(1.0, 2.0 * lo * kappa_lo**2)
    )
    lam = min(1.0 - reset_expansion_bound(spec), c3_lo - log_term / spec.adt.tau_d)
    tau_d, n0 = spec.adt.tau_d, spec.adt.N0
    kappa1 = (
        v2_max ** ((n0 + 1.0) / 2.0)
        / v1_min ** (n0 / 2.0)
        * math.exp((lam / 2.0) * (tau_d / (1.0 + tau_d)) * n0)
    )
    kappa2 = (tau_d / (4.0 * (1.0 + tau_d))) * lam
    return TheoremConstants(r=r, lam=lam, kappa1=kappa1, kappa2=kappa2, kappa3=0.0, p=2.0)


def _game_flow_and_cert(spec: GameSpec, momentum: bool, strict: bool):
    consts, kappa_lo, ell_hi, sigma_hi, zeta_lo = _check_tuning(spec)
    for q, (kappa, _, _, _) in consts.items():
        if kappa <= 0.0:
            raise BuildError(f"mode {q}: pseudo-gradient is not strongly monotone")
    x_star = np.asarray(spec.equilibrium, dtype=float)
    n = spec.n
    scale = spec.scale
    mats = {q: np.asarray(A, dtype=float) for q, A in enumerate(spec.matrices, start=1)}

    def pseudo_gradient(q, x1):
        return scale * (mats[q] @ (np.asarray(x1, dtype=float) - x_star))

    gamma_bar = reset_expansion_bound(spec)
    metadata = {
        "mode_constants": consts,
        "coupling_floor": coupling_floor(spec),
        "reset_expansion_bound": gamma_bar,
        "dwell_threshold": momentum_dwell_threshold(spec),
        "warnings": [],
    }
    if momentum:
        if gamma_bar > 1.0:
            msg = (
                f"reset expansion bound {gamma_bar:.3g} exceeds 1: the momentum "
                "decay estimate is not certified for this configuration"
            )
            if strict:
                raise BuildError(msg)
            warnings.warn(msg, stacklevel=3)
            metadata["warnings"].append(msg)
        if spec.adt.tau_d < metadata["dwell_threshold"]:
            msg = (
                f"tau_d={spec.adt.tau_d:.4g} is below the conservative momentum "
                f"dwell threshold {metadata['dwell_threshold']:.4g} (reported, not enforced)"
            )
            metadata["warnings"].append(msg)
        metadata["decay_constants"] = momentum_decay_constants(spec)

        eta, slope = spec.eta_fn(spec.adt.N0)

        def flow(x, u, tau, q, mu):
            x = np.asarray(x, dtype=float)
            x1, x2 = x[:n], x[n:]
            e = eta(tau)
            return np.concatenate([(2.0 / e) * (x2 - x1), -2.0 * e * pseudo_gradient(q, x1)])

        def reset(x, q):
            x = np.asarray(x, dtype=float)
            return np.concatenate([x[:n], x[:n]])

        def make_v(q):
            A = mats[q]

            def V(x, tau):
                x = np.asarray(x, dtype=float)
                x1, x2 = x[:n], x[n:]
                g = pseudo_gradient(q, x1)
                return float(
                    0.25 * np.dot(x2 - x_star, x2 - x_star)
                    + 0.25 * np.dot(x2 - x1, x2 - x1)
                    + 0.5 * eta(tau) ** 2 * np.dot(g, g)
                )

            def grad(x, tau):
                x = np.asarray(x, dtype=float)
                x1, x2 = x[:n], x[n:]
                g = pseudo_gradient(q, x1)
                e = eta(tau)
                gx1 = -0.5 * (x2 - x1) + e**2 * (scale * A.T) @ g
                gx2 = 0.5 * (x2 - x_star) + 0.5 * (x2 - x1)
                return np.concatenate([gx1, gx2]), float(e * slope * np.dot(g, g))

            return V, grad

        v1, v2 = _momentum_sandwich(spec)
        lo, hi = spec.eta_band
        nu = coupling_floor(spec)
        c3 = {
            q: 4.0 * lo * nu / max(3.0, 2.0 * (1.0 / consts[q][0] ** 2 + hi**2))
            for q in mats
        }
        V, G = {}, {}
        for q in mats:
            V[q], G[q] = make_v(q)
        offset = np.concatenate([x_star, x_star])
        cert = LyapunovCertificate(
            modes=tuple(mats),
            V=V,
            grad=G,
            c1=v1,
            c2=v2,
            c3=c3,
            chi=gamma_bar,
            unstable=frozenset(),
            offset=offset,
        )
        system = HybridSystemDef(n=2 * n, flow=flow, reset=reset, modes=tuple(mats))

        def initial_state(rng):
            x1 = rng.uniform(-3.0, 3.0, n)
            return np.concatenate([x1, x1])

        name = "nesmr"
    else:

        def flow(x, u, tau, q, mu):
            return -pseudo_gradient(q, x)

        def make_v(q):
            def V(x, tau):
                e = np.asarray(x, dtype=float) - x_star
                return 0.5 * float(e @ e)

            def grad(x, tau):
                return np.asarray(x, dtype=float) - x_star, 0.0

            return V, grad

        V, G = {}, {}
        for q in mats:
            V[q], G[q] = make_v(q)
        offset = x_star.copy()
        cert = LyapunovCertificate(
            modes=tuple(mats),
            V=V,
            grad=G,
            c1={q: 0.5 for q in mats},
            c2={q: 0.5 for q in mats},
            c3={q: 2.0 * consts[q][0] for q in mats},
            chi=1.0,
            offset=offset,
        )
        system = HybridSystemDef(n=n, flow=flow, modes=tuple(mats))

        def initial_state(rng):
            return rng.uniform(-3.0, 3.0, n)

        name = "ptpsg"

    return BuiltScenario(
        name=name,
        system=system,
        certificate=cert,
        params=spec.params,
        adt=spec.adt,
        aat=None,
        offset=offset,
        initial_state=initial_state,
        metadata=metadata,
    )


def build_nesmr(spec: GameSpec, strict: bool = False) -> BuiltScenario:
    """Momentum equilibrium seeking with restarts (x1, x2) -> (x1, x1).

    With ``strict`` a reset expansion bound above 1 is a build error;
    otherwise it is a warning recorded in the metadata.
    """
    return _game_flow_and_cert(spec, momentum=True, strict=strict)


def build_ptpsg(spec: GameSpec) -> BuiltScenario:
    """Pseudo-gradient-flow baseline dx1/ds = -G_q(x1) (descent sign)."""
    return _game_flow_and_cert(spec, momentum=False, strict=False)


# ---------------------------------------------------------------------------
# minimal reset demonstration plant
# ---------------------------------------------------------------------------


def load_spec_json(path):
    """Load a scenario spec from a JSON document.

    The document carries a ``scenario`` tag (consensus | intermittent |
    nesmr | ptpsg) plus the fields of the corresponding spec dataclass;
    ``params`` is {"T", "k", "mu0"}, ``adt`` {"tau_d", "N0"}, ``aat``
    {"tau_a", "T0"}; matrices are nested lists; integer-keyed maps use
    string keys.  Returns (scenario_name, spec).
    """
    import json

    with open(path) as f:
        doc = json.load(f)
    name = doc["scenario"]
    params = BlowUpParams(**doc["params"])
    adt = AdtParams(**doc["adt"])
    if name == "consensus":
        spec = ConsensusSpec(
            n_agents=doc["n_agents"],
            agent_dim=doc["agent_dim"],
            target=tuple(doc["target"]),
            b_blocks=tuple(np.asarray(b, dtype=float) for b in doc["b_blocks"]),
            laplacians=tuple(np.asarray(L, dtype=float) for L in doc["laplacians"]),
            params=params,
            adt=adt,
            k_r=doc.get("k_r", 1.0),
            k_c=doc.get("k_c", 1.0),
        )
    elif name == "intermittent":
        spec = IntermittentSpec(
            stable_modes=tuple(doc["stable_modes"]),
            unstable_modes=tuple(doc["unstable_modes"]),
            eta={int(k): float(v) for k, v in doc["eta"].items()},
            delta_gain={int(k): float(v) for k, v in doc["delta_gain"].items()},
            params=params,
            adt=adt,
            aat=AatParams(**doc["aat"]),
        )
    elif name in ("nesmr", "ptpsg"):
        spec = GameSpec(
            matrices=tuple(np.asarray(A, dtype=float) for A in doc["matrices"]),
            scale=float(doc["scale"]),
            equilibrium=tuple(doc["equilibrium"]),
            eta_band=tuple(doc["eta_band"]),
            delta_eta=float(doc["delta_eta"]),
            delta_d=float(doc["delta_d"]),
            params=params,
            adt=adt,
        )
    else:
        raise BuildError(f"unknown scenario tag {name!r} in {path}")
    return name, spec


def build_scalar_reset(params: BlowUpParams = BlowUpParams(1.0, 1.0, 1.0)) -> BuiltScenario:
    """Scalar plant with normalized field -x + u and halving resets.

    Jumps fire each unit of dilated time (dwell automaton with tau_d = 1,
    N0 = 1); the certificate is V = |x|^2 with decay rate 2 under zero input
    and reset factor 1/4.
    """

    def V(x, tau):
        x = np.asarray(x, dtype=float)
        return float(x @ x)

    def grad(x, tau):
        return 2.0 * np.asarray(x, dtype=float), 0.0

    cert = LyapunovCertificate(
        modes=(1,),
        V={1: V},
        grad={1: grad},
        c1={1: 1.0},
        c2={1: 1.0},
        c3={1: 2.0},
        chi=0.25,
        offset=np.zeros(1),
    )
    system = HybridSystemDef(
        n=1,
        flow=lambda x, u, tau, q, mu: -np.asarray(x, dtype=float) + u,
        reset=lambda x, q: 0.5 * np.asarray(x, dtype=float),
        modes=(1,),
    )
    return BuiltScenario(
        name="scalar-reset",
        system=system,
        certificate=cert,
        params=params,
        adt=AdtParams(1.0, 1.0),
        aat=None,
        offset=np.zeros(1),
        initial_state=lambda rng: np.array([1.0]),
        metadata={},
    )
