"""Switching signals: representation, generation, and admissibility checks.

A switching signal is a right-continuous piecewise-constant mode trace on a
bounded original-time window.  Two signal classes are supported:

* blow-up average dwell time (BU-ADT): the switch count over any window
  (t1, t2] is bounded by ``omega(gain(t2), gain(t1)) / tau_d + N0``, i.e. a
  classical ADT bound measured in dilated time;
* blow-up average activation time (BU-AAT): the gain-weighted time spent in
  unstable modes over any window is bounded by
  ``omega(gain(t2), gain(t1)) / tau_a + T0``.

Validation is exact: between events the switch count (resp. activation
integral) is constant (resp. moves at a rate that makes the slack monotone),
so extremal slack is attained at event boundaries and checking the O(m^2)
boundary pairs decides the condition.  Generation runs the dwell/activation
automata in dilated time with maximal flow selections, which realizes
exactly these signal classes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import blowup
from .blowup import BlowUpParams, _omega_primitive, contract, dilate, gain, omega, terminal_time
from .errors import DomainError, InfeasiblePolicyError

__all__ = [
    "AdtParams",
    "AatParams",
    "GeneratorPolicy",
    "SwitchingSignal",
    "JumpSchedule",
    "ValidationReport",
    "count_switches",
    "bu_adt_bound",
    "bu_adt_closed_forms",
    "validate_bu_adt",
    "unstable_activation",
    "validate_bu_aat",
    "generate_signal",
    "write_signal_csv",
    "read_signal_csv",
]


@dataclass(frozen=True)
class AdtParams:
    """Dwell-time constant tau_d > 0 and chatter bound N0 >= 1."""

    tau_d: float
    N0: float = 1.0

    def __post_init__(self):
        if not self.tau_d > 0.0:
            raise DomainError(f"tau_d must be positive, got {self.tau_d}")
        if not self.N0 >= 1.0:
            raise DomainError(f"N0 must be >= 1, got {self.N0}")


@dataclass(frozen=True)
class AatParams:
    """Activation constant tau_a > 1 and activation budget T0 >= 0."""

    tau_a: float
    T0: float = 0.0

    def __post_init__(self):
        if not self.tau_a > 1.0:
            raise DomainError(f"tau_a must be > 1, got {self.tau_a}")
        if self.T0 < 0.0:
            raise DomainError(f"T0 must be >= 0, got {self.T0}")


@dataclass(frozen=True)
class GeneratorPolicy:
    """Deterministic policy driving signal generation.

    mode_order: "cyclic" walks the mode set in order; "random" draws the
        successor uniformly from the admissible candidates (never the
        current mode).
    trigger: "at-dwell-threshold" switches the instant the dwell automaton
        allows it; "randomized" waits an extra Uniform[0, min(tau_d,
        max_random_wait)] of dilated time (waiting longer than the dwell
        threshold is always admissible).
    tau0 / rho0: initial automaton states (rho0 defaults to the budget T0).
    """

    seed: int = 0
    mode_order: str = "cyclic"
    trigger: str = "at-dwell-threshold"
    tau0: float = 0.0
    rho0: Optional[float] = None
    max_random_wait: float = math.inf

    def __post_init__(self):
        if self.mode_order not in ("cyclic", "random"):
            raise DomainError(f"unknown mode_order {self.mode_order!r}")
        if self.trigger not in ("at-dwell-threshold", "randomized"):
            raise DomainError(f"unknown trigger {self.trigger!r}")


@dataclass(frozen=True)
class SwitchingSignal:
    """Piecewise-constant mode trace with its mode partition.

    ``starts[i]`` is where piece i begins (starts[0] == 0) and ``modes[i]``
    the mode on [starts[i], starts[i+1]); the trace ends at ``end_time``.
    Switch instants are ``starts[1:]``.
    """

    starts: tuple
    modes: tuple
    end_time: float
    q_stable: frozenset
    q_unstable: frozenset = frozenset()

    def __post_init__(self):
        if len(self.starts) != len(self.modes) or not self.starts:
            raise DomainError("starts and modes must be equally sized and nonempty")
        if self.starts[0] != 0.0:
            raise DomainError("first piece must start at time 0")
        if any(b <= a for a, b in zip(self.starts, self.starts[1:])):
            raise DomainError("switch instants must be strictly increasing")
        if self.starts[-1] >= self.end_time:
            raise DomainError("all switch instants must lie before end_time")
        if any(m2 == m1 for m1, m2 in zip(self.modes, self.modes[1:])):
            raise DomainError("consecutive modes must differ")
        if self.q_stable & self.q_unstable:
            raise DomainError("stable and unstable mode sets must be disjoint")
        universe = self.q_stable | self.q_unstable
        if any(m not in universe for m in self.modes):
            raise DomainError("signal uses a mode outside the declared mode sets")

    @property
    def switch_times(self) -> tuple:
        return self.starts[1:]

    def mode_at(self, t: float) -> int:
        """Right-continuous evaluation of the trace."""
        if t < 0.0 or t > self.end_time:
            raise DomainError(f"time {t} outside [0, {self.end_time}]")
        idx = int(np.searchsorted(np.asarray(self.starts), t, side="right")) - 1
        return self.modes[idx]

    def pieces(self):
        """Iterate (start, end, mode) over the constant pieces."""
        bounds = list(self.starts) + [self.end_time]
        for i, m in enumerate(self.modes):
            yield bounds[i], bounds[i + 1], m


@dataclass(frozen=True)
class JumpSchedule:
    """Event schedule handed to the simulator.

    times: original-scale switch instants, strictly increasing, in (0, horizon);
    modes: mode active after each jump; automaton data mirrors the generating
    signal class so the simulator can advance the dwell/activation states.
    """

    times: tuple
    modes: tuple
    initial_mode: int
    adt: AdtParams
    aat: Optional[AatParams] = None
    unstable: frozenset = frozenset()
    tau0: float = 0.0
    rho0: float = 0.0

    def __post_init__(self):
        if len(self.times) != len(self.modes):
            raise DomainError("times and modes must be equally sized")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise DomainError("event times must be strictly increasing")
        if self.times and self.times[0] <= 0.0:
            raise DomainError("event times must be positive")


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    min_slack: float
    witness_t1: Optional[float] = None
    witness_t2: Optional[float] = None
    checked_pairs: int = 0

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "min_slack": self.min_slack,
            "witness_t1": self.witness_t1,
            "witness_t2": self.witness_t2,
        }


def count_switches(signal: SwitchingSignal, t1: float, t2: float) -> int:
    """Number of switch instants in the half-open window (t1, t2]."""
    if not (0.0 <= t1 <= t2 <= signal.end_time):
        raise DomainError("need 0 <= t1 <= t2 <= end_time")
    w = np.asarray(signal.switch_times)
    return int(np.count_nonzero((w > t1) & (w <= t2)))


def bu_adt_bound(params: BlowUpParams, adt: AdtParams, t1: float, t2: float) -> float:
    """Right-hand side of the BU-ADT inequality over (t1, t2]."""
    if not 0.0 <= t1 <= t2:
        raise DomainError("need 0 <= t1 <= t2")
    return omega(params, gain(params, t2, eps_term=0.0), gain(params, t1, eps_term=0.0)) / adt.tau_d + adt.N0


def bu_adt_closed_forms(
    params: BlowUpParams, adt: AdtParams, t1: float, t2: float
) -> tuple:
    """(log_form, binomial_form, omega_form) of the BU-ADT bound.

    The log form applies for k = 1 (None otherwise); the binomial form for
    integer k > 1 (None otherwise); the omega form always.  All applicable
    forms agree.
    """
    ups = terminal_time(params)
    omega_form = bu_adt_bound(params, adt, t1, t2)
    log_form = None
    if params.k < blowup.K1_SWITCH:
        log_form = (params.T / adt.tau_d) * math.log((ups - t1) / (ups - t2)) + adt.N0
    return log_form, _binomial_form(params, adt, t1, t2), omega_form


def _binomial_form(params: BlowUpParams, adt: AdtParams, t1: float, t2: float):
    """Polynomial-in-t expansion of the BU-ADT bound for integer k > 1."""
    k = params.k
    k_int = int(round(k))
    if k_int <= 1 or abs(k - k_int) > 1e-12:
        return None
    ups = terminal_time(params)
    gamma = (
        params.mu0 ** ((2.0 - k) / k)
        / adt.tau_d
        * (params.T**2 / ((ups - t2) * (ups - t1))) ** (k - 1.0)
    )
    acc = t2 - t1
    for ell in range(2, k_int):
        b_kl = math.factorial(k_int - 1) // (
            math.factorial(ell) * math.factorial(k_int - ell - 1)
        )
        c_lk = (-1.0) ** (ell + 1) * b_kl / (k_int - 1.0) * ups ** (1.0 - ell)
        acc += c_lk * (t2**ell - t1**ell)
    return gamma * acc + adt.N0


def _pair_min_slack(values_t, bound_matrix, lhs_matrix):
    """Minimal slack and witness over the upper-triangular pair matrix."""
    slack = bound_matrix - lhs_matrix
    iu = np.triu_indices_from(slack)
    flat = slack[iu]
    pos = int(np.argmin(flat))
    i, j = iu[0][pos], iu[1][pos]
    return float(flat[pos]), float(values_t[i]), float(values_t[j]), flat.size


def validate_bu_adt(
    signal: SwitchingSignal, params: BlowUpParams, adt: AdtParams
) -> ValidationReport:
    """Exact BU-ADT check of a signal.

    The switch count over (t1, t2] is piecewise constant while the bound
    grows with t2 and shrinks with t1, so the binding pairs are the switch
    instants themselves, counted with both endpoints included (the closure
    of the worst t1 -> w- limit).
    """
    ups = terminal_time(params)
    if not signal.end_time <= ups:
        raise DomainError("signal extends past the terminal time")
    w = np.asarray(signal.switch_times, dtype=float)
    if w.size == 0:
        return ValidationReport(True, adt.N0, None, None, 0)
    prim = _omega_primitive(params, gain(params, w, eps_term=0.0))
    om = prim[None, :] - prim[:, None]  # om[i, j] = omega(mu(w_j), mu(w_i))
    idx = np.arange(w.size, dtype=float)
    counts = idx[None, :] - idx[:, None] + 1.0  # switches in [w_i, w_j]
    slack_min, wt1, wt2, n_pairs = _pair_min_slack(w, om / adt.tau_d + adt.N0, counts)
    return ValidationReport(slack_min >= 0.0, slack_min, wt1, wt2, n_pairs)


def unstable_activation(
    signal: SwitchingSignal, params: BlowUpParams, t1: float, t2: float
) -> float:
    """Exact gain-weighted time spent in unstable modes over [t1, t2].

    Piecewise, each unstable piece contributes the dilated-time increment of
    its overlap with the window, so no quadrature is involved.
    """
    if not (0.0 <= t1 <= t2 <= signal.end_time):
        raise DomainError("need 0 <= t1 <= t2 <= end_time")
    total = 0.0
    for a, b, m in signal.pieces():
        if m not in signal.q_unstable:
            continue
        lo, hi = max(a, t1), min(b, t2)
        if hi > lo:
            total += dilate(params, hi, eps_term=0.0) - dilate(params, lo, eps_term=0.0)
    return total


def validate_bu_aat(
    signal: SwitchingSignal, params: BlowUpParams, aat: AatParams
) -> ValidationReport:
    """Exact BU-AAT check of a signal.

    The slack as a function of the window endpoints moves monotonically
    inside each constant piece (draining in unstable pieces, replenishing in
    stable ones), so extremal slack occurs at piece boundaries.
    """
    ups = terminal_time(params)
    if not signal.end_time <= ups:
        raise DomainError("signal extends past the terminal time")
    bounds = np.asarray(list(signal.starts) + [signal.end_time], dtype=float)
    # cumulative unstable activation at each boundary
    cum = np.zeros(bounds.size)
    acc = 0.0
    for i, (a, b, m) in enumerate(signal.pieces()):
        if m in signal.q_unstable:
            acc += dilate(params, b, eps_term=0.0) - dilate(params, a, eps_term=0.0)
        cum[i + 1] = acc
    prim = _omega_primitive(params, gain(params, bounds, eps_term=0.0))
    om = prim[None, :] - prim[:, None]
    lhs = cum[None, :] - cum[:, None]
    slack_min, wt1, wt2, n_pairs = _pair_min_slack(bounds, om / aat.tau_a + aat.T0, lhs)
    return ValidationReport(slack_min >= 0.0, slack_min, wt1, wt2, n_pairs)


def generate_signal(
    params: BlowUpParams,
    adt: AdtParams,
    aat: Optional[AatParams],
    policy: GeneratorPolicy,
    horizon: float,
    modes: Sequence[int],
    unstable: Sequence[int] = (),
) -> tuple:
    """Generate an admissible signal by running the automata in dilated time.

    The dwell state tau grows at rate 1/tau_d (saturating at N0) and drops
    by 1 at each switch; switches require tau >= 1.  With an activation
    budget, rho replenishes at 1/tau_a (saturating at T0) in stable modes
    and drains at 1 - 1/tau_a in unstable ones; a mode is only entered if
    the budget covers the dwell needed to switch away again.

    Returns (signal, schedule); the schedule's times are the switch
    instants mapped back to original time.

    Raises InfeasiblePolicyError when no admissible successor exists (e.g.
    a single unstable mode exhausting its budget).
    """
    ups = terminal_time(params)
    if not 0.0 < horizon < ups:
        raise DomainError("horizon must lie in (0, terminal)")
    modes = list(modes)
    unstable = frozenset(unstable)
    if not set(unstable) <= set(modes):
        raise DomainError("unstable modes must be a subset of the mode set")
    rng = np.random.default_rng(policy.seed)
    s_end = dilate(params, horizon) - 1e-9 * max(1.0, abs(dilate(params, horizon)))
    tau = policy.tau0
    if not 0.0 <= tau <= adt.N0:
        raise InfeasiblePolicyError(f"tau0 outside [0, N0]: {tau}")
    rho = policy.rho0 if policy.rho0 is not None else (aat.T0 if aat else 0.0)
    drain = (1.0 - 1.0 / aat.tau_a) if aat else 0.0

    q = modes[0]
    s = 0.0
    switch_s = []
    switch_modes = []
    while True:
        # dilated time until the dwell automaton admits a switch
        wait = max(0.0, (1.0 - tau) * adt.tau_d)
        extra_cap = min(adt.tau_d, policy.max_random_wait)
        if policy.trigger == "randomized":
            wait += float(rng.uniform(0.0, extra_cap))
        if wait == 0.0:
            # banked dwell (tau >= 1): spread instantaneous multi-switches
            # into strictly increasing signal instants
            wait = (0.5 if s == 0.0 else 0.05) * adt.tau_d
        s_next = s + wait
        if s_next >= s_end:
            break
        # budget at the candidate instant
        if aat and q in unstable:
            rho_next = rho - drain * wait
            if rho_next < -1e-12:
                raise InfeasiblePolicyError(
                    "activation budget exhausted before a switch was admissible"
                )
        elif aat:
            rho_next = min(aat.T0, rho + wait / aat.tau_a)
        else:
            rho_next = rho
        tau_next = min(adt.N0, tau + wait / adt.tau_d)

        candidates = [m for m in modes if m != q]
        if not candidates:
            candidates = [q]  # single-mode systems jump in place
        if aat:
            # entering an unstable mode must leave enough budget to dwell
            # until the automaton can switch away again
            admissible = []
            for m in candidates:
                if m in unstable:
                    dwell_out = max(0.0, (2.0 - tau_next) * adt.tau_d)
                    if policy.trigger == "randomized":
                        dwell_out += min(adt.tau_d, policy.max_random_wait)
                    if rho_next < drain * dwell_out + 1e-12:
                        continue
                admissible.append(m)
            if not admissible:
                stable_candidates = [m for m in candidates if m not in unstable]
                if not stable_candidates:
                    raise InfeasiblePolicyError("no admissible successor mode")
                admissible = stable_candidates
            candidates = admissible
        if policy.mode_order == "cyclic":
            after = [m for m in candidates if m > q]
            q_new = min(after) if after else min(candidates)
        else:
            q_new = int(rng.choice(np.asarray(candidates)))

        s, tau, rho, q = s_next, tau_next - 1.0, rho_next, q_new
        switch_s.append(s)
        switch_modes.append(q)

    ts = [float(contract(params, si)) for si in switch_s]
    # the signal records mode changes only; jumps that keep the mode (the
    # single-mode reset case) stay in the schedule but not in the trace
    sig_starts, sig_modes = [0.0], [modes[0]]
    for t_i, m_i in zip(ts, switch_modes):
        if m_i != sig_modes[-1]:
            sig_starts.append(t_i)
            sig_modes.append(m_i)
    signal = SwitchingSignal(
        starts=tuple(sig_starts),
        modes=tuple(sig_modes),
        end_time=horizon,
        q_stable=frozenset(m for m in modes if m not in unstable),
        q_unstable=unstable,
    )
    schedule = JumpSchedule(
        times=tuple(ts),
        modes=tuple(switch_modes),
        initial_mode=modes[0],
        adt=adt,
        aat=aat,
        unstable=unstable,
        tau0=policy.tau0,
        rho0=float(policy.rho0 if policy.rho0 is not None else (aat.T0 if aat else 0.0)),
    )
    return signal, schedule


def write_signal_csv(signal: SwitchingSignal, csv_path, json_path=None) -> None:
    """Write `start_time,mode` rows plus the JSON sidecar with the mode sets."""
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["start_time", "mode"])
        for start, m in zip(signal.starts, signal.modes):
            writer.writerow([f"{start:.17g}", m])
    if json_path is not None:
        sidecar = {
            "q_stable": sorted(signal.q_stable),
            "q_unstable": sorted(signal.q_unstable),
            "end_time": signal.end_time,
        }
        with open(json_path, "w") as f:
            json.dump(sidecar, f, indent=2, sort_keys=True)
            f.write("\n")


def read_signal_csv(csv_path, json_path) -> SwitchingSignal:
    """Inverse of :func:`write_signal_csv`."""
    starts, modes = [], []
    with open(csv_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[:2] != ["start_time", "mode"]:
            raise DomainError(f"unexpected signal header {header!r}")
        for row in reader:
            starts.append(float(row[0]))
            modes.append(int(row[1]))
    with open(json_path) as f:
        sidecar = json.load(f)
    return SwitchingSignal(
        starts=tuple(starts),
        modes=tuple(modes),
        end_time=float(sidecar["end_time"]),
        q_stable=frozenset(sidecar["q_stable"]),
        q_unstable=frozenset(sidecar["q_unstable"]),
    )
