"""Hybrid time domains, hybrid arcs, and the two-time-scale simulator.

A hybrid arc is indexed by (t, j): continuous time t and jump counter j.
The simulator integrates the plant state x between scheduled jumps either

* in the dilated scale, where the x-field is the normalized mode field
  f_q(x, u, tau, mu_hat) and nothing escapes in finite time (the default), or
* directly in the original scale, where the x-field is gain(t) * f_q(...),
  for cross-validation.

The gain, the dwell state tau (rate 1/tau_d, saturated at N0, decremented at
jumps), and the activation monitor rho (rate 1/tau_a - 1 in unstable modes,
clipped to [0, T0]) are advanced in closed form; only x is integrated
numerically.  Output samples are placed on a grid that is uniform in dilated
time in both scales, so arcs from the two routes are directly comparable at
matched hybrid times.

Arc export uses the CSV header ``t,s,j,q,tau,rho,mu,x0..x{n-1}`` with
17-significant-digit floats (rho blank when the arc has no monitor state);
the JSON export mirrors the same schema.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .blowup import BlowUpParams, contract, dilate, gain, normalized_gain, terminal_time
from .errors import DomainError, FlowIntegrationError, GuardError, ScheduleError
from .switching import JumpSchedule

__all__ = [
    "SolverConfig",
    "HybridTimeDomain",
    "ArcSegment",
    "HybridArc",
    "HybridSystemDef",
    "htd_stats",
    "integrate_flow",
    "apply_jump",
    "simulate",
    "map_time_scale",
]

ORIGINAL = "original"
DILATED = "dilated"


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings for flow integration and arc sampling."""

    method: str = "rk45"  # "rk45" (adaptive) or "rk4" (fixed step)
    rtol: float = 1e-8
    atol: float = 1e-10
    step: float = 1e-2  # fixed step for rk4, in the integration variable
    eps_term: float = 1e-6  # original-scale times capped at (1-eps_term)*terminal
    s_max: float = 250.0  # hard cap on the dilated horizon
    points_per_unit: float = 4.0  # output samples per unit of dilated time
    min_segment_points: int = 9

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise DomainError(f"unknown method {self.method!r}")
        if min(self.rtol, self.atol, self.step) <= 0.0:
            raise DomainError("tolerances and step must be positive")


@dataclass(frozen=True)
class HybridTimeDomain:
    """Union of intervals [t_start, t_end] x {j} with j increasing by one."""

    intervals: tuple

    def __post_init__(self):
        if not self.intervals:
            raise DomainError("a hybrid time domain needs at least one interval")
        t0, _, j0 = self.intervals[0]
        if t0 != 0.0 or j0 != 0:
            raise DomainError("domain must start at (0, 0)")
        for (a, b, j), (a2, b2, j2) in zip(self.intervals, self.intervals[1:]):
            if b < a or b2 < a2:
                raise DomainError("interval endpoints must be ordered")
            if j2 != j + 1:
                raise DomainError("jump counter must increase by exactly one")
            if a2 != b:
                raise DomainError("consecutive intervals must share their endpoint")

    @property
    def sup_t(self) -> float:
        return max(b for _, b, _ in self.intervals)

    @property
    def sup_j(self) -> int:
        return max(j for _, _, j in self.intervals)

    @property
    def length(self) -> float:
        return self.sup_t + self.sup_j


def htd_stats(domain: HybridTimeDomain) -> tuple:
    """(sup_t, sup_j, length) of a hybrid time domain."""
    return domain.sup_t, domain.sup_j, domain.length


@dataclass
class ArcSegment:
    """Samples of one flow interval (constant j, constant mode)."""

    j: int
    q: int
    t: np.ndarray  # original-scale sample times
    s: np.ndarray  # dilated-scale sample times
    x: np.ndarray  # (n_samples, n)
    tau: np.ndarray
    mu: np.ndarray
    rho: Optional[np.ndarray] = None


@dataclass
class HybridArc:
    """A sampled solution over a hybrid time domain, in one time scale."""

    segments: list
    scale: str
    params: BlowUpParams
    n: int

    def __post_init__(self):
        if self.scale not in (ORIGINAL, DILATED):
            raise DomainError(f"unknown scale {self.scale!r}")
        for seg in self.segments:
            if seg.x.shape[1] != self.n:
                raise DomainError("state dimension varies across samples")

    @property
    def has_rho(self) -> bool:
        return self.segments[0].rho is not None

    def axis(self, seg: ArcSegment) -> np.ndarray:
        """Sample times of a segment in the arc's own scale."""
        return seg.t if self.scale == ORIGINAL else seg.s

    def domain(self) -> HybridTimeDomain:
        ivals = []
        for seg in self.segments:
            ax = self.axis(seg)
            ivals.append((float(ax[0]), float(ax[-1]), seg.j))
        return HybridTimeDomain(tuple(ivals))

    @property
    def jump_count(self) -> int:
        return len(self.segments) - 1

    def final_state(self) -> np.ndarray:
        return self.segments[-1].x[-1].copy()

    def rows(self):
        """Yield (t, s, j, q, tau, rho, mu, x) per sample."""
        for seg in self.segments:
            rho = seg.rho if seg.rho is not None else [None] * len(seg.t)
            for i in range(len(seg.t)):
                yield (
                    float(seg.t[i]),
                    float(seg.s[i]),
                    seg.j,
                    seg.q,
                    float(seg.tau[i]),
                    None if rho[i] is None else float(rho[i]),
                    float(seg.mu[i]),
                    seg.x[i],
                )

    def header(self):
        return ["t", "s", "j", "q", "tau", "rho", "mu"] + [f"x{i}" for i in range(self.n)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(self.header())
            for t, s, j, q, tau, rho, mu, x in self.rows():
                row = [f"{t:.17g}", f"{s:.17g}", j, q, f"{tau:.17g}"]
                row.append("" if rho is None else f"{rho:.17g}")
                row.append(f"{mu:.17g}")
                row.extend(f"{xi:.17g}" for xi in x)
                writer.writerow(row)

    def to_json(self, path) -> None:
        doc = {
            "scale": self.scale,
            "columns": self.header(),
            "rows": [
                [t, s, j, q, tau, rho, mu, *[float(v) for v in x]]
                for t, s, j, q, tau, rho, mu, x in self.rows()
            ],
        }
        with open(path, "w") as f:
            json.dump(doc, f)
            f.write("\n")


@dataclass
class HybridSystemDef:
    """Plant data: per-mode flow field, reset map, guards, and input.

    flow(x, u, tau, q, mu) returns the x-derivative in the *dilated* scale
    (the normalized mode field); the original-scale field is gain * flow.
    reset(x, q) is the state reset applied at a switch out of mode q.
    Guards receive (x, tau, rho); defaults enforce tau >= 1 at jumps and the
    automaton boxes during flows.
    input_signal maps original time to the exogenous input (None = no input).
    """

    n: int
    flow: Callable
    reset: Callable = None
    modes: tuple = (1,)
    unstable: frozenset = frozenset()
    input_signal: Optional[Callable] = None
    flow_guard: Optional[Callable] = None
    jump_guard: Optional[Callable] = None

    def __post_init__(self):
        if self.reset is None:
            self.reset = lambda x, q: x

    def jump_map(self, state: np.ndarray, q: int) -> np.ndarray:
        """Full-state reset: (x, tau[, rho]) -> (R_q(x), tau - 1[, rho])."""
        state = np.asarray(state, dtype=float)
        x, tail = state[: self.n], state[self.n :]
        out = np.concatenate([np.asarray(self.reset(x, q), dtype=float), tail])
        out[self.n] = state[self.n] - 1.0
        return out


def _default_jump_guard(n, tol=1e-6):
    def guard(state):
        return state[n] >= 1.0 - tol

    return guard


def apply_jump(system: HybridSystemDef, state, q: int) -> np.ndarray:
    """Apply the jump map after checking the jump guard.

    ``state`` is (x, tau[, rho]); raises GuardError outside the jump set.
    """
    state = np.asarray(state, dtype=float)
    guard = system.jump_guard or _default_jump_guard(system.n)
    if not guard(state):
        raise GuardError(f"jump requested outside the jump set (tau={state[system.n]})")
    return system.jump_map(state, q)


def _as_rhs(field):
    def rhs(t, y):
        return np.asarray(field(t, y), dtype=float)

    return rhs


def integrate_flow(field, state0, interval, config: SolverConfig, t_eval=None):
    """Integrate y' = field(t, y) over [a, b]; returns (times, states).

    states has one row per sample.  Raises FlowIntegrationError on step
    failure or when the state leaves the finite range (the expected outcome
    when integrating the raw gain too close to its terminal time).
    """
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise DomainError("interval must satisfy b > a")
    y0 = np.atleast_1d(np.asarray(state0, dtype=float))
    if not np.all(np.isfinite(y0)):
        raise FlowIntegrationError("initial state is not finite")
    if t_eval is None:
        n_pts = max(config.min_segment_points, int(math.ceil((b - a) * config.points_per_unit)) + 1)
        t_eval = np.linspace(a, b, n_pts)
    else:
        t_eval = np.asarray(t_eval, dtype=float)

    rhs = _as_rhs(field)
    if config.method == "rk45":
        sol = solve_ivp(rhs, (a, b), y0, method="RK45", rtol=config.rtol, atol=config.atol, t_eval=t_eval)
        if not sol.success:
            raise FlowIntegrationError(f"adaptive step control failed: {sol.message}")
        ys = sol.y.T
    else:
        ys = np.empty((len(t_eval), y0.size))
        y = y0.copy()
        t_prev = a
        for i, tk in enumerate(t_eval):
            if tk > t_prev:
                n_sub = max(1, int(math.ceil((tk - t_prev) / config.step)))
                h = (tk - t_prev) / n_sub
                for _ in range(n_sub):
                    k1 = rhs(t_prev, y)
                    k2 = rhs(t_prev + 0.5 * h, y + 0.5 * h * k1)
                    k3 = rhs(t_prev + 0.5 * h, y + 0.5 * h * k2)
                    k4 = rhs(t_prev + h, y + h * k3)
                    y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                    t_prev += h
                t_prev = tk
            ys[i] = y
    if not np.all(np.isfinite(ys)):
        raise FlowIntegrationError("state became non-finite during flow integration")
    return t_eval, ys


@dataclass
class _AutomatonSlice:
    """Closed-form dwell/monitor trajectories on one inter-jump segment."""

    s0: float
    tau0: float
    rho0: Optional[float]
    tau_d: float
    N0: float
    tau_a: Optional[float]
    T0: Optional[float]
    unstable_mode: bool

    def tau(self, s):
        return np.minimum(self.N0, self.tau0 + (np.asarray(s) - self.s0) / self.tau_d)

    def rho(self, s):
        if self.rho0 is None:
            return None
        ds = np.asarray(s) - self.s0
        if self.unstable_mode:
            return np.maximum(0.0, self.rho0 - (1.0 - 1.0 / self.tau_a) * ds)
        return np.minimum(self.T0, self.rho0 + ds / self.tau_a)


def simulate(
    system: HybridSystemDef,
    x0,
    schedule: JumpSchedule,
    horizon: float,
    scale: str,
    params: BlowUpParams,
    config: SolverConfig = SolverConfig(),
) -> HybridArc:
    """Run the hybrid system along a jump schedule up to an original-time horizon.

    The schedule's switch instants (original scale) split the run into flow
    segments; at each instant the jump map fires and the mode advances.  With
    ``scale == "dilated"`` the segments are integrated in dilated time and the
    arc is indexed by s; with ``scale == "original"`` integration runs in t
    directly.  Identical sampling grids (uniform in dilated time) are used in
    both scales.
    """
    if scale not in (ORIGINAL, DILATED):
        raise DomainError(f"unknown scale {scale!r}")
    ups = terminal_time(params)
    if not 0.0 < horizon <= (1.0 - config.eps_term) * ups:
        raise ScheduleError(
            f"horizon must lie in (0, {(1.0 - config.eps_term) * ups:.6g}] "
            "in the original scale"
        )
    times = list(schedule.times)
    if any(t >= horizon for t in times):
        raise ScheduleError("jump schedule extends beyond the horizon")
    s_end = dilate(params, horizon, eps_term=config.eps_term)
    if s_end > config.s_max:
        raise ScheduleError(f"dilated horizon {s_end:.3g} exceeds s_max={config.s_max:.3g}")

    s_events = [dilate(params, t, eps_term=config.eps_term) for t in times]
    s_bounds = [0.0] + s_events + [s_end]
    mode_seq = [schedule.initial_mode] + list(schedule.modes)

    has_rho = schedule.aat is not None
    tau_now = schedule.tau0
    rho_now = schedule.rho0 if has_rho else None
    x_now = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x_now.size != system.n:
        raise DomainError(f"initial state has dimension {x_now.size}, expected {system.n}")

    u_of_t = system.input_signal or (lambda t: 0.0)
    segments = []
    for j in range(len(mode_seq)):
        s_a, s_b = s_bounds[j], s_bounds[j + 1]
        q = mode_seq[j]
        sl = _AutomatonSlice(
            s0=s_a,
            tau0=tau_now,
            rho0=rho_now,
            tau_d=schedule.adt.tau_d,
            N0=schedule.adt.N0,
            tau_a=schedule.aat.tau_a if has_rho else None,
            T0=schedule.aat.T0 if has_rho else None,
            unstable_mode=q in schedule.unstable,
        )
        n_pts = max(
            config.min_segment_points,
            int(math.ceil((s_b - s_a) * config.points_per_unit)) + 1,
        )
        s_grid = np.linspace(s_a, s_b, n_pts)
        t_grid = np.asarray(contract(params, s_grid), dtype=float)

        if scale == DILATED:

            def rhs(s, x, _sl=sl, _q=q):
                mu = normalized_gain(params, s)
                return system.flow(x, u_of_t(float(contract(params, s))), float(_sl.tau(s)), _q, mu)

            _, xs = integrate_flow(rhs, x_now, (s_a, s_b), config, t_eval=s_grid)
            mu_col = normalized_gain(params, s_grid)
        else:
            t_a, t_b = float(t_grid[0]), float(t_grid[-1])

            def rhs(t, x, _sl=sl, _q=q):
                mu = gain(params, t, eps_term=0.0)
                s_here = dilate(params, t, eps_term=0.0)
                return mu * np.asarray(
                    system.flow(x, u_of_t(float(t)), float(_sl.tau(s_here)), _q, mu), dtype=float
                )

            t_eval = t_grid.copy()
            t_eval[0], t_eval[-1] = t_a, t_b
            _, xs = integrate_flow(rhs, x_now, (t_a, t_b), config, t_eval=t_eval)
            mu_col = gain(params, t_grid, eps_term=0.0)

        tau_col = np.asarray(sl.tau(s_grid), dtype=float)
        rho_col = sl.rho(s_grid)
        if system.flow_guard is not None:
            for i in range(len(s_grid)):
                st = np.concatenate([xs[i], [tau_col[i]], [] if rho_col is None else [rho_col[i]]])
                if not system.flow_guard(st):
                    raise GuardError(f"flow left the flow set at sample {i} of segment {j}")
        segments.append(
            ArcSegment(
                j=j,
                q=q,
                t=t_grid,
                s=s_grid,
                x=np.atleast_2d(xs),
                tau=tau_col,
                mu=np.asarray(mu_col, dtype=float),
                rho=None if rho_col is None else np.asarray(rho_col, dtype=float),
            )
        )

        if j < len(mode_seq) - 1:
            tail = [tau_col[-1]] if rho_col is None else [tau_col[-1], rho_col[-1]]
            state = np.concatenate([xs[-1], tail])
            state_plus = apply_jump(system, state, q)
            x_now = state_plus[: system.n]
            tau_now = float(state_plus[system.n])
            rho_now = float(state_plus[system.n + 1]) if has_rho else None

    return HybridArc(segments=segments, scale=scale, params=params, n=system.n)


def map_time_scale(arc: HybridArc, params: BlowUpParams, direction: str) -> HybridArc:
    """Map an arc between the original and dilated scales.

    ``direction == "dilate"`` sends an original-scale arc to the dilated
    scale, ``"contract"`` the reverse.  The jump structure and sample values
    are unchanged; only the time axes are transformed.
    """
    if direction not in ("dilate", "contract"):
        raise DomainError(f"unknown direction {direction!r}")
    src = ORIGINAL if direction == "dilate" else DILATED
    if arc.scale != src:
        raise DomainError(f"arc is in scale {arc.scale!r}; direction {direction!r} needs {src!r}")
    new_segments = []
    for seg in arc.segments:
        if direction == "dilate":
            s_new = np.asarray(dilate(params, seg.t), dtype=float)
            new_segments.append(replace(seg, t=seg.t.copy(), s=s_new, x=seg.x.copy()))
        else:
            t_new = np.asarray(contract(params, seg.s), dtype=float)
            new_segments.append(replace(seg, t=t_new, s=seg.s.copy(), x=seg.x.copy()))
    return HybridArc(
        segments=new_segments,
        scale=DILATED if direction == "dilate" else ORIGINAL,
        params=params,
        n=arc.n,
    )
