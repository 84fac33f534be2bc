"""Tests for flow integration, jumps, simulation, and time-scale mapping."""

import math

import numpy as np
import pytest

from pt_hybrid.blowup import BlowUpParams, contract, dilate, gain, normalized_gain, terminal_time
from pt_hybrid.errors import DomainError, FlowIntegrationError, GuardError, ScheduleError
from pt_hybrid.hybrid import (
    HybridArc,
    HybridSystemDef,
    HybridTimeDomain,
    SolverConfig,
    apply_jump,
    htd_stats,
    integrate_flow,
    map_time_scale,
    simulate,
)
from pt_hybrid.switching import AdtParams, GeneratorPolicy, JumpSchedule, generate_signal

P1 = BlowUpParams(10, 1, 1)
CFG = SolverConfig()


def scalar_reset_system():
    """Scalar plant with normalized field -x + u and halving resets."""
    return HybridSystemDef(
        n=1,
        flow=lambda x, u, tau, q, mu: -x + u,
        reset=lambda x, q: 0.5 * x,
        modes=(1,),
    )


def unit_schedule(n_jumps, params=P1, tau_d=1.0, N0=1.0):
    times = tuple(contract(params, i * tau_d) for i in range(1, n_jumps + 1))
    return JumpSchedule(
        times=times,
        modes=(1,) * n_jumps,
        initial_mode=1,
        adt=AdtParams(tau_d, N0),
    )


class TestHtd:
    def test_single_interval(self):
        dom = HybridTimeDomain(((0.0, 3.0, 0),))
        assert htd_stats(dom) == (3.0, 0, 3.0)

    def test_two_intervals(self):
        dom = HybridTimeDomain(((0.0, 1.0, 0), (1.0, 2.0, 1)))
        assert htd_stats(dom) == (2.0, 1, 3.0)

    def test_bad_structure_rejected(self):
        with pytest.raises(DomainError):
            HybridTimeDomain(((0.0, 1.0, 0), (1.5, 2.0, 1)))
        with pytest.raises(DomainError):
            HybridTimeDomain(((0.0, 1.0, 0), (1.0, 2.0, 2)))


class TestIntegrateFlow:
    def test_zero_field_constant(self):
        ts, ys = integrate_flow(lambda t, y: np.zeros_like(y), [3.5], (0.0, 2.0), CFG)
        assert np.allclose(ys, 3.5, atol=0)

    def test_exponential_decay(self):
        ts, ys = integrate_flow(lambda t, y: -y, [1.0], (0.0, 1.0), CFG)
        assert abs(ys[-1, 0] - math.exp(-1.0)) <= 1e-8

    def test_gain_ode(self):
        ts, ys = integrate_flow(lambda t, y: 0.1 * y**2, [1.0], (0.0, 5.0), CFG)
        assert abs(ys[-1, 0] - gain(P1, 5.0)) <= 1e-7

    def test_rk4_matches_rk45(self):
        cfg4 = SolverConfig(method="rk4", step=1e-3)
        _, y4 = integrate_flow(lambda t, y: -y, [1.0], (0.0, 1.0), cfg4)
        assert abs(y4[-1, 0] - math.exp(-1.0)) <= 1e-9

    def test_nonfinite_detected(self):
        with pytest.raises(FlowIntegrationError):
            # raw gain ODE driven past its escape time
            integrate_flow(lambda t, y: 0.1 * y**2, [1.0], (0.0, 10.5), CFG)


class TestApplyJump:
    def test_identity_reset(self):
        sys = HybridSystemDef(n=2, flow=lambda x, u, tau, q, mu: -x)
        out = apply_jump(sys, [1.0, 2.0, 1.0], q=1)
        assert np.allclose(out, [1.0, 2.0, 0.0])

    def test_halving_reset(self):
        out = apply_jump(scalar_reset_system(), [4.0, 1.0], q=1)
        assert np.allclose(out, [2.0, 0.0])

    def test_momentum_restart_reset(self):
        sys = HybridSystemDef(
            n=4,
            flow=lambda x, u, tau, q, mu: np.zeros(4),
            reset=lambda x, q: np.concatenate([x[:2], x[:2]]),
        )
        out = apply_jump(sys, [1.0, 2.0, 0.0, 0.0, 1.2], q=1)
        assert np.allclose(out[:4], [1.0, 2.0, 1.0, 2.0])

    def test_guard_violation(self):
        with pytest.raises(GuardError):
            apply_jump(scalar_reset_system(), [4.0, 0.3], q=1)


class TestSimulate:
    def test_constant_arc_no_jumps(self):
        sys = HybridSystemDef(n=1, flow=lambda x, u, tau, q, mu: np.zeros(1))
        sched = JumpSchedule((), (), 1, AdtParams(1.0, 1.0))
        arc = simulate(sys, [2.0], sched, 5.0, "dilated", P1, CFG)
        assert arc.jump_count == 0
        assert np.allclose(arc.segments[0].x, 2.0)
        assert len(arc.segments) == 1

    def test_scalar_reset_decay_and_halving(self):
        horizon = contract(P1, 6.0)
        arc = simulate(scalar_reset_system(), [1.0], unit_schedule(3), horizon, "dilated", P1, CFG)
        assert arc.jump_count == 3
        for seg in arc.segments:
            vals = seg.x[:, 0]
            assert np.all(np.diff(vals) < 0.0)  # strictly decaying along flows
            # exponential closed form along each flow interval
            assert np.allclose(vals, vals[0] * np.exp(-(seg.s - seg.s[0])), atol=1e-8)
        x_ends = [seg.x[-1, 0] for seg in arc.segments]
        x_starts = [seg.x[0, 0] for seg in arc.segments]
        for e, s_next in zip(x_ends[:-1], x_starts[1:]):
            assert s_next == pytest.approx(0.5 * e, rel=1e-12)

    def test_gain_follows_normalized_gain_in_dilated_scale(self):
        arc = simulate(scalar_reset_system(), [1.0], unit_schedule(2), 5.0, "dilated", P1, CFG)
        for seg in arc.segments:
            assert np.allclose(seg.mu, normalized_gain(P1, seg.s), rtol=1e-14)

    def test_domain_sup_t_below_terminal(self):
        cfg = SolverConfig()
        arc = simulate(scalar_reset_system(), [1.0], unit_schedule(2), 0.999 * 10, "original", P1, cfg)
        sup_t, sup_j, _ = htd_stats(arc.domain())
        assert sup_t <= terminal_time(P1)
        assert sup_j == 2

    def test_schedule_outside_horizon_rejected(self):
        sched = JumpSchedule((6.0,), (1,), 1, AdtParams(1.0, 1.0))
        with pytest.raises(ScheduleError):
            simulate(scalar_reset_system(), [1.0], sched, 5.0, "dilated", P1, CFG)

    def test_horizon_beyond_clip_rejected(self):
        sched = JumpSchedule((), (), 1, AdtParams(1.0, 1.0))
        with pytest.raises(ScheduleError):
            simulate(scalar_reset_system(), [1.0], sched, 10.0, "original", P1, CFG)

    def test_deterministic_bit_identical(self):
        a1 = simulate(scalar_reset_system(), [1.0], unit_schedule(3), 9.0, "dilated", P1, CFG)
        a2 = simulate(scalar_reset_system(), [1.0], unit_schedule(3), 9.0, "dilated", P1, CFG)
        for s1, s2 in zip(a1.segments, a2.segments):
            assert np.array_equal(s1.x, s2.x)
            assert np.array_equal(s1.s, s2.s)

    def test_two_scale_equivalence_scalar(self):
        horizon = contract(P1, 8.0)
        arc_d = simulate(scalar_reset_system(), [1.0], unit_schedule(5), horizon, "dilated", P1, CFG)
        arc_o = simulate(scalar_reset_system(), [1.0], unit_schedule(5), horizon, "original", P1, CFG)
        assert arc_d.jump_count == arc_o.jump_count
        mapped = map_time_scale(arc_d, P1, "contract")
        for sd, so in zip(mapped.segments, arc_o.segments):
            assert np.allclose(sd.t, so.t, atol=1e-9)
            assert np.max(np.abs(sd.x - so.x)) <= 10 * CFG.rtol * (1.0 + np.max(np.abs(so.x)))


class TestMapTimeScale:
    def test_single_point_segmentless_map(self):
        arc = simulate(
            scalar_reset_system(),
            [1.0],
            JumpSchedule((), (), 1, AdtParams(1.0, 1.0)),
            contract(P1, 1e-9),
            "original",
            P1,
            CFG,
        )
        mapped = map_time_scale(arc, P1, "dilate")
        assert mapped.scale == "dilated"
        assert mapped.segments[0].s[0] == 0.0

    def test_interval_endpoint_mapping(self):
        p2 = BlowUpParams(10, 2, 1)
        sys = scalar_reset_system()
        sched = JumpSchedule((), (), 1, AdtParams(1.0, 1.0))
        arc = simulate(sys, [1.0], sched, 5.0, "original", p2, CFG)
        mapped = map_time_scale(arc, p2, "dilate")
        dom = mapped.domain()
        assert dom.intervals[0][0] == 0.0
        assert dom.intervals[0][1] == pytest.approx(10.0, rel=1e-12)

    def test_round_trip_preserves_structure(self):
        arc = simulate(scalar_reset_system(), [1.0], unit_schedule(4), 9.5, "original", P1, CFG)
        back = map_time_scale(map_time_scale(arc, P1, "dilate"), P1, "contract")
        assert back.jump_count == arc.jump_count
        for s1, s2 in zip(arc.segments, back.segments):
            assert np.max(np.abs(s1.t - s2.t)) <= 1e-9
            assert np.array_equal(s1.x, s2.x)
            assert len(s1.t) == len(s2.t)

    def test_wrong_source_scale_rejected(self):
        arc = simulate(scalar_reset_system(), [1.0], unit_schedule(1), 9.0, "dilated", P1, CFG)
        with pytest.raises(DomainError):
            map_time_scale(arc, P1, "dilate")


class TestArcExport:
    def test_csv_schema(self, tmp_path):
        arc = simulate(scalar_reset_system(), [1.0], unit_schedule(2), 9.0, "dilated", P1, CFG)
        path = tmp_path / "arc.csv"
        arc.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,s,j,q,tau,rho,mu,x0"
        first = lines[1].split(",")
        assert first[5] == ""  # no monitor state: rho column blank
        assert float(first[0]) == 0.0

    def test_json_mirror(self, tmp_path):
        import json

        arc = simulate(scalar_reset_system(), [1.0], unit_schedule(1), 9.0, "dilated", P1, CFG)
        path = tmp_path / "arc.json"
        arc.to_json(path)
        doc = json.loads(path.read_text())
        assert doc["columns"][:4] == ["t", "s", "j", "q"]
        assert len(doc["rows"]) == sum(len(seg.t) for seg in arc.segments)


class TestGeneratedScheduleIntegration:
    def test_generator_schedule_runs(self):
        adt = AdtParams(0.5, 2.0)
        sig, sched = generate_signal(
            P1, adt, None, GeneratorPolicy(seed=5, mode_order="random", trigger="randomized"),
            9.0, modes=[1, 2, 3],
        )
        sys = HybridSystemDef(
            n=2,
            flow=lambda x, u, tau, q, mu: -q * x,
            modes=(1, 2, 3),
        )
        arc = simulate(sys, [1.0, -1.0], sched, 9.0, "dilated", P1, CFG)
        assert arc.jump_count == len(sched.times)
        assert np.all(np.abs(arc.final_state()) < 1.0)
