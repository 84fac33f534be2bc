"""Unit and property tests for the blow-up gain and its time transforms."""

import math

import numpy as np
import pytest

from pt_hybrid.blowup import (
    BlowUpParams,
    contract,
    dilate,
    gain,
    normalized_gain,
    omega,
    terminal_time,
)
from pt_hybrid.errors import DomainError

from oracles import (
    dilate_by_quadrature,
    finite_escape_time_rk4,
    gain_ode_rk4,
    invert_increasing,
    max_rel_err,
    normalized_gain_ode_rk4,
)

K_GRID = [1.0, 1.5, 2.0, 3.0, 4.0]


class TestParams:
    def test_invariants_enforced(self):
        with pytest.raises(DomainError):
            BlowUpParams(T=0.0)
        with pytest.raises(DomainError):
            BlowUpParams(T=1.0, k=0.5)
        with pytest.raises(DomainError):
            BlowUpParams(T=1.0, k=1.0, mu0=0.9)

    def test_terminal_time_values(self):
        assert terminal_time(BlowUpParams(10, 1, 1)) == pytest.approx(10.0, abs=0)
        # 10 * 4**(-1/2) = 5; cross-checked against the RK4 escape locator.
        p = BlowUpParams(10, 2, 4)
        assert terminal_time(p) == pytest.approx(5.0, rel=1e-15)
        assert finite_escape_time_rk4(10, 2, 4) == pytest.approx(5.0, abs=2e-3)
        assert terminal_time(BlowUpParams(1, 3, 1)) == pytest.approx(1.0, abs=0)


class TestGain:
    def test_initial_value(self):
        assert gain(BlowUpParams(10, 1, 1), 0.0) == pytest.approx(1.0, abs=0)

    @pytest.mark.parametrize(
        "T,k,mu0,t",
        [(10, 1, 1, 5.0), (10, 2, 1, 5.0), (10, 1.5, 1, 3.0), (7, 3, 2, 1.5)],
    )
    def test_matches_rk4_oracle(self, T, k, mu0, t):
        p = BlowUpParams(T, k, mu0)
        expected = gain_ode_rk4(T, k, mu0, t)
        assert abs(gain(p, t) - expected) <= 1e-8 * max(1.0, expected)

    def test_known_values(self):
        assert gain(BlowUpParams(10, 1, 1), 5.0) == pytest.approx(2.0, rel=1e-14)
        assert gain(BlowUpParams(10, 2, 1), 5.0) == pytest.approx(4.0, rel=1e-14)

    def test_domain_errors(self):
        p = BlowUpParams(10, 1, 1)
        with pytest.raises(DomainError):
            gain(p, -0.1)
        with pytest.raises(DomainError):
            gain(p, 10.0)
        with pytest.raises(DomainError):
            gain(p, 10.0 * (1 - 1e-8))  # inside [0, terminal) but beyond the clip

    def test_strictly_increasing_and_at_least_one(self):
        for k in K_GRID:
            p = BlowUpParams(10, k, 1.3)
            ts = np.linspace(0.0, 0.999 * terminal_time(p), 400)
            g = gain(p, ts)
            assert np.all(g >= 1.0)
            assert np.all(np.diff(g) > 0.0)


class TestNormalizedGain:
    def test_initial_value(self):
        assert normalized_gain(BlowUpParams(10, 1, 1), 0.0) == pytest.approx(1.0, abs=0)

    def test_k1_exponential(self):
        assert normalized_gain(BlowUpParams(10, 1, 1), 10.0) == pytest.approx(math.e, rel=1e-14)

    def test_k2_closed_form(self):
        # ((1 * 10 / 10) + 1)**2 = 4
        assert normalized_gain(BlowUpParams(10, 2, 1), 10.0) == pytest.approx(4.0, rel=1e-14)

    @pytest.mark.parametrize("k", K_GRID)
    def test_matches_rk4_oracle(self, k):
        p = BlowUpParams(10, k, 1.0)
        for s in (0.5, 4.0, 10.0):
            expected = normalized_gain_ode_rk4(10, k, 1.0, s)
            assert abs(normalized_gain(p, s) - expected) <= 1e-8 * max(1.0, expected)

    def test_nondecreasing_and_at_least_one(self):
        for k in K_GRID:
            p = BlowUpParams(3, k, 2.0)
            ss = np.linspace(0.0, 50.0, 300)
            g = normalized_gain(p, ss)
            assert np.all(g >= 1.0)
            assert np.all(np.diff(g) >= 0.0)


class TestOmega:
    def test_coincident_arguments(self):
        for k in K_GRID:
            assert omega(BlowUpParams(10, k, 1), 3.0, 3.0) == 0.0

    def test_k1_log_form(self):
        assert omega(BlowUpParams(10, 1, 1), 2.0, 1.0) == pytest.approx(10 * math.log(2), rel=1e-14)

    def test_k1_limit_of_k_above(self):
        # numeric limit of the k > 1 closed form as k -> 1+
        val_above = omega(BlowUpParams(10, 1 + 1e-7, 1), 2.0, 1.0)
        assert abs(val_above - 10 * math.log(2)) <= 1e-6 * 10 * math.log(2)

    def test_k2_value(self):
        # (10/2) * ((2 - 1) / 0.5) = 10, and equals dilate(t=5) for k=2
        p = BlowUpParams(10, 2, 1)
        assert omega(p, 4.0, 1.0) == pytest.approx(10.0, rel=1e-14)
        assert omega(p, 4.0, 1.0) == pytest.approx(dilate(p, 5.0), rel=1e-12)

    def test_additivity(self):
        rng = np.random.default_rng(7)
        for k in K_GRID:
            p = BlowUpParams(5, k, 1)
            a, b, c = np.sort(1.0 + 50.0 * rng.random(3))
            lhs = omega(p, c, a)
            rhs = omega(p, c, b) + omega(p, b, a)
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_domain_errors(self):
        p = BlowUpParams(10, 2, 1)
        with pytest.raises(DomainError):
            omega(p, 2.0, 0.5)
        with pytest.raises(DomainError):
            omega(p, 1.0, 2.0)

    def test_k1_continuity_on_grid(self):
        # |omega at k = 1 + 1e-6 minus omega at k = 1| <= 1e-4 over a (b, a) grid
        pa = BlowUpParams(10, 1 + 1e-6, 1)
        pb = BlowUpParams(10, 1, 1)
        bs = np.linspace(1.0, 200.0, 25)
        for b in bs:
            for a in np.linspace(1.0, b, 7):
                assert abs(omega(pa, b, a) - omega(pb, b, a)) <= 1e-4


class TestDilateContract:
    def test_dilate_at_zero(self):
        for k in K_GRID:
            assert dilate(BlowUpParams(10, k, 1.7), 0.0) == 0.0

    def test_dilate_oracle_values(self):
        p2 = BlowUpParams(10, 2, 1)
        assert dilate(p2, 5.0) == pytest.approx(dilate_by_quadrature(10, 2, 1, 5.0), abs=1e-8)
        assert dilate(p2, 5.0) == pytest.approx(10.0, rel=1e-13)
        p1 = BlowUpParams(10, 1, 1)
        assert dilate(p1, 5.0) == pytest.approx(dilate_by_quadrature(10, 1, 1, 5.0), abs=1e-8)
        assert dilate(p1, 5.0) == pytest.approx(10 * math.log(2), rel=1e-13)

    def test_contract_at_zero(self):
        for k in K_GRID:
            assert contract(BlowUpParams(10, k, 1.7), 0.0) == 0.0

    def test_contract_oracle_values(self):
        p1 = BlowUpParams(10, 1, 1)
        target = 10 * math.log(2)
        via_bisect = invert_increasing(lambda t: dilate(p1, t), target, 0.0, 9.99)
        assert contract(p1, target) == pytest.approx(5.0, abs=1e-9)
        assert contract(p1, target) == pytest.approx(via_bisect, abs=1e-9)
        p2 = BlowUpParams(10, 2, 1)
        # 10 * (1 - (1 + 1)**(-1)) = 5
        assert contract(p2, 10.0) == pytest.approx(5.0, abs=1e-9)

    @pytest.mark.parametrize("k", K_GRID)
    def test_round_trip(self, k):
        p = BlowUpParams(10, k, 1.2)
        ups = terminal_time(p)
        rng = np.random.default_rng(42)
        ts = rng.uniform(0.0, 0.999 * ups, 1000)
        back = contract(p, dilate(p, ts))
        assert np.max(np.abs(back - ts)) <= 1e-9 * ups

    @pytest.mark.parametrize("k", K_GRID)
    def test_derivative_is_gain(self, k):
        p = BlowUpParams(10, k, 1.2)
        ups = terminal_time(p)
        h = 1e-6 * ups
        ts = np.linspace(h, 0.9 * ups, 200)
        fd = (dilate(p, ts + h) - dilate(p, ts - h)) / (2 * h)
        assert max_rel_err(fd, gain(p, ts)) <= 1e-5

    @pytest.mark.parametrize("k", K_GRID)
    def test_increment_identity(self, k):
        p = BlowUpParams(10, k, 1.5)
        ups = terminal_time(p)
        rng = np.random.default_rng(3)
        for _ in range(50):
            t1, t2 = np.sort(rng.uniform(0.0, 0.99 * ups, 2))
            inc = dilate(p, t2) - dilate(p, t1)
            om = omega(p, gain(p, t2), gain(p, t1))
            assert abs(inc - om) <= 1e-9 * max(1.0, abs(inc))

    @pytest.mark.parametrize("k", [2.0, 3.0, 1.0])
    def test_large_T_linear_limit(self, k):
        # As T grows the dilation becomes linear with slope mu0 (for every k,
        # by the binomial expansion of the explicit transform; the quadrature
        # oracle agrees).  At mu0 = 1 the leading finite-T correction is
        # exactly (k/2) t^2 / T, so the deviation net of it must be tiny;
        # for k = 3, t = 100 that correction alone is 1.5e-4 * t.
        p = BlowUpParams(1e6, k, 1.0)
        ts = np.linspace(1.0, 100.0, 50)
        rel_dev = np.abs(dilate(p, ts) - ts) / ts
        first_order = 0.5 * k * ts / 1e6
        assert np.max(rel_dev - first_order) <= 1e-5
        assert np.max(rel_dev) <= 1e-4 + 0.5 * k * 100.0 / 1e6
        mid = 50.0
        assert dilate(p, mid) == pytest.approx(
            dilate_by_quadrature(1e6, k, 1.0, mid), rel=1e-10
        )

    @pytest.mark.parametrize("k", [2.0, 3.0, 1.0])
    def test_large_T_slope_is_mu0(self, k):
        # With mu0 > 1 the limiting slope is mu0 itself; use a larger T so
        # the finite-T correction (k/2) mu0^(1+1/k) t^2 / T is negligible.
        p = BlowUpParams(1e8, k, 2.0)
        ts = np.linspace(1.0, 100.0, 50)
        assert np.max(np.abs(dilate(p, ts) - 2.0 * ts) / ts) <= 1e-4

    @pytest.mark.parametrize("k", K_GRID)
    def test_normalized_matches_gain_through_dilation(self, k):
        p = BlowUpParams(10, k, 1.4)
        ts = np.linspace(0.0, 0.98 * terminal_time(p), 150)
        lhs = normalized_gain(p, dilate(p, ts))
        assert max_rel_err(lhs, gain(p, ts)) <= 1e-8

    def test_contract_derivative_identity(self):
        p = BlowUpParams(10, 2.5, 1.1)
        ss = np.linspace(0.1, 30.0, 60)
        h = 1e-6
        fd = (contract(p, ss + h) - contract(p, ss - h)) / (2 * h)
        expected = 1.0 / gain(p, contract(p, ss))
        assert max_rel_err(fd, expected) <= 1e-5
