"""Independent numerical oracles used to pin expected values in the tests.

These deliberately avoid the closed forms in :mod:`pt_hybrid.blowup`: the
gain ODEs are integrated with a hand-rolled fixed-step RK4, dilations are
computed by quadrature of the gain, and inversions by bisection.  They stay
independent of the code paths they check.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad


def rk4(f, y0: float, t0: float, t1: float, n_steps: int = 20000) -> float:
    """Classic fixed-step RK4 for a scalar ODE y' = f(t, y)."""
    h = (t1 - t0) / n_steps
    t, y = t0, y0
    for _ in range(n_steps):
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y


def gain_ode_rk4(T: float, k: float, mu0: float, t: float, n_steps: int = 20000) -> float:
    """Integrate d(mu)/dt = (k/T) mu^(1+1/k) from mu(0) = mu0 up to time t."""
    return rk4(lambda _, mu: (k / T) * mu ** (1.0 + 1.0 / k), mu0, 0.0, t, n_steps)


def normalized_gain_ode_rk4(T: float, k: float, mu0: float, s: float, n_steps: int = 20000) -> float:
    """Integrate d(mu)/ds = (k/T) mu^(1/k) from mu(0) = mu0 up to dilated time s."""
    return rk4(lambda _, mu: (k / T) * mu ** (1.0 / k), mu0, 0.0, s, n_steps)


def dilate_by_quadrature(T: float, k: float, mu0: float, t: float) -> float:
    """Dilated time as the integral of the gain over [0, t]."""
    terminal = T * mu0 ** (-1.0 / k)

    def mu(tau):
        return (T / (terminal - tau)) ** k

    val, err = quad(mu, 0.0, t, limit=200)
    assert err < 1e-9 * max(1.0, abs(val))
    return val


def invert_increasing(fn, target: float, lo: float, hi: float, tol: float = 1e-13, it: int = 200) -> float:
    """Bisection inverse of a scalar increasing function."""
    flo, fhi = fn(lo) - target, fn(hi) - target
    assert flo <= 0.0 <= fhi
    for _ in range(it):
        mid = 0.5 * (lo + hi)
        if fn(mid) - target <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def finite_escape_time_rk4(T: float, k: float, mu0: float, cap: float = 1e9) -> float:
    """Locate the blow-up instant of the gain ODE by bisection on RK4 runs.

    Returns the time at which the RK4 solution first exceeds ``cap``; for the
    exact solution this approaches the terminal time as cap grows.
    """

    def reached(t):
        try:
            return gain_ode_rk4(T, k, mu0, t, n_steps=60000) > cap
        except OverflowError:
            return True

    lo, hi = 0.0, T * mu0 ** (-1.0 / k)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def max_rel_err(a, b, floor: float = 1e-300) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(b), floor)
    return float(np.max(np.abs(a - b) / scale))
