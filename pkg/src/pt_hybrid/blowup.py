"""Blow-up gains and the time dilation/contraction they induce.

The gain family mu_k solves the scalar ODE

    d(mu)/dt = (k / T) * mu**(1 + 1/k),    mu(0) = mu0 >= 1,

whose solution mu_k(t) = (T / (terminal - t))**k escapes to infinity at the
terminal time ``terminal = T * mu0**(-1/k)``.  Normalizing the ODE by mu_k
gives the complete (no finite escape) gain ``normalized_gain`` evolving in
the dilated time scale.  ``dilate``/``contract`` convert between the bounded
original axis [0, terminal) and the unbounded dilated axis [0, inf); the
dilation has derivative mu_k(t) and its increments equal ``omega`` evaluated
at the gain values.

All functions accept scalars or numpy arrays for the time argument and are
pure, so they are safe for unrestricted concurrent use.  Forms near k = 1
are evaluated through dedicated log/exp branches (switched at ``K1_SWITCH``)
rather than through the k > 1 power formulas, which suffer catastrophic
cancellation there; powers with near-zero exponents use expm1/log1p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Below this value of k the analytic k = 1 (log/exp) branch is used.
K1_SWITCH = 1.0 + 1e-9

# Default terminal clipping: original-scale times must satisfy
# t <= (1 - eps_term) * terminal.
DEFAULT_EPS_TERM = 1e-6


@dataclass(frozen=True)
class BlowUpParams:
    """Parameters (T, k, mu0) of one blow-up gain.

    Attributes:
        T: time-scale constant, seconds, > 0.
        k: gain order, >= 1.
        mu0: initial gain value, >= 1.
    """

    T: float
    k: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        if not (self.T > 0.0):
            raise DomainError(f"T must be positive, got {self.T}")
        if not (self.k >= 1.0):
            raise DomainError(f"k must be >= 1, got {self.k}")
        if not (self.mu0 >= 1.0):
            raise DomainError(f"mu0 must be >= 1, got {self.mu0}")

    @property
    def rho(self) -> float:
        """Exponent (k - 1) / k appearing in the omega increments."""
        return (self.k - 1.0) / self.k


def terminal_time(params: BlowUpParams) -> float:
    """Finite escape time T * mu0**(-1/k) of the gain."""
    return params.T * params.mu0 ** (-1.0 / params.k)


def _check_original_time(params, t, eps_term):
    terminal = terminal_time(params)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("original-scale time must be nonnegative")
    if np.any(t > (1.0 - eps_term) * terminal):
        raise DomainError(
            f"original-scale time must stay below (1 - {eps_term:g}) * terminal "
            f"= {(1.0 - eps_term) * terminal:.6g}"
        )
    return t, terminal


def gain(params: BlowUpParams, t, eps_term: float = DEFAULT_EPS_TERM):
    """Blow-up gain mu_k(t) = (T / (terminal - t))**k on [0, terminal).

    Strictly increasing, with gain(params, 0) = mu0.  Raises DomainError for
    t < 0 or t beyond the (1 - eps_term) * terminal clip.
    """
    t, terminal = _check_original_time(params, t, eps_term)
    out = (params.T / (terminal - t)) ** params.k
    return float(out) if np.isscalar(t) or out.ndim == 0 else out


def normalized_gain(params: BlowUpParams, s):
    """Normalized gain in dilated time: solves d(mu)/ds = (k/T) mu**(1/k).

    Closed forms: mu0 * exp(s/T) for k = 1 and
    ((k-1) s / T + mu0**((k-1)/k))**(k/(k-1)) for k > 1.  Complete and
    nondecreasing on s >= 0.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise DomainError("dilated time must be nonnegative")
    if params.k < K1_SWITCH:
        out = params.mu0 * np.exp(s / params.T)
    else:
        k = params.k
        base = (k - 1.0) * s / params.T + params.mu0 ** params.rho
        out = base ** (k / (k - 1.0))
    return float(out) if out.ndim == 0 else out


def _omega_primitive(params: BlowUpParams, value):
    # Antiderivative phi with omega(b, a) = phi(b) - phi(a):
    # phi(v) = T * ln(v) for k = 1, (T/k) * (v**rho - 1)/rho otherwise,
    # evaluated as expm1(rho*log v)/rho for stability at small rho.
    value = np.asarray(value, dtype=float)
    if params.k < K1_SWITCH:
        return params.T * np.log(value)
    rho = params.rho
    return (params.T / params.k) * np.expm1(rho * np.log(value)) / rho


def omega(params: BlowUpParams, b, a):
    """Gain increment omega_k(b, a) >= 0 for 1 <= a <= b.

    Equals the dilated time elapsed while the gain grows from a to b; it is
    additive, omega(c, a) = omega(c, b) + omega(b, a), and zero iff a = b.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 1.0):
        raise DomainError("omega arguments must be >= 1")
    if np.any(b < a):
        raise DomainError("omega requires b >= a")
    out = _omega_primitive(params, b) - _omega_primitive(params, a)
    return float(out) if out.ndim == 0 else out


def dilate(params: BlowUpParams, t, eps_term: float = DEFAULT_EPS_TERM):
    """Map original time t in [0, terminal) to dilated time s >= 0.

    dilate(0) = 0, the map is strictly increasing with derivative equal to
    ``gain``, and it diverges as t approaches the terminal time.
    """
    t, _ = _check_original_time(params, t, eps_term)
    mu0, T, k = params.mu0, params.T, params.k
    # Single-log1p/expm1 forms of omega(gain(t), mu0); exact also for t ~ 0.
    w = np.log1p(-t * mu0 ** (1.0 / k) / T)
    if k < K1_SWITCH:
        out = -T * w
    else:
        out = T * mu0 ** params.rho / (k - 1.0) * np.expm1(-(k - 1.0) * w)
    return float(out) if out.ndim == 0 else out


def contract(params: BlowUpParams, s):
    """Inverse of ``dilate``: map dilated time s >= 0 into [0, terminal).

    contract(dilate(t)) = t; the derivative is 1 / gain(contract(s)).
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise DomainError("dilated time must be nonnegative")
    terminal = terminal_time(params)
    k = params.k
    if k < K1_SWITCH:
        out = -terminal * np.expm1(-s / params.T)
    else:
        w = np.log1p((k - 1.0) * s / (terminal * params.mu0))
        out = -terminal * np.expm1(w / (1.0 - k))
    return float(out) if out.ndim == 0 else out
