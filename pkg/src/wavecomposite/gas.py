r"""
Ideal polytropic gas in Lagrangian coordinates.

State variables are the specific volume ``v``, the velocity ``u`` and the
temperature ``theta``.  With gas constant ``R``, adiabatic exponent
``gamma`` and entropy constant ``A``

.. math::

    p = \frac{R\theta}{v} = A v^{-\gamma} e^{\frac{\gamma-1}{R}s},\qquad
    E = \frac{R\theta}{\gamma-1} + \frac{u^2}{2},\qquad
    s = \frac{R}{\gamma-1}\ln\frac{R\theta}{A} + R\ln v .

All functions accept scalars or numpy arrays and never clamp: a
non-positive volume or temperature raises :class:`DomainError`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError


@dataclass(frozen=True)
class GasParams:
    R: float = 1.0
    gamma: float = 5.0 / 3.0
    A: float = 1.0
    mu: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("R", "A", "mu", "kappa"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.gamma > 1:
            raise DomainError(f"gamma must exceed 1, got {self.gamma!r}")

    @property
    def cv(self) -> float:
        """Specific heat at constant volume, R/(gamma-1)."""
        return self.R / (self.gamma - 1.0)

    @property
    def max_diffusivity(self) -> float:
        """max(mu, kappa (gamma-1)/R), the coefficient in the diffusive step limit."""
        return max(self.mu, self.kappa * (self.gamma - 1.0) / self.R)


@dataclass(frozen=True)
class ThermoState:
    v: float
    u: float
    theta: float

    def __post_init__(self):
        if not (np.isfinite(self.v) and np.isfinite(self.u) and np.isfinite(self.theta)):
            raise DomainError(f"non-finite state {self!r}")
        if not self.v > 0:
            raise DomainError(f"specific volume must be positive, got {self.v!r}")
        if not self.theta > 0:
            raise DomainError(f"temperature must be positive, got {self.theta!r}")

    def as_tuple(self):
        return (self.v, self.u, self.theta)


def _check_positive(name, x):
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise DomainError(f"{name} must be positive")
    return arr


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def pressure(g: GasParams, v, theta):
    v = _check_positive("v", v)
    theta = _check_positive("theta", theta)
    return _scalar_or_array(g.R * theta / v)


def internal_energy(g: GasParams, theta):
    return _scalar_or_array(g.cv * np.asarray(theta, dtype=float))


def total_energy(g: GasParams, s: ThermoState | None = None, *, u=None, theta=None):
    """Total energy ``R theta/(gamma-1) + u^2/2``.

    Either pass a :class:`ThermoState` or the keyword arrays ``u`` and
    ``theta``.  The temperature is allowed to be zero here so that the pure
    kinetic limit can be evaluated.
    """
    if s is not None:
        u, theta = s.u, s.theta
    u = np.asarray(u, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise DomainError("temperature must be non-negative")
    return _scalar_or_array(g.cv * theta + 0.5 * u * u)


def temperature_from_energy(g: GasParams, u, E):
    """Invert ``E = cv theta + u^2/2`` for theta (no positivity check)."""
    u = np.asarray(u, dtype=float)
    return _scalar_or_array((np.asarray(E, dtype=float) - 0.5 * u * u) / g.cv)


def entropy(g: GasParams, v, theta):
    v = _check_positive("v", v)
    theta = _check_positive("theta", theta)
    return _scalar_or_array(g.cv * np.log(g.R * theta / g.A) + g.R * np.log(v))


def sound_speed_lagrangian(g: GasParams, v, theta):
    """sqrt(gamma p / v) = sqrt(gamma R theta) / v."""
    v = _check_positive("v", v)
    theta = _check_positive("theta", theta)
    return _scalar_or_array(np.sqrt(g.gamma * g.R * theta) / v)


def eigenvalue(g: GasParams, v, theta, family: int):
    if family not in (1, 2, 3):
        raise UsageError(f"family must be 1, 2 or 3, got {family!r}")
    c = sound_speed_lagrangian(g, v, theta)
    if family == 2:
        return _scalar_or_array(np.zeros_like(np.asarray(c)))
    return -c if family == 1 else c


# Isentropic (v, s) forms used by the rarefaction curves.  Along a curve of
# constant entropy s, lambda_3 = sqrt(K) v^{-(gamma+1)/2} with
# K = gamma A exp((gamma-1) s / R).

def _family_sign(family):
    if family == 1:
        return -1.0
    if family == 3:
        return 1.0
    raise UsageError(f"rarefaction family must be 1 or 3, got {family!r}")


def isentropic_K(g: GasParams, s):
    return g.gamma * g.A * np.exp((g.gamma - 1.0) * np.asarray(s, dtype=float) / g.R)


def pressure_vs(g: GasParams, v, s):
    v = _check_positive("v", v)
    return _scalar_or_array(g.A * v ** (-g.gamma) * np.exp((g.gamma - 1.0) * np.asarray(s) / g.R))


def theta_vs(g: GasParams, v, s):
    """Temperature on the isentrope s at volume v."""
    v = _check_positive("v", v)
    return _scalar_or_array(g.A / g.R * np.exp((g.gamma - 1.0) * np.asarray(s) / g.R) * v ** (1.0 - g.gamma))


def volume_ps(g: GasParams, p, s):
    """Volume on the isentrope s at pressure p."""
    p = _check_positive("p", p)
    return _scalar_or_array((g.A * np.exp((g.gamma - 1.0) * np.asarray(s) / g.R) / p) ** (1.0 / g.gamma))


def lambda_vs(g: GasParams, v, s, family: int):
    sign = _family_sign(family)
    v = _check_positive("v", v)
    return _scalar_or_array(sign * np.sqrt(isentropic_K(g, s)) * v ** (-0.5 * (g.gamma + 1.0)))


def volume_from_lambda(g: GasParams, lam, s, family: int):
    """Closed-form inverse of ``lambda_vs`` in v."""
    sign = _family_sign(family)
    lam = np.asarray(lam, dtype=float)
    if np.any(sign * lam <= 0):
        raise DomainError(f"lambda_{family} has the wrong sign for a positive volume")
    return _scalar_or_array((isentropic_K(g, s) / (lam * lam)) ** (1.0 / (g.gamma + 1.0)))


def curve_velocity_exact(g: GasParams, u_ref, v_ref, v, s, family: int):
    r"""Velocity on the i-rarefaction curve, ``u_ref - \int_{v_ref}^{v} lambda_i(eta, s) d eta``.

    Uses the elementary antiderivative of the power law.
    """
    sign = _family_sign(family)
    v = _check_positive("v", v)
    v_ref = _check_positive("v_ref", v_ref)
    e = 0.5 * (1.0 - g.gamma)
    integral = sign * np.sqrt(isentropic_K(g, s)) * (v ** e - v_ref ** e) / e
    return _scalar_or_array(u_ref - integral)
