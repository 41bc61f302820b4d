"""
Exact Riemann solution of the Lagrangian Euler system for the
1-rarefaction / contact / 3-rarefaction pattern.

The intermediate states are found by a single scalar root-find in the
middle pressure ``p_mid``: the left state is followed down the 1-rarefaction
curve and the right state down the (backward) 3-rarefaction curve until the
velocities agree.  Both curves are isentropes, so only the velocity needs a
quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import gas
from .errors import DomainError, NumericError, PatternError
from .gas import GasParams, ThermoState

QUAD_EPSABS = 1e-12


@dataclass(frozen=True)
class EndStates:
    left: ThermoState
    right: ThermoState


@dataclass(frozen=True)
class WavePattern:
    ends: EndStates
    vm_left: float
    vm_right: float
    um: float
    thm_left: float
    thm_right: float
    s_left: float
    s_right: float
    delta: float

    @property
    def mid_left(self) -> ThermoState:
        return ThermoState(self.vm_left, self.um, self.thm_left)

    @property
    def mid_right(self) -> ThermoState:
        return ThermoState(self.vm_right, self.um, self.thm_right)

    def p_mid(self, g: GasParams) -> float:
        return g.R * self.thm_left / self.vm_left

    def fan_speeds(self, g: GasParams):
        """(lambda_1 at left, lambda_1 at mid-left, lambda_3 at mid-right, lambda_3 at right)."""
        L, R = self.ends.left, self.ends.right
        return (
            gas.eigenvalue(g, L.v, L.theta, 1),
            gas.eigenvalue(g, self.vm_left, self.thm_left, 1),
            gas.eigenvalue(g, self.vm_right, self.thm_right, 3),
            gas.eigenvalue(g, R.v, R.theta, 3),
        )


def _curve_integral(g, s, v_from, v_to, family):
    if v_from == v_to:
        return 0.0
    val, err = integrate.quad(
        lambda eta: gas.lambda_vs(g, eta, s, family),
        v_from, v_to, epsabs=QUAD_EPSABS, epsrel=1e-13, limit=200,
    )
    if not err <= 10 * QUAD_EPSABS + 1e-13 * abs(val):
        raise NumericError(f"curve quadrature error estimate {err:.3e} above tolerance", err)
    return val


def rarefaction_connect(g: GasParams, from_state: ThermoState, family: int, v_target: float,
                        from_side: str = "left") -> ThermoState:
    """State on the ``family``-rarefaction curve through ``from_state`` at volume ``v_target``.

    ``from_side`` says whether ``from_state`` is the state to the left or to
    the right of the wave; it fixes which direction in v is expansive.
    """
    if from_side not in ("left", "right"):
        raise DomainError(f"from_side must be 'left' or 'right', got {from_side!r}")
    if not v_target > 0:
        raise DomainError("target volume must be positive")
    v0 = from_state.v
    # v grows across a 1-rarefaction and shrinks across a 3-rarefaction (left to right)
    increasing = (family == 1) == (from_side == "left")
    if (increasing and v_target < v0) or (not increasing and v_target > v0):
        raise DomainError(
            f"v_target={v_target!r} is on the compressive side of the {family}-wave "
            f"(from {from_side} state with v={v0!r})")
    if v_target == v0:
        return from_state
    s = gas.entropy(g, from_state.v, from_state.theta)
    u = from_state.u - _curve_integral(g, s, v0, v_target, family)
    theta = gas.theta_vs(g, v_target, s)
    return ThermoState(v_target, u, theta)


def composite_end_states(g: GasParams, left: ThermoState, delta: float,
                         pressure_drop: float = 0.5) -> EndStates:
    """End states with ``|theta_- - theta_+| = delta`` inside the R1-CD-R3 region.

    The middle pressure is ``p_-(1 - pressure_drop*delta)`` and the right
    pressure equals the left one, so every wave strength is O(delta).
    """
    if delta < 0:
        raise DomainError("delta must be non-negative")
    if delta == 0:
        return EndStates(left, left)
    p_left = g.R * left.theta / left.v
    p_mid = p_left * (1.0 - pressure_drop * delta)
    if not p_mid > 0:
        raise DomainError("pressure_drop*delta must be below 1")
    s_left = gas.entropy(g, left.v, left.theta)
    vm_left = gas.volume_ps(g, p_mid, s_left)
    um = gas.curve_velocity_exact(g, left.u, left.v, vm_left, s_left, 1)
    theta_right = left.theta + delta
    p_right = p_left
    v_right = g.R * theta_right / p_right
    s_right = gas.entropy(g, v_right, theta_right)
    vm_right = gas.volume_ps(g, p_mid, s_right)
    u_right = gas.curve_velocity_exact(g, um, vm_right, v_right, s_right, 3)
    return EndStates(left, ThermoState(v_right, u_right, theta_right))


def solve_pattern(g: GasParams, ends: EndStates, rtol: float = 1e-12) -> WavePattern:
    L, R = ends.left, ends.right
    p_L = g.R * L.theta / L.v
    p_R = g.R * R.theta / R.v
    s_L = gas.entropy(g, L.v, L.theta)
    s_R = gas.entropy(g, R.v, R.theta)
    delta = abs(L.theta - R.theta)

    if L.u == R.u and p_L == p_R:
        # already satisfies the contact condition: zero-strength rarefactions
        return WavePattern(ends, L.v, R.v, L.u, L.theta, R.theta, s_L, s_R, delta)

    def vol_left(p):
        return L.v if p == p_L else gas.volume_ps(g, p, s_L)

    def vol_right(p):
        return R.v if p == p_R else gas.volume_ps(g, p, s_R)

    def mismatch(p):
        u1 = L.u - _curve_integral(g, s_L, L.v, vol_left(p), 1)
        u3 = R.u - _curve_integral(g, s_R, R.v, vol_right(p), 3)
        return u1 - u3

    # mismatch is decreasing in p; a root above min(p_L, p_R) needs a shock
    p_hi = min(p_L, p_R)
    f_hi = mismatch(p_hi)
    if f_hi > 0:
        raise PatternError("velocity jump requires a shock (root above min(p_-, p_+))")
    if f_hi == 0:
        p_star = p_hi
    else:
        p_lo = p_hi * 1e-3
        f_lo = mismatch(p_lo)
        while f_lo <= 0:
            p_lo *= 1e-3
            if p_lo < p_hi * 1e-30:
                raise PatternError("no root before vacuum: data lies outside the R1-CD-R3 region")
            f_lo = mismatch(p_lo)
        p_star, info = optimize.brentq(mismatch, p_lo, p_hi, xtol=1e-300, rtol=max(rtol * 1e-2, 4.5e-16),
                                       maxiter=500, full_output=True)
        if not info.converged:
            raise NumericError(f"middle-pressure root-find did not converge ({info.flag})")

    vm_left = vol_left(p_star)
    vm_right = vol_right(p_star)
    u1 = L.u - _curve_integral(g, s_L, L.v, vm_left, 1)
    u3 = R.u - _curve_integral(g, s_R, R.v, vm_right, 3)
    scale = max(1.0, abs(u1), abs(u3), gas.eigenvalue(g, L.v, L.theta, 3))
    if abs(u1 - u3) > 1e-9 * scale:
        raise NumericError(f"velocity mismatch {abs(u1 - u3):.3e} after root-find", abs(u1 - u3))
    um = 0.5 * (u1 + u3)
    thm_left = L.theta if vm_left == L.v else p_star * vm_left / g.R
    thm_right = R.theta if vm_right == R.v else p_star * vm_right / g.R
    pat = WavePattern(ends, vm_left, vm_right, um, thm_left, thm_right, s_L, s_R, delta)
    _check_ordering(g, pat)
    return pat


def _check_ordering(g, pat):
    lam_l, lam_ml, lam_mr, lam_r = pat.fan_speeds(g)
    tol = 1e-12 * abs(lam_l)
    if not (lam_l <= lam_ml + tol and lam_mr <= lam_r + tol):
        raise PatternError("solved intermediate states violate the rarefaction ordering")


def riemann_fields(g: GasParams, pat: WavePattern, xi):
    """Vectorised self-similar Riemann solution; returns arrays ``(v, u, theta)``."""
    xi = np.asarray(xi, dtype=float)
    L, R = pat.ends.left, pat.ends.right
    lam_l, lam_ml, lam_mr, lam_r = pat.fan_speeds(g)

    v = np.empty_like(xi)
    u = np.empty_like(xi)
    th = np.empty_like(xi)

    regions = [
        (xi < lam_l, L.as_tuple()),
        ((xi > lam_ml) & (xi < 0), pat.mid_left.as_tuple()),
        ((xi >= 0) & (xi < lam_mr), pat.mid_right.as_tuple()),
        (xi > lam_r, R.as_tuple()),
    ]
    for mask, (vv, uu, tt) in regions:
        v[mask], u[mask], th[mask] = vv, uu, tt

    fan1 = (xi >= lam_l) & (xi <= lam_ml) & (xi < 0)
    if np.any(fan1):
        if lam_l == lam_ml:
            v[fan1], u[fan1], th[fan1] = L.as_tuple()
        else:
            vf = gas.volume_from_lambda(g, xi[fan1], pat.s_left, 1)
            v[fan1] = vf
            u[fan1] = gas.curve_velocity_exact(g, L.u, L.v, vf, pat.s_left, 1)
            th[fan1] = gas.theta_vs(g, vf, pat.s_left)
    fan3 = (xi >= lam_mr) & (xi <= lam_r) & (xi >= 0)
    if np.any(fan3):
        if lam_mr == lam_r:
            v[fan3], u[fan3], th[fan3] = R.as_tuple()
        else:
            vf = gas.volume_from_lambda(g, xi[fan3], pat.s_right, 3)
            v[fan3] = vf
            u[fan3] = gas.curve_velocity_exact(g, R.u, R.v, vf, pat.s_right, 3)
            th[fan3] = gas.theta_vs(g, vf, pat.s_right)
    return v, u, th


def sample_riemann(g: GasParams, pat: WavePattern, xi: float) -> ThermoState:
    v, u, th = riemann_fields(g, pat, np.array([float(xi)]))
    return ThermoState(float(v[0]), float(u[0]), float(th[0]))
