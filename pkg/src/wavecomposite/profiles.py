"""
Viscous contact wave, smooth rarefaction waves and their superposition.

The contact wave is the self-similar solution Theta(xi), xi = x/sqrt(1+t),
of the nonlinear diffusion equation ``Theta_t = a (Theta_x/Theta)_x``.  In
``y = ln Theta`` the profile satisfies

    -(xi/2) e^y y' = a y''

which is solved once as a two-point boundary value problem and tabulated.
Every x/t derivative needed downstream is then obtained from (y, y') with
y'' and y''' eliminated through the ODE itself.

The rarefaction waves are driven by the inviscid Burgers equation with
tanh initial data, inverted along characteristics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import solve_banded
from scipy.special import erf

from . import gas
from .errors import DomainError, InvariantError, NumericError
from .gas import GasParams, ThermoState
from .riemann import WavePattern


class WaveFields(NamedTuple):
    """Values and first/second derivatives of (v, u, theta) on a set of points."""
    v: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    v_x: np.ndarray
    u_x: np.ndarray
    theta_x: np.ndarray
    v_t: np.ndarray
    u_t: np.ndarray
    theta_t: np.ndarray
    v_xx: np.ndarray
    u_xx: np.ndarray
    theta_xx: np.ndarray

    def state(self, i=0) -> ThermoState:
        return ThermoState(float(self.v.flat[i]), float(self.u.flat[i]), float(self.theta.flat[i]))

    def __add__(self, other):
        return WaveFields(*(a + b for a, b in zip(self, other)))

    def shifted(self, dv=0.0, du=0.0, dtheta=0.0):
        """Same fields with constants added to the values only."""
        return self._replace(v=self.v + dv, u=self.u + du, theta=self.theta + dtheta)


def _constant_fields(shape, v, u, theta):
    z = np.zeros(shape)
    return WaveFields(z + v, z + u, z + theta, z, z.copy(), z.copy(), z.copy(), z.copy(),
                      z.copy(), z.copy(), z.copy(), z.copy())


# ---------------------------------------------------------------------------
# contact wave

@dataclass(frozen=True, eq=False)
class ContactProfile:
    xi: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    theta_left: float
    theta_right: float
    a_coeff: float
    p_plus: float
    u_ref: float
    L: float
    newton_residual: float

    @property
    def delta(self) -> float:
        return abs(self.theta_right - self.theta_left)

    @property
    def degenerate(self) -> bool:
        return self.theta_left == self.theta_right

    def _splines(self):
        cache = self.__dict__.get("_spl")
        if cache is None:
            d2 = _ode_second(self.a_coeff, self.xi, self.y, self.dy)
            cache = (CubicHermiteSpline(self.xi, self.y, self.dy),
                     CubicHermiteSpline(self.xi, self.dy, d2))
            object.__setattr__(self, "_spl", cache)
        return cache

    def log_derivatives(self, xi):
        """Return ``(y, y', y'', y''')`` at ``xi`` (far field is constant)."""
        xi = np.asarray(xi, dtype=float)
        if self.degenerate:
            y0 = np.full(xi.shape, np.log(self.theta_left))
            z = np.zeros(xi.shape)
            return y0, z, z.copy(), z.copy()
        sy, sdy = self._splines()
        inside = np.abs(xi) < self.L
        xc = np.clip(xi, -self.L, self.L)
        y = sy(xc)
        dy = np.where(inside, sdy(xc), 0.0)
        y = np.where(xi <= -self.L, self.y[0], np.where(xi >= self.L, self.y[-1], y))
        a = self.a_coeff
        e = np.exp(y)
        d2 = -xi * e * dy / (2.0 * a)
        d3 = -(e * dy + xi * e * dy * dy + xi * e * d2) / (2.0 * a)
        return y, dy, d2, d3

    def theta_of_xi(self, xi):
        return np.exp(self.log_derivatives(xi)[0])

    def dtheta_of_xi(self, xi):
        y, dy, _, _ = self.log_derivatives(xi)
        return np.exp(y) * dy


def contact_a(g: GasParams, p_plus: float) -> float:
    """Diffusivity ``kappa p (gamma-1) / (gamma R^2)`` of the temperature equation."""
    return g.kappa * p_plus * (g.gamma - 1.0) / (g.gamma * g.R ** 2)


def _ode_second(a, xi, y, dy):
    return -xi * np.exp(y) * dy / (2.0 * a)


def _fd_first(y, h):
    d = np.empty_like(y)
    d[2:-2] = (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * h)
    d[1] = (y[2] - y[0]) / (2 * h)
    d[-2] = (y[-1] - y[-3]) / (2 * h)
    d[0] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * h)
    d[-1] = (3 * y[-1] - 4 * y[-2] + y[-3]) / (2 * h)
    return d


def _bvp_residual_and_jacobian(y, xi, h, a, want_jac=True):
    """Fourth-order discretisation of ``-(xi/2)(e^y)' - a y'' = 0`` at interior nodes.

    Nodes 1 and n-2 use second-order stencils.  Returns the residual on the
    interior nodes and the banded (2, 2) Jacobian with respect to them.
    """
    n = y.size
    e = np.exp(y)
    r = np.zeros(n)
    j = np.arange(2, n - 2)
    r[j] = (-(xi[j] / 2) * (-e[j + 2] + 8 * e[j + 1] - 8 * e[j - 1] + e[j - 2]) / (12 * h)
            - a * (-y[j + 2] + 16 * y[j + 1] - 30 * y[j] + 16 * y[j - 1] - y[j - 2]) / (12 * h * h))
    for k in (1, n - 2):
        r[k] = (-(xi[k] / 2) * (e[k + 1] - e[k - 1]) / (2 * h)
                - a * (y[k + 1] - 2 * y[k] + y[k - 1]) / (h * h))
    r_int = r[1:-1]
    if not want_jac:
        return r_int, None
    m = n - 2
    # ab[2 + i - jcol, jcol] = J[i, jcol] for interior index i (node i+1)
    ab = np.zeros((5, m))

    def put(rows, offset, vals):
        cols = rows + offset
        ok = (cols >= 0) & (cols < m)
        ab[2 - offset, cols[ok]] = vals[ok]

    i4 = j - 1
    c1 = -(xi[j] / 2) / (12 * h)
    c2 = -a / (12 * h * h)
    put(i4, -2, c1 * e[j - 2] + c2 * (-1.0))
    put(i4, -1, c1 * (-8 * e[j - 1]) + c2 * 16)
    put(i4, 0, np.full(j.size, c2 * (-30)))
    put(i4, 1, c1 * (8 * e[j + 1]) + c2 * 16)
    put(i4, 2, c1 * (-e[j + 2]) + c2 * (-1.0))
    for k in (1, n - 2):
        i2 = np.array([k - 1])
        d1 = -(xi[k] / 2) / (2 * h)
        d2 = -a / (h * h)
        put(i2, -1, np.array([d1 * (-e[k - 1]) + d2]))
        put(i2, 0, np.array([-2 * d2]))
        put(i2, 1, np.array([d1 * e[k + 1] + d2]))
    return r_int, ab


def solve_contact_profile(g: GasParams, theta_left: float, theta_right: float, p_plus: float,
                          L: float = 30.0, n: int = 8193, u_ref: float = 0.0,
                          tol: float = 1e-13, max_iter: int = 60) -> ContactProfile:
    """Self-similar temperature profile joining ``theta_left`` to ``theta_right``.

    Solved by damped Newton iteration on a uniform grid of ``n`` nodes over
    ``[-L, L]``.  The radius doubles until the profile has relaxed to its end
    values (deviation below 1e-10) at ``0.9 L``.
    """
    if not (theta_left > 0 and theta_right > 0 and p_plus > 0):
        raise DomainError("contact end temperatures and pressure must be positive")
    if n < 4096:
        raise DomainError("contact profile needs at least 4096 nodes")
    a = contact_a(g, p_plus)
    if theta_left == theta_right:
        xi = np.linspace(-L, L, n)
        y = np.full(n, np.log(theta_left))
        return ContactProfile(xi, y, np.zeros(n), theta_left, theta_right, a, p_plus, u_ref, L, 0.0)

    for _ in range(6):
        prof = _newton_profile(a, theta_left, theta_right, p_plus, L, n, u_ref, tol, max_iter)
        th = np.exp(prof.y)
        probe = np.abs(prof.xi) >= 0.9 * L
        edge_dev = np.max(np.where(prof.xi[probe] < 0, np.abs(th[probe] - theta_left),
                                   np.abs(th[probe] - theta_right)))
        if edge_dev < 1e-10:
            break
        L *= 2.0
        n = 2 * n - 1
    else:
        raise NumericError("contact profile truncation radius did not converge", edge_dev)

    dth = np.diff(prof.y)
    sign = np.sign(theta_right - theta_left)
    if np.any(sign * dth < -1e-14):
        raise InvariantError("contact profile is not monotone")
    return prof


def _newton_profile(a, theta_left, theta_right, p_plus, L, n, u_ref, tol, max_iter):
    xi = np.linspace(-L, L, n)
    h = xi[1] - xi[0]
    # linearised (constant-coefficient) solution as starting guess
    tm = 0.5 * (theta_left + theta_right)
    th0 = theta_left + 0.5 * (theta_right - theta_left) * (1 + erf(xi / (2 * np.sqrt(a / tm))))
    y = np.log(th0)
    y[0], y[-1] = np.log(theta_left), np.log(theta_right)
    scale = abs(np.log(theta_right) - np.log(theta_left))
    r, ab = _bvp_residual_and_jacobian(y, xi, h, a)
    rn = np.max(np.abs(r))
    for _ in range(max_iter):
        step = solve_banded((2, 2), ab, -r)
        lam = 1.0
        while True:
            trial = y.copy()
            trial[1:-1] += lam * step
            r_t, _ = _bvp_residual_and_jacobian(trial, xi, h, a, want_jac=False)
            rn_t = np.max(np.abs(r_t))
            if rn_t < rn or lam < 1e-4:
                break
            lam *= 0.5
        y = trial
        r, ab = _bvp_residual_and_jacobian(y, xi, h, a)
        rn = np.max(np.abs(r))
        if np.max(np.abs(lam * step)) <= tol * max(scale, 1e-300) or rn <= tol * scale * a / h ** 2 * 1e-3:
            break
    else:
        raise NumericError(f"contact profile Newton iteration did not converge (residual {rn:.3e})", rn)
    dy = _fd_first(y, h)
    return ContactProfile(xi, y, dy, theta_left, theta_right, a, p_plus, u_ref, L, float(rn))


def ode_residual(cp: ContactProfile) -> float:
    """L-infinity residual of ``-(xi/2) Theta' - a (Theta'/Theta)'`` at the cell midpoints.

    Evaluated from the interpolant (with y'' obtained by differentiating the
    y' spline, not from the ODE) so it measures the actual tabulation error.
    """
    if cp.degenerate:
        return 0.0
    sy, sdy = cp._splines()
    xm = 0.5 * (cp.xi[1:] + cp.xi[:-1])
    y = sy(xm)
    dy = sdy(xm)
    d2 = sdy(xm, 1)
    return float(np.max(np.abs(-(xm / 2) * np.exp(y) * dy - cp.a_coeff * d2)))


def fit_gaussian_bound(cp: ContactProfile, tail_floor: float = 1e-10):
    """Fit ``|Theta - theta_pm| + |Theta'| + |Theta''| + |Theta'''| <= C1 delta exp(-C2 xi^2)``.

    C2 comes from a least-squares fit of the log of the left-hand side
    against xi^2 on |xi| >= 1; C1 is then the smallest constant making the
    bound hold on the whole grid (above the round-off floor).  Returns
    ``(C1, C2)``.
    """
    if cp.degenerate:
        return 0.0, np.inf
    xi = cp.xi
    y, d1, d2, d3 = cp.log_derivatives(xi)
    th = np.exp(y)
    t1 = th * d1
    t2 = th * (d2 + d1 ** 2)
    t3 = th * (d3 + 3 * d1 * d2 + d1 ** 3)
    far = np.where(xi < 0, np.abs(th - cp.theta_left), np.abs(th - cp.theta_right))
    lhs = far + np.abs(t1) + np.abs(t2) + np.abs(t3)
    ok = lhs > tail_floor * max(1.0, cp.theta_right, cp.theta_left)
    sel = ok & (np.abs(xi) >= 1.0)
    if sel.sum() < 10:
        raise NumericError("not enough tail samples for the Gaussian fit")
    slope, _ = np.polyfit(xi[sel] ** 2, np.log(lhs[sel] / cp.delta), 1)
    c2 = -slope
    c1 = float(np.max(lhs[ok] / (cp.delta * np.exp(-c2 * xi[ok] ** 2))))
    return c1, float(c2)


def contact_fields(cp: ContactProfile, g: GasParams, x, t) -> WaveFields:
    x = np.asarray(x, dtype=float)
    if t < 0:
        raise DomainError("t must be non-negative")
    s = np.sqrt(1.0 + t)
    xi = x / s
    y, d1, d2, d3 = cp.log_derivatives(xi)
    th = np.exp(y)
    cu = g.kappa * (g.gamma - 1.0) / (g.gamma * g.R)
    rp = g.R / cp.p_plus
    th_x = th * d1 / s
    th_xx = th * (d2 + d1 * d1) / s ** 2
    th_t = -th * d1 * xi / (2 * s * s)
    u = cp.u_ref + cu * d1 / s
    u_x = cu * d2 / s ** 2
    u_xx = cu * d3 / s ** 3
    u_t = -cu * (xi * d2 + d1) / (2 * s ** 3)
    return WaveFields(rp * th, u, th, rp * th_x, u_x, th_x, rp * th_t, u_t, th_t, rp * th_xx, u_xx, th_xx)


def eval_contact(cp: ContactProfile, g: GasParams, x: float, t: float) -> ThermoState:
    return contact_fields(cp, g, np.array([float(x)]), t).state()


def contact_sources(cp: ContactProfile, g: GasParams, x, t):
    """Momentum and energy defects ``(Q1, Q2)`` of the contact wave.

    Q2 is the full energy defect ``U Q1 - mu U_x^2 / V``; it coincides with
    the textbook expression when the velocity offset ``u_ref`` is zero.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(1.0 + t)
    xi = x / s
    y, d1, d2, d3 = cp.log_derivatives(xi)
    cu = g.kappa * (g.gamma - 1.0) / (g.gamma * g.R)
    q1 = (-cu * (xi * d2 + d1) / (2 * s ** 3)
          - g.mu * cu * (cp.p_plus / g.R) * np.exp(-y) * (d3 - d1 * d2) / s ** 3)
    u = cp.u_ref + cu * d1 / s
    u_x = cu * d2 / s ** 2
    v = g.R * np.exp(y) / cp.p_plus
    q2 = u * q1 - g.mu * u_x * u_x / v
    if np.ndim(q1) == 0:
        return float(q1), float(q2)
    return q1, q2


# ---------------------------------------------------------------------------
# Burgers and rarefaction waves

@dataclass(frozen=True)
class BurgersWave:
    w_minus: float
    w_plus: float

    def __post_init__(self):
        if not self.w_minus <= self.w_plus:
            raise DomainError("Burgers rarefaction needs w_minus <= w_plus")

    def w0(self, x0):
        return 0.5 * (self.w_plus + self.w_minus) + 0.5 * (self.w_plus - self.w_minus) * np.tanh(x0)


def _char_foot(bw: BurgersWave, x, t, tol=1e-13, max_iter=200):
    """Solve ``x0 + w0(x0) t = x`` for x0 (safeguarded Newton, vectorised)."""
    dw = 0.5 * (bw.w_plus - bw.w_minus)
    wmax = max(abs(bw.w_minus), abs(bw.w_plus))
    lo = x - wmax * t - 1.0
    hi = x + wmax * t + 1.0
    # linear first guess from the fan when t is large
    x0 = np.clip(x - 0.5 * (bw.w_plus + bw.w_minus) * t, lo, hi)
    dx_old = hi - lo
    for _ in range(max_iter):
        th = np.tanh(x0)
        f = x0 + (0.5 * (bw.w_plus + bw.w_minus) + dw * th) * t - x
        fp = 1.0 + dw * (1 - th * th) * t
        lo = np.where(f < 0, x0, lo)
        hi = np.where(f > 0, x0, hi)
        new = x0 - f / fp
        # bisect when Newton leaves the bracket or fails to halve the previous step
        bad = (new <= lo) | (new >= hi) | (np.abs(2 * f) > np.abs(dx_old * fp))
        new = np.where(bad, 0.5 * (lo + hi), new)
        step = np.abs(new - x0)
        dx_old = step
        x0 = new
        if np.all(step <= tol * np.maximum(1.0, np.abs(x0))):
            return x0
    raise NumericError("characteristic inversion did not converge", float(np.max(step)))


def burgers_fields(bw: BurgersWave, x, t):
    """Return ``(w, w_x, w_xx, w_t)`` of the Burgers solution."""
    x = np.asarray(x, dtype=float)
    if t < 0:
        raise DomainError("t must be non-negative")
    if bw.w_minus == bw.w_plus:
        z = np.zeros(x.shape)
        return z + bw.w_minus, z, z.copy(), z.copy()
    x0 = x if t == 0 else _char_foot(bw, x, t)
    dw = 0.5 * (bw.w_plus - bw.w_minus)
    th = np.tanh(x0)
    sech2 = 1.0 - th * th
    w = 0.5 * (bw.w_plus + bw.w_minus) + dw * th
    w0p = dw * sech2
    w0pp = -2.0 * dw * sech2 * th
    jac = 1.0 + w0p * t
    w_x = w0p / jac
    w_xx = w0pp / jac ** 3
    return w, w_x, w_xx, -w * w_x


def eval_burgers(bw: BurgersWave, x: float, t: float) -> float:
    w = burgers_fields(bw, np.array([float(x)]), t)[0]
    return float(w[0])


@dataclass(frozen=True)
class Rarefaction:
    wave: BurgersWave
    anchor: ThermoState
    s_fixed: float
    family: int


def rarefaction_fields(g: GasParams, bw: BurgersWave, anchor: ThermoState, s_fixed: float,
                       family: int, x, t) -> WaveFields:
    x = np.asarray(x, dtype=float)
    if bw.w_minus == bw.w_plus:
        return _constant_fields(x.shape, anchor.v, anchor.u, anchor.theta)
    w, w_x, w_xx, w_t = burgers_fields(bw, x, t)
    sign = -1.0 if family == 1 else 1.0
    if np.any(sign * w <= 0):
        raise NumericError(f"Burgers value has the wrong sign for a {family}-wave volume")
    v = gas.volume_from_lambda(g, w, s_fixed, family)
    gp1 = g.gamma + 1.0
    v_w = -(2.0 / gp1) * v / w
    v_ww = 2.0 * (g.gamma + 3.0) / gp1 ** 2 * v / (w * w)
    v_x = v_w * w_x
    v_xx = v_ww * w_x * w_x + v_w * w_xx
    v_t = v_w * w_t
    u = gas.curve_velocity_exact(g, anchor.u, anchor.v, v, s_fixed, family)
    # along the curve du = -lambda dv with lambda = w
    u_x = -w * v_x
    u_xx = -w_x * v_x - w * v_xx
    u_t = -w * v_t
    th = gas.theta_vs(g, v, s_fixed)
    th_v = (1.0 - g.gamma) * th / v
    th_vv = g.gamma * (g.gamma - 1.0) * th / (v * v)
    th_x = th_v * v_x
    th_xx = th_vv * v_x * v_x + th_v * v_xx
    th_t = th_v * v_t
    return WaveFields(v, u, th, v_x, u_x, th_x, v_t, u_t, th_t, v_xx, u_xx, th_xx)


def eval_rarefaction(g: GasParams, bw: BurgersWave, anchor: ThermoState, s_fixed: float,
                     family: int, x: float, t: float) -> ThermoState:
    return rarefaction_fields(g, bw, anchor, s_fixed, family, np.array([float(x)]), t).state()


# ---------------------------------------------------------------------------
# composite

@dataclass(frozen=True, eq=False)
class CompositeWave:
    pattern: WavePattern
    contact: ContactProfile
    r1: Rarefaction
    r3: Rarefaction


def build_composite(g: GasParams, pat: WavePattern, L: float = 30.0, n: int = 8193) -> CompositeWave:
    """Assemble the three smooth wave pieces for a solved pattern.

    The 1-wave lives on the isentrope s_- and is anchored at the middle-left
    state; the 3-wave lives on s_+ and is anchored at the right state.  The
    contact joins the middle temperatures at the middle pressure with zero
    velocity offset.
    """
    L_, R_ = pat.ends.left, pat.ends.right
    mid_l, mid_r = pat.mid_left, pat.mid_right
    w1 = BurgersWave(gas.eigenvalue(g, L_.v, L_.theta, 1), gas.eigenvalue(g, mid_l.v, mid_l.theta, 1))
    w3 = BurgersWave(gas.eigenvalue(g, mid_r.v, mid_r.theta, 3), gas.eigenvalue(g, R_.v, R_.theta, 3))
    if L_.v == mid_l.v:
        w1 = BurgersWave(w1.w_minus, w1.w_minus)
    if R_.v == mid_r.v:
        w3 = BurgersWave(w3.w_plus, w3.w_plus)
    r1 = Rarefaction(w1, mid_l, pat.s_left, 1)
    r3 = Rarefaction(w3, R_, pat.s_right, 3)
    cp = solve_contact_profile(g, pat.thm_left, pat.thm_right, pat.p_mid(g), L=L, n=n, u_ref=0.0)
    return CompositeWave(pat, cp, r1, r3)


class CompositePieces(NamedTuple):
    total: WaveFields
    r1: WaveFields
    cd: WaveFields
    r3: WaveFields


def composite_pieces(cw: CompositeWave, g: GasParams, x, t) -> CompositePieces:
    x = np.asarray(x, dtype=float)
    pat = cw.pattern
    f1 = rarefaction_fields(g, cw.r1.wave, cw.r1.anchor, cw.r1.s_fixed, 1, x, t)
    fc = contact_fields(cw.contact, g, x, t)
    f3 = rarefaction_fields(g, cw.r3.wave, cw.r3.anchor, cw.r3.s_fixed, 3, x, t)
    total = (f1 + fc + f3).shifted(-(pat.vm_left + pat.vm_right), -pat.um,
                                   -(pat.thm_left + pat.thm_right))
    return CompositePieces(total, f1, fc, f3)


def composite_fields(cw: CompositeWave, g: GasParams, x, t) -> WaveFields:
    return composite_pieces(cw, g, x, t).total


def eval_composite(cw: CompositeWave, g: GasParams, x: float, t: float) -> ThermoState:
    return composite_fields(cw, g, np.array([float(x)]), t).state()
