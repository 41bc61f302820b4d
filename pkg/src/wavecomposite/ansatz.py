"""
Ansatz carrying the far-field oscillations, and its residuals.

With the contact weight ``eta = (v_cd - v^o_-)/(v^o_+ - v^o_-)`` the
barred superposition of the wave pieces and the four periodic solutions
collapses to

    vbar = V~ + (1 - eta) v~_- + eta v~_+

(and likewise for u and theta), because every contribution of the two
middle-state periodic solutions cancels.  The residual of the mass
equation is then exactly

    F = eta_t (v~_+ - v~_-) - eta_x (u~_+ - u~_-).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .diagnostics import detect_floor, fit_decay, late_slope, norm
from .errors import DataError, DomainError, ResolutionError
from . import gas
from .gas import GasParams, ThermoState
from .periodic import PeriodicPerturbation, PeriodicSolution, solve_periodic, zero_solution
from .profiles import (CompositeWave, ContactProfile, composite_pieces, contact_fields,
                       fit_gaussian_bound)


@dataclass(frozen=True, eq=False)
class WeightEta:
    backing: ContactProfile
    vo_left: float
    vo_right: float

    @property
    def degenerate(self) -> bool:
        return self.vo_left == self.vo_right


class EtaFields(NamedTuple):
    eta: np.ndarray
    eta_x: np.ndarray
    eta_t: np.ndarray
    degenerate: bool


def eta_fields(w: WeightEta, g: GasParams, x, t) -> EtaFields:
    x = np.asarray(x, dtype=float)
    if w.degenerate:
        z = np.zeros(x.shape)
        return EtaFields(z + 0.5, z, z.copy(), True)
    cf = contact_fields(w.backing, g, x, t)
    dv = w.vo_right - w.vo_left
    eta = np.clip((cf.v - w.vo_left) / dv, 0.0, 1.0)
    return EtaFields(eta, cf.v_x / dv, cf.v_t / dv, False)


def eval_eta(w: WeightEta, g: GasParams, x: float, t: float):
    """``(eta, eta_t, eta_x, degenerate)`` at a single point."""
    e = eta_fields(w, g, np.array([float(x)]), t)
    return float(e.eta[0]), float(e.eta_t[0]), float(e.eta_x[0]), e.degenerate


@dataclass(eq=False)
class AnsatzField:
    g: GasParams
    composite: CompositeWave
    eta: WeightEta
    periodic: dict                  # keys: minus, plus, mid_minus, mid_plus
    pert: PeriodicPerturbation

    @property
    def T(self) -> float:
        return min(self.periodic["minus"].T, self.periodic["plus"].T)


def build_ansatz(g: GasParams, cw: CompositeWave, pert: PeriodicPerturbation, T: float = 80.0,
                 n_torus: int = 64, sample_dt: float = 0.01, eps0: float = 1e-2,
                 scheme: str = "rkl2", middle: bool = True) -> AnsatzField:
    """Solve the periodic problems about the end and middle states and assemble the ansatz.

    The middle-state solutions do not enter the ansatz values; they are
    computed (``middle=True``) only so their decay can be reported.
    """
    pat = cw.pattern
    bases = {"minus": pat.ends.left, "plus": pat.ends.right,
             "mid_minus": pat.mid_left, "mid_plus": pat.mid_right}
    sols = {}
    for key, base in bases.items():
        if key.startswith("mid") and not middle:
            continue
        if pert.is_zero:
            sols[key] = zero_solution(g, base, T)
        else:
            sols[key] = solve_periodic(g, base, pert, n=n_torus, T=T, sample_dt=sample_dt,
                                       scheme=scheme, eps0=eps0)
    w = WeightEta(cw.contact, pat.vm_left, pat.vm_right)
    return AnsatzField(g, cw, w, sols, pert)


class AnsatzEval(NamedTuple):
    v: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    eta: EtaFields
    pieces: object          # CompositePieces
    tm: object              # TildeFields of the minus solution
    tp: object              # TildeFields of the plus solution


def ansatz_eval(af: AnsatzField, x, t) -> AnsatzEval:
    x = np.asarray(x, dtype=float)
    if t > af.T + 1e-12:
        raise DomainError(f"t={t} beyond the periodic history (T={af.T})")
    pc = composite_pieces(af.composite, af.g, x, t)
    ef = eta_fields(af.eta, af.g, x, t)
    tm = af.periodic["minus"].tilde(x, t)
    tp = af.periodic["plus"].tilde(x, t)
    e = ef.eta
    v = pc.total.v + (1 - e) * tm.v + e * tp.v
    u = pc.total.u + (1 - e) * tm.u + e * tp.u
    th = pc.total.theta + (1 - e) * tm.theta + e * tp.theta
    return AnsatzEval(v, u, th, ef, pc, tm, tp)


def ansatz_fields(af: AnsatzField, x, t):
    """``(vbar, ubar, thetabar)`` arrays at ``(x, t)``."""
    a = ansatz_eval(af, x, t)
    return a.v, a.u, a.theta


def assemble_ansatz(af: AnsatzField, x: float, t: float) -> ThermoState:
    v, u, th = ansatz_fields(af, np.array([float(x)]), t)
    return ThermoState(float(v[0]), float(u[0]), float(th[0]))


def initial_theta_gap(af: AnsatzField, x):
    """Exact ``theta_0 - thetabar_0``: ``-(gamma-1)/R phi2 (U~ - (1-eta) u_- - eta u_+)`` at t=0."""
    x = np.asarray(x, dtype=float)
    g = af.g
    pat = af.composite.pattern
    pc = composite_pieces(af.composite, g, x, 0.0)
    e = eta_fields(af.eta, g, x, 0.0).eta
    p2 = af.pert.evaluate(x)[1]
    return -(g.gamma - 1) / g.R * p2 * (pc.total.u - (1 - e) * pat.ends.left.u - e * pat.ends.right.u)


def literal_initial_theta_gap(af: AnsatzField, x):
    """The contact-only form ``-(gamma-1)/R phi2 u_cd(x, 0)`` of the initial temperature gap."""
    x = np.asarray(x, dtype=float)
    g = af.g
    ucd = contact_fields(af.composite.contact, g, x, 0.0).u
    return -(g.gamma - 1) / g.R * af.pert.evaluate(x)[1] * ucd


# ---------------------------------------------------------------------------
# residuals

def _d0(f, dx):
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2 * dx)
    d[0] = (f[1] - f[0]) / dx
    d[-1] = (f[-1] - f[-2]) / dx
    return d


def _flux_div(q, v, dx):
    """Compact ``(q_x / v)_x`` with face-averaged v; one-sided zero-flux ends."""
    fl = (q[1:] - q[:-1]) / (dx * 0.5 * (v[1:] + v[:-1]))
    out = np.zeros_like(q)
    out[1:-1] = (fl[1:] - fl[:-1]) / dx
    return out


def _ns_defect(g, v, u, th, vt, ut, tht, dx):
    """Discrete Navier-Stokes defect ``(F, G, H)`` of fields with given time derivatives."""
    p = g.R * th / v
    ux = _d0(u, dx)
    F = vt - ux
    G = ut + _d0(p, dx) - g.mu * _flux_div(u, v, dx)
    H = g.cv * tht + p * ux - g.kappa * _flux_div(th, v, dx) - g.mu * ux * ux / v
    return F, G, H


class ResidualTriple(NamedTuple):
    t: float
    x: np.ndarray
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    F_closed: np.ndarray
    subtotals: dict
    norms: dict


def _periodic_envelope(af: AnsatzField, t: float) -> float:
    """max over the end-state periodic solutions of their W^{2,inf} deviation norm at t."""
    out = 0.0
    for key in ("minus", "plus"):
        sol = af.periodic[key]
        out = max(out, float(np.interp(t, sol.times, sol.norms["W2inf"])))
    return out


def _constants(af: AnsatzField):
    """``(c0, C2)``: exponential rate of the far-field wave tails and the Gaussian rate of the contact."""
    cache = af.__dict__.get("_consts")
    if cache is None:
        g, pat = af.g, af.composite.pattern
        lam1 = abs(gas.eigenvalue(g, pat.vm_left, pat.thm_left, 1))
        lam3 = abs(gas.eigenvalue(g, pat.vm_right, pat.thm_right, 3))
        c2 = 1.0 if af.composite.contact.degenerate else fit_gaussian_bound(af.composite.contact)[1]
        c0 = 0.1 * min(lam1, lam3, c2 * lam1 ** 2, c2 * lam3 ** 2, 1.0)
        cache = (c0, c2)
        af.__dict__["_consts"] = cache
    return cache

def residuals(af: AnsatzField, x, t: float, dt_res: float = 1e-3, check_resolution: bool = True):
    """Residuals of the ansatz under the discrete Navier-Stokes operator.

    Time derivatives are centered differences of the ansatz with step
    ``dt_res``.  The discrete defects of the periodic solutions (which solve
    the equations exactly in the continuum) are removed with the same
    weights they carry in the ansatz.  For the mass equation the discrete
    defect of the composite wave, which vanishes identically in the
    continuum, is removed as well before comparing with the closed form.
    """
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    g = af.g
    t_lo = max(t - dt_res, 0.0)
    t_hi = t + dt_res
    if t_hi > af.T:
        t_hi, t_lo = t, t - 2 * dt_res
    h2 = t_hi - t_lo
    a0 = ansatz_eval(af, x, t)
    a_lo = ansatz_eval(af, x, t_lo)
    a_hi = ansatz_eval(af, x, t_hi)

    def tderiv(get):
        return (get(a_hi) - get(a_lo)) / h2

    F, G, H = _ns_defect(g, a0.v, a0.u, a0.theta,
                         tderiv(lambda a: a.v), tderiv(lambda a: a.u), tderiv(lambda a: a.theta), dx)
    e = a0.eta.eta
    per_def = []
    for key, tf0, sel in (("minus", a0.tm, lambda a: a.tm), ("plus", a0.tp, lambda a: a.tp)):
        base = af.periodic[key].base
        vv, uu, tt = base.v + tf0.v, base.u + tf0.u, base.theta + tf0.theta
        per_def.append(_ns_defect(g, vv, uu, tt,
                                  tderiv(lambda a: sel(a).v), tderiv(lambda a: sel(a).u),
                                  tderiv(lambda a: sel(a).theta), dx))
    (Fm, Gm, Hm), (Fp, Gp, Hp) = per_def
    F = F - (1 - e) * Fm - e * Fp
    G = G - (1 - e) * Gm - e * Gp
    H = H - (1 - e) * Hm - e * Hp
    comp = a0.pieces.total
    Fc = tderiv(lambda a: a.pieces.total.v) - _d0(comp.u, dx)
    F = F - Fc

    ef = a0.eta
    F_closed = ef.eta_t * (a0.tp.v - a0.tm.v) - ef.eta_x * (a0.tp.u - a0.tm.u)
    subs = subtotals(af, a0, t, x)
    norms = {}
    for name, arr in (("F", F), ("G", G), ("H", H), ("F_closed", F_closed)):
        norms[name] = (norm(arr, "L1", dx), norm(arr, "L2", dx), norm(arr, "Linf", dx))
    for name, arr in subs.items():
        norms[name] = (norm(arr, "L1", dx), norm(arr, "L2", dx), norm(arr, "Linf", dx))
    noise = np.finfo(float).eps * (np.max(np.abs(a0.v)) / h2 + np.max(np.abs(a0.u)) / dx) * (x[-1] - x[0])
    norms["F_noise"] = (noise, noise, noise)
    rt = ResidualTriple(t, x, F, G, H, F_closed, subs, norms)
    if check_resolution and x.size >= 16:
        coarse = residuals(af, x[::2], t, dt_res, check_resolution=False)
        for name in ("G", "H"):
            fine_n, coarse_n = rt.norms[name][0], coarse.norms[name][0]
            scale = max(fine_n, coarse_n)
            if scale > 1e-12 and abs(fine_n - coarse_n) > 0.1 * scale:
                raise ResolutionError(
                    f"residual {name} changes by {abs(fine_n - coarse_n) / scale:.1%} under grid coarsening")
    return rt


def subtotals(af: AnsatzField, a0: AnsatzEval, t: float, x=None) -> dict:
    """Closed-form bound terms G1..G3 and H1..H4 with unit constants."""
    g = af.g
    pc = a0.pieces
    r1, cd, r3 = pc.r1, pc.cd, pc.r3
    x = np.asarray(x if x is not None else a0.x, dtype=float)
    delta = af.composite.pattern.delta
    c0, c2 = _constants(af)
    ef = a0.eta
    i1 = np.abs(ef.eta * (1 - ef.eta))
    i2 = np.maximum(np.abs(ef.eta_t), np.abs(ef.eta_x))
    env = np.maximum(_periodic_envelope(af, t), delta * np.exp(-c0 * (np.abs(x) + t)))
    gauss = delta * np.exp(-c2 * x * x / (1 + t))
    vbar = a0.v
    return {
        "G1": np.maximum(i1, i2) * env + gauss * (1 + t) ** -1.5,
        "G2": g.mu / vbar * (np.abs(r1.u_xx) + np.abs(r3.u_xx)),
        "G3": (np.abs(cd.u_xx) + np.abs(cd.u_x) + np.abs(r1.v_x) + np.abs(r3.v_x) + np.abs(cd.v_x)) * env,
        "H1": np.maximum(i1, i2) * env + gauss * (1 + t) ** -2.0,
        "H2": g.kappa / vbar * (np.abs(r1.theta_xx) + np.abs(r3.theta_xx)),
        "H3": (np.abs(cd.u_x) + np.abs(r1.u_x) + np.abs(r3.u_x) + np.abs(cd.theta_x) + np.abs(r1.theta_x)
               + np.abs(r3.theta_x) + np.abs(cd.theta_xx) + cd.u_x ** 2) * env,
        "H4": r1.u_x ** 2 + r3.u_x ** 2 + cd.u_x ** 2,
    }


SERIES_KEYS = ("F", "F_closed", "F_noise", "G", "H", "G1", "G2", "G3", "H1", "H2", "H3", "H4")


@dataclass
class ResidualSeries:
    t: np.ndarray
    L1: dict            # key -> array over t
    L2: dict
    Linf: dict


def residual_grid(af: AnsatzField, t: float, dx: float | None = None, margin: float = 30.0) -> np.ndarray:
    """Uniform grid covering the wave footprint at time t with dx at most 1/64 of the narrowest width."""
    g, pat = af.g, af.composite.pattern
    lam_l = abs(gas.eigenvalue(g, pat.ends.left.v, pat.ends.left.theta, 1))
    lam_r = abs(gas.eigenvalue(g, pat.ends.right.v, pat.ends.right.theta, 3))
    half = max(lam_l, lam_r) * t + margin + 10 * np.sqrt(1 + t)
    if dx is None:
        dx = min(min_profile_width(af), 1.0) / 64
    n = int(np.ceil(2 * half / dx))
    # centered on the period so the grid is reproducible across t
    return -half + dx * np.arange(n + 1)


def min_profile_width(af: AnsatzField) -> float:
    """Narrowest length scale present: contact layer sqrt(a/theta), period, rarefaction ramps (1).

    Infinite when there is no structure to resolve.
    """
    cw = af.composite
    w = []
    if not af.pert.is_zero:
        w.append(af.pert.period)
    if any(r.wave.w_minus != r.wave.w_plus for r in (cw.r1, cw.r3)):
        w.append(1.0)
    if not cw.contact.degenerate:
        w.append(np.sqrt(cw.contact.a_coeff / max(cw.contact.theta_left, cw.contact.theta_right)))
    return float(min(w)) if w else float("inf")


def residual_series(af: AnsatzField, times, dx: float | None = None, dt_res: float = 1e-3,
                    check_resolution: bool = False) -> ResidualSeries:
    times = np.asarray(times, dtype=float)
    out = {k: {key: np.empty(times.size) for key in SERIES_KEYS} for k in ("L1", "L2", "Linf")}
    for i, t in enumerate(times):
        x = residual_grid(af, t, dx)
        rt = residuals(af, x, t, dt_res, check_resolution=check_resolution)
        for key in SERIES_KEYS:
            a, b, c = rt.norms[key]
            out["L1"][key][i], out["L2"][key][i], out["Linf"][key][i] = a, b, c
    return ResidualSeries(times, out["L1"], out["L2"], out["Linf"])


def _bounded(t, y, rate):
    """late log-log slope of ``y (1+t)^rate`` is at most 0.1"""
    z = y * (1 + t) ** rate
    if np.all(z == 0):
        return True, 0.0
    s = late_slope(t, z, "power")
    return bool(s <= 0.1), s


def default_residual_times(T: float = 80.0, t0: float = 1.0) -> np.ndarray:
    """Dense early samples (where F is above round-off) followed by a uniform late grid."""
    early = np.linspace(t0, min(8.0, T), 29)
    late = np.linspace(min(8.0, T), T, max(int(round((T - 8.0) / 2.0)) + 1, 2))
    return np.unique(np.concatenate([early, late]))


def residual_bound_report(series: ResidualSeries) -> dict:
    """Fitted envelopes for the residual norms with pass verdicts."""
    t = series.t
    if t.size < 10:
        raise DataError(f"need at least 10 residual samples, got {t.size}")
    L1 = series.L1
    rep = {"t_min": float(t[0]), "t_max": float(t[-1]), "samples": int(t.size)}
    for key in ("G2", "H2", "H4"):
        y = L1[key]
        if np.all(y == 0):
            rep[f"{key}_exponent"] = None
            continue
        rep[f"{key}_exponent"] = fit_decay(t, y, "power").exponent
    rep["G2_pass"] = rep["G2_exponent"] is None or rep["G2_exponent"] <= -0.7
    rep["H4_pass"] = rep["H4_exponent"] is None or rep["H4_exponent"] <= -0.9
    rep["G2_bounded"], rep["G2_scaled_slope"] = _bounded(t, L1["G2"], 7 / 8)
    rep["H4_bounded"], rep["H4_scaled_slope"] = _bounded(t, L1["H4"], 1.0)
    for key in ("G3", "F_closed", "F"):
        y = L1[key]
        if np.all(y == 0):
            rep[f"{key}_rate"] = None
            rep[f"{key}_pass"] = True
            continue
        if key == "F":
            # the discrete F is only meaningful above the differencing round-off
            fl = 100 * L1["F_noise"]
            sel = y > fl
            fl = float(np.max(fl))
        else:
            fl = detect_floor(t, y)
            sel = (y > fl) if fl > 0 else np.ones(t.size, bool)
        sel &= y > 0
        if sel.sum() < 10:
            rep[f"{key}_rate"] = None
            rep[f"{key}_pass"] = False
            continue
        fit = fit_decay(t[sel], y[sel], "exp")
        rep[f"{key}_rate"] = -fit.exponent
        rep[f"{key}_r2"] = fit.r2
        rep[f"{key}_floor"] = fl
        rep[f"{key}_pass"] = bool(-fit.exponent > 0)
    # discrete vs closed-form F, where the closed form stands clear of round-off
    fc, fd = L1["F_closed"], L1["F"]
    ok = fc > 100 * L1["F_noise"]
    rep["F_agreement_samples"] = int(ok.sum())
    rep["F_agreement_max_rel"] = float(np.max(np.abs(fd[ok] - fc[ok]) / fc[ok])) if ok.any() else None
    rep["F_agreement_pass"] = bool(ok.sum() >= 3 and rep["F_agreement_max_rel"] <= 0.1)
    return rep
