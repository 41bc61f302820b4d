"""
Navier-Stokes dynamics on the unit torus for constant states plus
zero-mean periodic perturbations of the conservative variables.

The solver evolves the deviations ``(v - v0, u - u0, E - E0)`` from the
constant base state.  The history is stored as truncated Fourier
coefficients at regular sample times together with their time derivatives,
so a periodic solution can be evaluated at any ``(x, t)`` by trigonometric
interpolation in x and cubic Hermite interpolation in t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import AmplitudeError, BlowUpError, DataError, DomainError, UsageError
from .gas import GasParams, ThermoState

SCHEMES = {"ssp-rk2": 0, "rkl2": 1}


@dataclass(frozen=True)
class PeriodicPerturbation:
    """Zero-mean trigonometric perturbation of ``(v, u, E)``.

    Each of ``phi1``, ``phi2``, ``phi3`` is a tuple of ``(k, a, b)`` giving
    ``a cos(2 pi k x / P) + b sin(2 pi k x / P)`` with integer ``k >= 1``.
    """
    phi1: tuple = ()
    phi2: tuple = ()
    phi3: tuple = ()
    period: float = 1.0

    def __post_init__(self):
        if not self.period > 0:
            raise DomainError("period must be positive")
        for comp in (self.phi1, self.phi2, self.phi3):
            for k, a, b in comp:
                if int(k) != k or k < 1:
                    raise DomainError(f"wavenumber must be an integer >= 1, got {k!r}")
                if not (np.isfinite(a) and np.isfinite(b)):
                    raise DomainError("mode amplitudes must be finite")

    @property
    def components(self):
        return (self.phi1, self.phi2, self.phi3)

    @property
    def is_zero(self) -> bool:
        return all(a == 0 and b == 0 for comp in self.components for _, a, b in comp)

    @property
    def eps1(self) -> float:
        """H^3(0, period) norm of (phi1, phi2, phi3), exact for trigonometric modes."""
        total = 0.0
        for comp in self.components:
            coef = {}
            for k, a, b in comp:
                ca, cb = coef.get(int(k), (0.0, 0.0))
                coef[int(k)] = (ca + a, cb + b)
            for k, (a, b) in coef.items():
                w = 2 * np.pi * k / self.period
                total += 0.5 * self.period * (a * a + b * b) * sum(w ** (2 * j) for j in range(4))
        return float(np.sqrt(total))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = []
        for comp in self.components:
            f = np.zeros(x.shape)
            for k, a, b in comp:
                arg = 2 * np.pi * k * x / self.period
                f = f + a * np.cos(arg) + b * np.sin(arg)
            out.append(f)
        return tuple(out)

    def scaled(self, factor: float) -> "PeriodicPerturbation":
        return PeriodicPerturbation(
            *(tuple((k, factor * a, factor * b) for k, a, b in comp) for comp in self.components),
            period=self.period)

    def scaled_to(self, eps1: float) -> "PeriodicPerturbation":
        """Same shape rescaled so that its H^3 norm equals ``eps1``."""
        cur = self.eps1
        if cur == 0:
            if eps1 == 0:
                return self
            raise DomainError("cannot rescale a zero perturbation to a positive norm")
        return self.scaled(eps1 / cur)


def torus_grid(n: int, period: float = 1.0) -> np.ndarray:
    return np.arange(n) * (period / n)


def perturbed_primitive(g: GasParams, v, u, theta, pert: PeriodicPerturbation, x):
    """Add (phi1, phi2, phi3) to (v, u, E) and convert back to (v, u, theta) exactly."""
    p1, p2, p3 = pert.evaluate(x)
    u_new = u + p2
    phi4 = (g.gamma - 1.0) / (2.0 * g.R) * (u * u - u_new * u_new) + (g.gamma - 1.0) / g.R * p3
    return v + p1, u_new, theta + phi4


def build_initial_data(base: ThermoState, pert: PeriodicPerturbation, g: GasParams, n: int = 256,
                       eps0: float = 1e-2):
    """Grid ``x`` and primitive fields ``(v0, u0, theta0)`` of the perturbed constant state."""
    if pert.eps1 > eps0 * (1 + 1e-12):
        raise AmplitudeError(f"perturbation norm {pert.eps1:.3e} exceeds eps0={eps0:.3e}")
    x = torus_grid(n, pert.period)
    v, u, th = perturbed_primitive(g, base.v, base.u, base.theta, pert, x)
    v = np.broadcast_to(v, x.shape).astype(float)
    u = np.broadcast_to(u, x.shape).astype(float)
    th = np.broadcast_to(th, x.shape).astype(float)
    if np.any(v <= 0) or np.any(th <= 0):
        raise AmplitudeError("perturbed initial data loses positivity")
    return x, v, u, th


@dataclass
class TorusState:
    base: ThermoState
    dv: np.ndarray
    du: np.ndarray
    dE: np.ndarray
    t: float
    period: float = 1.0

    @property
    def n(self) -> int:
        return self.dv.size

    @property
    def dx(self) -> float:
        return self.period / self.n

    def primitive(self, g: GasParams):
        b = self.base
        u = b.u + self.du
        th = b.theta + (self.dE - b.u * self.du - 0.5 * self.du ** 2) / g.cv
        return b.v + self.dv, u, th


def torus_state(g: GasParams, base: ThermoState, pert: PeriodicPerturbation, n: int,
                eps0: float = 1e-2) -> TorusState:
    x, v, u, th = build_initial_data(base, pert, g, n, eps0)
    p1, p2, p3 = pert.evaluate(x)
    return TorusState(base, np.asarray(p1, float) + 0 * x, np.asarray(p2, float) + 0 * x,
                      np.asarray(p3, float) + 0 * x, 0.0, pert.period)


def stable_dt(g: GasParams, st: TorusState, cfl: float = 0.4):
    """``(dt_hyperbolic, dt_diffusive)`` limits for the current state."""
    v, u, th = st.primitive(g)
    lam = np.max(np.sqrt(g.gamma * g.R * th) / v)
    dt_h = cfl * st.dx / lam
    dt_d = cfl * st.dx ** 2 * np.min(v) / (2.0 * g.max_diffusivity)
    return dt_h, dt_d


def _ext(a):
    out = np.empty(a.size + 2)
    out[1:-1] = a
    out[0] = a[-1]
    out[-1] = a[0]
    return out


def _advance(g, st, dt, nsteps, scheme, stages):
    dv, du, dE = _ext(st.dv), _ext(st.du), _ext(st.dE)
    b = st.base
    status = K.periodic_advance(dv, du, dE, b.v, b.u, b.theta, g.R, g.cv, g.mu, g.kappa,
                                st.dx, dt, nsteps, SCHEMES[scheme], stages)
    if status != K.STATUS_OK:
        raise BlowUpError(f"torus step failed with status {status} near t={st.t:.6g}",
                          dump={"t": st.t, "dv": dv[1:-1], "du": du[1:-1], "dE": dE[1:-1]})
    return TorusState(st.base, dv[1:-1].copy(), du[1:-1].copy(), dE[1:-1].copy(),
                      st.t + nsteps * dt, st.period)


def step_torus(g: GasParams, st: TorusState, dt: float, scheme: str = "ssp-rk2",
               stages: int | None = None) -> TorusState:
    """Advance one time step (the state is not modified in place)."""
    if scheme not in SCHEMES:
        raise UsageError(f"unknown time scheme {scheme!r}")
    if scheme == "rkl2" and stages is None:
        stages = K.rkl2_stages_for(dt, stable_dt(g, st)[1])
    return _advance(g, st, dt, 1, scheme, stages or 2)


def torus_rhs(g: GasParams, st: TorusState):
    dv, du, dE = _ext(st.dv), _ext(st.du), _ext(st.dE)
    ov, ou, oE = np.empty_like(dv), np.empty_like(dv), np.empty_like(dv)
    b = st.base
    K.rhs(dv, du, dE, b.v, b.u, b.theta, g.R, g.cv, g.mu, g.kappa, st.dx, ov, ou, oE, np.empty(6))
    return ov[1:-1], ou[1:-1], oE[1:-1]


def w2inf(f, dx):
    """Discrete W^{2,inf} norm: max|f| + max|D0 f| + max|D+D- f| on a periodic grid."""
    f = np.asarray(f)
    fp = np.roll(f, -1)
    fm = np.roll(f, 1)
    return float(np.max(np.abs(f)) + np.max(np.abs(fp - fm)) / (2 * dx)
                 + np.max(np.abs(fp - 2 * f + fm)) / dx ** 2)


class TildeFields(NamedTuple):
    """Deviations (v, u, E) and (theta) with x- and t-derivatives; arrays of shape (n,)."""
    v: np.ndarray
    u: np.ndarray
    E: np.ndarray
    theta: np.ndarray
    v_x: np.ndarray
    u_x: np.ndarray
    theta_x: np.ndarray
    v_t: np.ndarray
    u_t: np.ndarray
    theta_t: np.ndarray
    u_xx: np.ndarray
    theta_xx: np.ndarray


@dataclass(eq=False)
class PeriodicSolution:
    base: ThermoState
    g: GasParams
    n: int
    period: float
    times: np.ndarray
    coef: np.ndarray          # (ntimes, 3, K+1) complex Fourier coefficients of (dv, du, dE)
    dcoef: np.ndarray         # their time derivatives
    norms: dict = field(default_factory=dict)
    truncation: float = 0.0
    conservation_drift: float = 0.0
    scheme: str = "rkl2"
    final: TorusState | None = None

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def _coef_at(self, t):
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise DomainError(f"t={t!r} outside the stored history [0, {self.T}]")
        h = self.times[1] - self.times[0] if self.times.size > 1 else 1.0
        m = int(min(max(np.floor((t - self.times[0]) / h), 0), self.times.size - 2)) if self.times.size > 1 else 0
        if self.times.size == 1:
            return self.coef[0], self.dcoef[0]
        tau = (t - self.times[m]) / h
        t2, t3 = tau * tau, tau * tau * tau
        h00, h10, h01, h11 = 2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + tau, -2 * t3 + 3 * t2, t3 - t2
        d00, d10, d01, d11 = 6 * t2 - 6 * tau, 3 * t2 - 4 * tau + 1, -6 * t2 + 6 * tau, 3 * t2 - 2 * tau
        c0, c1, q0, q1 = self.coef[m], self.coef[m + 1], self.dcoef[m], self.dcoef[m + 1]
        c = h00 * c0 + h10 * h * q0 + h01 * c1 + h11 * h * q1
        ct = (d00 * c0 + d10 * h * q0 + d01 * c1 + d11 * h * q1) / h
        return c, ct

    def _synth(self, c, x, order=0):
        kk = np.arange(c.shape[-1])
        w = 2j * np.pi * kk / self.period
        ph = np.exp(np.outer(x, w))                        # (nx, K+1)
        weight = np.full(kk.size, 2.0)
        weight[0] = 1.0
        cc = c * weight * w ** order
        return np.real(ph @ cc.T).T                        # (3, nx)

    def tilde(self, x, t) -> TildeFields:
        """Deviation fields of (v, u, E) and theta at points ``x`` and time ``t``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        c, ct = self._coef_at(t)
        f = self._synth(c, x)
        fx = self._synth(c, x, 1)
        fxx = self._synth(c, x, 2)
        ft = self._synth(ct, x)
        b, cv = self.base, self.g.cv
        dv, du, dE = f
        u = b.u + du
        th = (dE - b.u * du - 0.5 * du * du) / cv
        th_x = (fx[2] - u * fx[1]) / cv
        th_t = (ft[2] - u * ft[1]) / cv
        th_xx = (fxx[2] - u * fxx[1] - fx[1] ** 2) / cv
        return TildeFields(dv, du, dE, th, fx[0], fx[1], th_x, ft[0], ft[1], th_t, fxx[1], th_xx)

    def bar(self, x, t):
        """Full periodic solution ``(v, u, theta)`` at ``(x, t)``."""
        tf = self.tilde(x, t)
        b = self.base
        return b.v + tf.v, b.u + tf.u, b.theta + tf.theta

    def deviation_series(self, x: float, times) -> np.ndarray:
        """Conservative deviations ``(dv, du, dE)`` at one point for many times; shape (nt, 3)."""
        times = np.asarray(times, dtype=float)
        if times.size and (times.min() < self.times[0] - 1e-12 or times.max() > self.times[-1] + 1e-12):
            raise DomainError(f"times outside the stored history [0, {self.T}]")
        if self.times.size == 1:
            c = np.broadcast_to(self.coef[0], (times.size,) + self.coef.shape[1:])
        else:
            h = self.times[1] - self.times[0]
            m = np.clip(np.floor((times - self.times[0]) / h).astype(int), 0, self.times.size - 2)
            tau = ((times - self.times[m]) / h)[:, None, None]
            t2, t3 = tau * tau, tau * tau * tau
            c = ((2 * t3 - 3 * t2 + 1) * self.coef[m] + (t3 - 2 * t2 + tau) * h * self.dcoef[m]
                 + (-2 * t3 + 3 * t2) * self.coef[m + 1] + (t3 - t2) * h * self.dcoef[m + 1])
        kk = np.arange(c.shape[-1])
        weight = np.full(kk.size, 2.0)
        weight[0] = 1.0
        ph = np.exp(2j * np.pi * kk * float(x) / self.period) * weight
        return np.real(c @ ph)

    def conservative_deviation(self, x, t):
        tf = self.tilde(x, t)
        return tf.v, tf.u, tf.E


def _fourier(a, nk):
    return np.fft.rfft(a)[: nk + 1] / a.size


def solve_periodic(g: GasParams, base: ThermoState, pert: PeriodicPerturbation, *, n: int = 256,
                   T: float = 80.0, sample_dt: float = 0.01, scheme: str = "rkl2", cfl: float = 0.4,
                   n_modes: int = 32, eps0: float = 1e-2) -> PeriodicSolution:
    """Evolve the perturbed constant state on the torus up to ``T``.

    The step is the largest value allowed by the hyperbolic CFL limit that
    divides ``sample_dt``; with ``scheme="rkl2"`` the number of
    super-time-stepping stages is chosen to cover the diffusive limit, with
    ``"ssp-rk2"`` the step also obeys the diffusive limit directly.
    """
    if scheme not in SCHEMES:
        raise UsageError(f"unknown time scheme {scheme!r}")
    if n < 8:
        raise DomainError("torus needs at least 8 cells")
    st = torus_state(g, base, pert, n, eps0)
    nk = min(n_modes, n // 2 - 1)
    nsamp = int(round(T / sample_dt))
    if abs(nsamp * sample_dt - T) > 1e-9 * max(T, 1):
        raise DomainError("T must be a multiple of sample_dt")
    times = np.arange(nsamp + 1) * sample_dt
    coef = np.empty((nsamp + 1, 3, nk + 1), dtype=complex)
    dcoef = np.empty_like(coef)
    keys = ("Linf_v", "Linf_u", "Linf_E", "W2inf")
    norms = {k: np.empty(nsamp + 1) for k in keys}
    totals0 = np.array([st.dv.sum(), st.du.sum(), st.dE.sum()]) * st.dx
    drift = 0.0
    trunc = 0.0
    E0 = g.cv * base.theta + 0.5 * base.u ** 2
    scale = max(base.v, abs(E0), abs(base.u))

    def record(i, s):
        nonlocal drift, trunc
        r = torus_rhs(g, s)
        for c, (a, da) in enumerate(zip((s.dv, s.du, s.dE), r)):
            full = np.fft.rfft(a) / a.size
            coef[i, c] = full[: nk + 1]
            dcoef[i, c] = _fourier(da, nk)
            if full.size > nk + 1:
                trunc = max(trunc, float(2 * np.max(np.abs(full[nk + 1:]))))
        norms["Linf_v"][i] = np.max(np.abs(s.dv))
        norms["Linf_u"][i] = np.max(np.abs(s.du))
        norms["Linf_E"][i] = np.max(np.abs(s.dE))
        norms["W2inf"][i] = max(w2inf(s.dv, s.dx), w2inf(s.du, s.dx), w2inf(s.dE, s.dx))
        tot = np.array([s.dv.sum(), s.du.sum(), s.dE.sum()]) * s.dx
        drift = max(drift, float(np.max(np.abs(tot - totals0))) / scale)

    record(0, st)
    for i in range(1, nsamp + 1):
        dt_h, dt_d = stable_dt(g, st, cfl)
        dt_max = dt_h if scheme == "rkl2" else min(dt_h, dt_d)
        nsub = int(np.ceil(sample_dt / dt_max * (1 - 1e-12)))
        dt = sample_dt / nsub
        stages = K.rkl2_stages_for(dt, dt_d) if scheme == "rkl2" else 2
        st = _advance(g, st, dt, nsub, scheme, stages)
        st.t = times[i]
        record(i, st)
    return PeriodicSolution(base, g, n, pert.period, times, coef, dcoef, norms, trunc, drift, scheme, st)


def zero_solution(g: GasParams, base: ThermoState, T: float = 80.0, sample_dt: float = 1.0,
                  period: float = 1.0) -> PeriodicSolution:
    """History of an unperturbed state (all deviations identically zero)."""
    nsamp = int(round(T / sample_dt))
    times = np.arange(nsamp + 1) * sample_dt
    coef = np.zeros((nsamp + 1, 3, 1), dtype=complex)
    keys = ("Linf_v", "Linf_u", "Linf_E", "W2inf")
    norms = {k: np.zeros(nsamp + 1) for k in keys}
    return PeriodicSolution(base, g, 8, period, times, coef, coef.copy(), norms, 0.0, 0.0, "none", None)


class DecayEstimate(NamedTuple):
    rate: float          # fitted 2*alpha
    alpha: float
    prefactor: float
    r2: float
    window: tuple
    underflow: bool


def estimate_decay(sol: PeriodicSolution, norm: str = "W2inf", floor: float | None = None,
                   window=None) -> DecayEstimate:
    """Exponential fit ``C exp(-rate t)`` of a stored norm series over ``[T_eff/4, T_eff]``.

    ``T_eff`` is the last sample where the norm is above ``floor``; if that
    is earlier than the end of the run the estimate carries an underflow
    notice.  With ``floor=None`` the round-off floor is detected from the
    flattening of the series tail.  A series that is zero throughout returns NaN rate with the
    notice set.
    """
    from .diagnostics import detect_floor, fit_decay

    if norm not in ("Linf", "W2inf"):
        raise UsageError(f"norm must be 'Linf' or 'W2inf', got {norm!r}")
    t = sol.times
    if norm == "Linf":
        vals = np.maximum.reduce([sol.norms["Linf_v"], sol.norms["Linf_u"], sol.norms["Linf_E"]])
    else:
        vals = sol.norms["W2inf"]
    if t[-1] < 10:
        raise DataError("decay estimate needs a history of at least t = 10")
    if floor is None:
        floor = detect_floor(t, vals)
    above = np.nonzero(vals > floor)[0]
    if above.size == 0:
        return DecayEstimate(float("nan"), float("nan"), 0.0, float("nan"), (0.0, 0.0), True)
    t_eff = t[above[-1]]
    underflow = above[-1] < t.size - 1
    lo, hi = window if window is not None else (t_eff / 4, t_eff)
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12) & (vals > floor)
    fit = fit_decay(t[sel], vals[sel], "exp")
    rate = -fit.exponent
    return DecayEstimate(rate, 0.5 * rate, fit.prefactor, fit.r2, (float(lo), float(hi)), bool(underflow))


def self_convergence(g: GasParams, base: ThermoState, pert: PeriodicPerturbation, n: int = 32,
                     T: float = 0.2, cfl: float = 0.4, eps0: float = 1e-2) -> dict:
    """Observed order of the torus solver from runs on n, 2n and 4n cells (SSP-RK2)."""
    from .diagnostics import observed_order

    finals = []
    for m in (n, 2 * n, 4 * n):
        torus_state(g, base, pert, m, eps0)  # amplitude and positivity checks
        # cells [i h, (i+1) h] nest under refinement; exact averages avoid an O(h^2) data offset
        st = TorusState(base, *_cell_averages(pert, m), 0.0, pert.period)
        dt = min(stable_dt(g, st, cfl))
        nsteps = int(np.ceil(T / dt))
        finals.append(_advance(g, st, T / nsteps, nsteps, "ssp-rk2", 2))
    return {name: observed_order(*(getattr(s, name) for s in finals)) for name in ("dv", "du", "dE")}


def _cell_averages(pert: PeriodicPerturbation, n: int):
    """Exact cell averages of (phi1, phi2, phi3) on n cells."""
    h = pert.period / n
    edges = np.arange(n + 1) * h
    out = []
    for comp in pert.components:
        f = np.zeros(n)
        for k, a, b in comp:
            w = 2 * np.pi * k / pert.period
            # antiderivative of a cos(wx) + b sin(wx)
            F = a * np.sin(w * edges) / w - b * np.cos(w * edges) / w
            f += np.diff(F) / h
        out.append(f)
    return out
