"""
Cauchy problem on a truncated line with periodic-solution boundary data.

The state is kept as deviations of (v, u, E) from the left end state, the
same finite-volume scheme as on the torus is used, and the single ghost
cell on each side is filled from the exact periodic solutions about the
end states at every stage time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from . import gas
from .ansatz import AnsatzField, ansatz_fields, initial_theta_gap, literal_initial_theta_gap
from .errors import AmplitudeError, BlowUpError, DomainError, DomainTooSmallError, UsageError
from .gas import GasParams, ThermoState
from .periodic import PeriodicPerturbation, PeriodicSolution, perturbed_primitive
from .profiles import CompositeWave, composite_fields
from .riemann import WavePattern, riemann_fields


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise DomainError("x_max must exceed x_min")
        if int(self.n_cells) != self.n_cells or self.n_cells < 256:
            raise DomainError(f"n_cells must be an integer >= 256, got {self.n_cells!r}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + self.dx * (np.arange(self.n_cells) + 0.5)

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.x_min, self.x_max, self.n_cells * factor)


@dataclass
class SolverState:
    t: float
    grid: Grid1D
    base: ThermoState
    dv: np.ndarray
    du: np.ndarray
    dE: np.ndarray

    def primitive(self, g: GasParams):
        b = self.base
        u = b.u + self.du
        th = b.theta + (self.dE - b.u * self.du - 0.5 * self.du ** 2) / g.cv
        return b.v + self.dv, u, th

    def conservative(self, g: GasParams):
        b = self.base
        return b.v + self.dv, b.u + self.du, gas.total_energy(g, b) + self.dE

    def pressure(self, g: GasParams):
        v, _, th = self.primitive(g)
        return g.R * th / v

    def copy(self) -> "SolverState":
        return SolverState(self.t, self.grid, self.base, self.dv.copy(), self.du.copy(), self.dE.copy())


def _deviations(g: GasParams, base: ThermoState, v, u, th):
    E = g.cv * th + 0.5 * u * u
    return v - base.v, u - base.u, E - gas.total_energy(g, base)


def init_cauchy(g: GasParams, cw: CompositeWave, pert: PeriodicPerturbation, grid: Grid1D) -> SolverState:
    """Composite wave at t=0 plus the periodic perturbation of (v, u, E)."""
    x = grid.centers
    c = composite_fields(cw, g, x, 0.0)
    v, u, th = perturbed_primitive(g, c.v, c.u, c.theta, pert, x)
    if np.any(v <= 0) or np.any(th <= 0):
        raise AmplitudeError("perturbed Cauchy data loses positivity")
    base = cw.pattern.ends.left
    dv, du, dE = _deviations(g, base, v, u, th)
    return SolverState(0.0, grid, base, dv, du, dE)


@dataclass(eq=False)
class EdgeData:
    """Exact far-field solutions feeding the ghost cells."""
    left: PeriodicSolution
    right: PeriodicSolution

    def ghosts(self, g: GasParams, grid: Grid1D, base: ThermoState, times) -> np.ndarray:
        """Ghost deviations from ``base``; shape (nt, 6) = (left v,u,E, right v,u,E)."""
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, 6))
        E0 = gas.total_energy(g, base)
        for j, (sol, xg) in enumerate(((self.left, grid.x_min - 0.5 * grid.dx),
                                        (self.right, grid.x_max + 0.5 * grid.dx))):
            d = sol.deviation_series(xg, times)
            b = sol.base
            out[:, 3 * j] = b.v - base.v + d[:, 0]
            out[:, 3 * j + 1] = b.u - base.u + d[:, 1]
            out[:, 3 * j + 2] = gas.total_energy(g, b) - E0 + d[:, 2]
        return out


def edge_data(af: AnsatzField) -> EdgeData:
    return EdgeData(af.periodic["minus"], af.periodic["plus"])


def stable_dt(g: GasParams, st: SolverState, cfl: float = 0.4) -> float:
    v, _, th = st.primitive(g)
    lam = float(np.max(np.sqrt(g.gamma * g.R * th) / v))
    dx = st.grid.dx
    return min(cfl * dx / lam, cfl * dx * dx * float(np.min(v)) / (2.0 * g.max_diffusivity))


def _ext(a):
    out = np.empty(a.size + 2)
    out[1:-1] = a
    return out


def _advance(g, st: SolverState, boundary: EdgeData, dt: float, nsteps: int, flux_int=None):
    times = st.t + dt * np.arange(nsteps + 1)
    gh = boundary.ghosts(g, st.grid, st.base, times)
    dv, du, dE = _ext(st.dv), _ext(st.du), _ext(st.dE)
    fi = np.zeros(6) if flux_int is None else flux_int
    b = st.base
    status, done = K.dirichlet_advance(dv, du, dE, b.v, b.u, b.theta, g.R, g.cv, g.mu, g.kappa,
                                       st.grid.dx, dt, nsteps, gh, fi)
    if status != K.STATUS_OK:
        raise BlowUpError(f"Cauchy step failed with status {status} at t={st.t + done * dt:.6g}",
                          dump={"t": st.t + done * dt, "dv": dv[1:-1], "du": du[1:-1], "dE": dE[1:-1]})
    return SolverState(float(times[-1]), st.grid, st.base, dv[1:-1].copy(), du[1:-1].copy(),
                       dE[1:-1].copy())


def step_cauchy(g: GasParams, st: SolverState, boundary: EdgeData, dt: float) -> SolverState:
    """One SSP-RK2 step (the input state is left untouched)."""
    if not dt > 0:
        raise UsageError("dt must be positive")
    return _advance(g, st, boundary, dt, 1)


def advance_to(g: GasParams, st: SolverState, boundary: EdgeData, t_end: float, cfl: float = 0.4,
               flux_int=None) -> SolverState:
    """Advance to ``t_end`` with equal steps no larger than the stable step."""
    if t_end < st.t:
        raise UsageError("t_end precedes the current time")
    if t_end == st.t:
        return st.copy()
    span = t_end - st.t
    nsteps = int(np.ceil(span / stable_dt(g, st, cfl) * (1 - 1e-12)))
    out = _advance(g, st, boundary, span / nsteps, nsteps, flux_int)
    out.t = float(t_end)
    return out


def check_domain(g: GasParams, pat: WavePattern, grid: Grid1D, T: float, margin_cells: int = 10):
    """Raise if the wave footprint at time T (fans plus diffusive tails) gets within 10 cells of an edge."""
    lam_l = gas.eigenvalue(g, pat.ends.left.v, pat.ends.left.theta, 1)
    lam_r = gas.eigenvalue(g, pat.ends.right.v, pat.ends.right.theta, 3)
    tail = 6.0 * np.sqrt(4.0 * g.max_diffusivity * (1.0 + T)) + 20.0
    left_edge = lam_l * T - tail
    right_edge = lam_r * T + tail
    pad = margin_cells * grid.dx
    if left_edge < grid.x_min + pad or right_edge > grid.x_max - pad:
        raise DomainTooSmallError(
            f"wave footprint [{left_edge:.1f}, {right_edge:.1f}] at t={T} within {margin_cells} cells "
            f"of [{grid.x_min}, {grid.x_max}]")
    return left_edge, right_edge


class PerturbationFields(NamedTuple):
    x: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    zeta: np.ndarray


def extract_perturbation(g: GasParams, st: SolverState, af: AnsatzField) -> PerturbationFields:
    x = st.grid.centers
    v, u, th = st.primitive(g)
    vb, ub, thb = ansatz_fields(af, x, st.t)
    return PerturbationFields(x, v - vb, u - ub, th - thb)


def initial_identity_errors(g: GasParams, st0: SolverState, af: AnsatzField):
    """sup-norm mismatch of the t=0 perturbation against the exact and the contact-only closed forms."""
    p = extract_perturbation(g, st0, af)
    base = max(float(np.max(np.abs(p.phi))), float(np.max(np.abs(p.psi))))
    exact = max(base, float(np.max(np.abs(p.zeta - initial_theta_gap(af, p.x)))))
    literal = max(base, float(np.max(np.abs(p.zeta - literal_initial_theta_gap(af, p.x)))))
    return exact, literal


def fan_interior_mask(g: GasParams, pat: WavePattern, x, t: float):
    """Points inside the two rarefaction fans of the Riemann solution."""
    lam_l, lam_ml, lam_mr, lam_r = pat.fan_speeds(g)
    xi = np.asarray(x) / t
    return ((xi >= lam_l) & (xi <= lam_ml)) | ((xi >= lam_mr) & (xi <= lam_r))


def riemann_distance(g: GasParams, st: SolverState, pat: WavePattern, region: str = "fans") -> float:
    """sup |(v,u,theta) - Riemann(x/t)| over the fan interiors ("fans") or |x| <= 0.9 max|lambda| t ("wide")."""
    if not st.t > 0:
        raise DomainError("Riemann comparison needs t > 0")
    x = st.grid.centers
    lam = np.abs(pat.fan_speeds(g))
    if region == "fans":
        sel = fan_interior_mask(g, pat, x, st.t)
    elif region == "wide":
        sel = np.abs(x) <= 0.9 * lam.max() * st.t
    else:
        raise UsageError(f"unknown region {region!r}")
    if not sel.any():
        return 0.0
    v, u, th = st.primitive(g)
    rv, ru, rt = riemann_fields(g, pat, x[sel] / st.t)
    return float(max(np.max(np.abs(v[sel] - rv)), np.max(np.abs(u[sel] - ru)), np.max(np.abs(th[sel] - rt))))


def h1_squared(p: PerturbationFields, dx: float) -> float:
    tot = 0.0
    for f in (p.phi, p.psi, p.zeta):
        fx = np.gradient(f, dx)
        tot += float(np.sum(f * f + fx * fx) * dx)
    return tot


def default_monitor_times(T: float) -> np.ndarray:
    """Fine sampling while the perturbation builds up, coarser later."""
    early = np.arange(0.0, min(2.0, T), 0.05)
    late = np.arange(min(2.0, T), T + 1e-9, 0.25)
    return np.unique(np.round(np.concatenate([early, late, [T]]), 12))


@dataclass
class CauchyRun:
    grid: Grid1D
    times: np.ndarray
    series: dict                     # name -> array over times
    checkpoints: dict                # t -> SolverState
    phi_history: np.ndarray          # (nt, n) phi at the monitor times
    phi_x_history: np.ndarray
    conservation: dict
    initial_identity: tuple          # (exact, contact-only) sup mismatch at t=0
    footprint: tuple
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)


def run_cauchy(g: GasParams, af: AnsatzField, grid: Grid1D, T: float = 80.0,
               checkpoints=(10.0, 20.0, 40.0, 80.0), monitor_times=None, cfl: float = 0.4,
               keep_phi: bool = True, guard: bool = True) -> CauchyRun:
    """Solve the Cauchy problem, monitoring the distance to the ansatz and to the Riemann solution."""
    import time as _time

    t_start = _time.perf_counter()
    if T > af.T + 1e-9:
        raise DomainError(f"T={T} exceeds the periodic history (T={af.T})")
    pat = af.composite.pattern
    footprint = check_domain(g, pat, grid, T) if guard else (np.nan, np.nan)
    st = init_cauchy(g, af.composite, af.pert, grid)
    st0 = st.copy()
    boundary = edge_data(af)
    mt = default_monitor_times(T) if monitor_times is None else np.asarray(monitor_times, float)
    cps = sorted(float(c) for c in checkpoints if c <= T + 1e-12)
    mt = np.unique(np.round(np.concatenate([mt, cps, [0.0]]), 12))
    mt = mt[mt <= T + 1e-12]
    names = ("Linf_diff_ansatz", "Linf_diff_riemann", "Linf_diff_riemann_wide", "H1_pert", "L2_pert")
    series = {k: np.full(mt.size, np.nan) for k in names}
    phis = np.empty((mt.size, grid.n_cells)) if keep_phi else np.empty((0, grid.n_cells))
    phixs = np.empty_like(phis)
    cp_states = {}
    flux_int = np.zeros(6)
    tot0 = np.array([a.sum() for a in (st.dv, st.du, st.dE)]) * grid.dx
    dx = grid.dx
    for i, t in enumerate(mt):
        if t > st.t:
            st = advance_to(g, st, boundary, float(t), cfl, flux_int)
        p = extract_perturbation(g, st, af)
        series["Linf_diff_ansatz"][i] = max(np.max(np.abs(p.phi)), np.max(np.abs(p.psi)), np.max(np.abs(p.zeta)))
        hsq = h1_squared(p, dx)
        series["H1_pert"][i] = np.sqrt(hsq)
        series["L2_pert"][i] = np.sqrt(sum(float(np.sum(f * f) * dx) for f in (p.phi, p.psi, p.zeta)))
        if t > 0:
            series["Linf_diff_riemann"][i] = riemann_distance(g, st, pat, "fans")
            series["Linf_diff_riemann_wide"][i] = riemann_distance(g, st, pat, "wide")
        if keep_phi:
            phis[i] = p.phi
            phixs[i] = np.gradient(p.phi, dx)
        if any(abs(t - c) < 1e-9 for c in cps):
            cp_states[float(t)] = st.copy()
    tot = np.array([a.sum() for a in (st.dv, st.du, st.dE)]) * dx
    # change of the totals plus net outflow through the two edges
    defect = (tot - tot0) + (flux_int[3:] - flux_int[:3])
    scale = np.maximum(np.abs(tot0), 1.0) + np.abs(flux_int[3:]) + np.abs(flux_int[:3])
    conservation = {"defect": defect.tolist(), "relative": float(np.max(np.abs(defect) / scale)),
                    "flux_int": flux_int.tolist()}
    ident = initial_identity_errors(g, st0, af)
    return CauchyRun(grid, mt, series, cp_states, phis, phixs, conservation, ident, footprint,
                     _time.perf_counter() - t_start)


def theorem_proxy(run: CauchyRun, checkpoints=(10.0, 20.0, 40.0, 80.0), band: float = 0.05):
    """Dyadic-checkpoint verdicts for the distance to the ansatz and to the Riemann fans."""
    t = run.times
    out = {}

    def at(name, tc):
        i = int(np.argmin(np.abs(t - tc)))
        return float(run.series[name][i])

    cps = [c for c in checkpoints if c <= t[-1] + 1e-9]
    vals = [at("Linf_diff_ansatz", c) for c in cps]
    out["ansatz_checkpoints"] = dict(zip(cps, vals))
    out["ansatz_monotone"] = all(b <= (1 + band) * a for a, b in zip(vals, vals[1:]))
    out["ansatz_ratio"] = vals[0] / vals[-1] if vals and vals[-1] > 0 else np.inf
    out["ansatz_pass"] = bool(out["ansatz_monotone"] and out["ansatz_ratio"] >= 2.0)
    rc = [c for c in cps if c >= 20.0]
    rv = [at("Linf_diff_riemann", c) for c in rc]
    out["riemann_checkpoints"] = dict(zip(rc, rv))
    out["riemann_ratio"] = rv[0] / rv[-1] if rv and rv[-1] > 0 else np.inf
    out["riemann_pass"] = bool(out["riemann_ratio"] >= 2.0)
    wv = [at("Linf_diff_riemann_wide", c) for c in rc]
    out["riemann_wide_ratio"] = wv[0] / wv[-1] if wv and wv[-1] > 0 else np.inf
    T = t[-1]
    out["half_vs_end"] = (at("Linf_diff_ansatz", T / 2), at("Linf_diff_ansatz", T))
    return out


def self_convergence(g: GasParams, af: AnsatzField, x_min: float = -60.0, x_max: float = 60.0,
                     n: int = 512, T: float = 1.0, cfl: float = 0.4) -> dict:
    """Observed order from runs on n, 2n and 4n cells over the same domain."""
    from .diagnostics import observed_order

    finals = []
    for m in (n, 2 * n, 4 * n):
        grid = Grid1D(x_min, x_max, m)
        check_domain(g, af.composite.pattern, grid, T)
        st = init_cauchy(g, af.composite, af.pert, grid)
        finals.append(advance_to(g, st, edge_data(af), T, cfl))
    return {name: observed_order(*(getattr(s, name) for s in finals)) for name in ("dv", "du", "dE")}
