"""
Compiled kernels for the Lagrangian Navier-Stokes finite-volume update.

The state is stored as deviations ``(dv, du, dE)`` from a constant base
state ``(v0, u0, theta0)``.  Fluxes are formed from the deviations directly,
so a small perturbation of a constant state carries no round-off floor.
Arrays include one ghost cell on each side.

Spatial scheme: central convective face fluxes (average of cell fluxes) and
compact two-point viscous/conductive face fluxes.  Time integration is
SSP-RK2 or RKL2 super-time-stepping; both are linear combinations of
forward-Euler stages, so the boundary-flux audit is carried along exactly.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_NEGATIVE_V = 2
STATUS_NEGATIVE_THETA = 3


@njit(cache=True)
def rhs(dv, du, dE, v0, u0, th0, R, cv, mu, kappa, dx, ov, ou, oE, fb):
    """Semi-discrete right-hand side on interior cells 1..m-2.

    ``fb`` receives the deviation fluxes through the first and last
    interior faces: fb[0:3] left, fb[3:6] right.
    """
    m = dv.size
    p0 = R * th0 / v0
    tht = np.empty(m)
    pt = np.empty(m)
    put = np.empty(m)
    for i in range(m):
        v = v0 + dv[i]
        uu = du[i]
        t_ = (dE[i] - u0 * uu - 0.5 * uu * uu) / cv
        tht[i] = t_
        pt[i] = R * (t_ * v0 - th0 * dv[i]) / (v * v0)
        put[i] = pt[i] * (u0 + uu) + p0 * uu
    pv = 0.0
    pu = 0.0
    pE = 0.0
    for f in range(m - 1):
        i = f
        j = f + 1
        vf = v0 + 0.5 * (dv[i] + dv[j])
        uf = u0 + 0.5 * (du[i] + du[j])
        dux = (du[j] - du[i]) / dx
        dthx = (tht[j] - tht[i]) / dx
        Fv = -0.5 * (du[i] + du[j])
        Fu = 0.5 * (pt[i] + pt[j]) - mu * dux / vf
        FE = 0.5 * (put[i] + put[j]) - (kappa * dthx + mu * uf * dux) / vf
        if f > 0:
            ov[i] = -(Fv - pv) / dx
            ou[i] = -(Fu - pu) / dx
            oE[i] = -(FE - pE) / dx
        if f == 0:
            fb[0] = Fv
            fb[1] = Fu
            fb[2] = FE
        if f == m - 2:
            fb[3] = Fv
            fb[4] = Fu
            fb[5] = FE
        pv = Fv
        pu = Fu
        pE = FE
    ov[0] = 0.0
    ou[0] = 0.0
    oE[0] = 0.0
    ov[m - 1] = 0.0
    ou[m - 1] = 0.0
    oE[m - 1] = 0.0


@njit(cache=True)
def _wrap(a):
    m = a.size
    a[0] = a[m - 2]
    a[m - 1] = a[1]


@njit(cache=True)
def _check(dv, dE, du, v0, u0, th0, cv):
    m = dv.size
    for i in range(1, m - 1):
        if not (np.isfinite(dv[i]) and np.isfinite(du[i]) and np.isfinite(dE[i])):
            return STATUS_NONFINITE
        if v0 + dv[i] <= 0.0:
            return STATUS_NEGATIVE_V
        uu = du[i]
        if th0 + (dE[i] - u0 * uu - 0.5 * uu * uu) / cv <= 0.0:
            return STATUS_NEGATIVE_THETA
    return STATUS_OK


@njit(cache=True)
def rkl2_coefficients(s):
    """RKL2 super-time-stepping coefficients (mu, nu, mu_tilde, gamma_tilde) for s stages."""
    b = np.empty(s + 1)
    for j in range(s + 1):
        if j < 3:
            b[j] = 1.0 / 3.0
        else:
            b[j] = (j * j + j - 2.0) / (2.0 * j * (j + 1.0))
    w1 = 4.0 / (s * s + s - 2.0)
    mu_ = np.zeros(s + 1)
    nu_ = np.zeros(s + 1)
    mut = np.zeros(s + 1)
    gt = np.zeros(s + 1)
    mut[1] = b[1] * w1
    for j in range(2, s + 1):
        mu_[j] = (2.0 * j - 1.0) / j * b[j] / b[j - 1]
        nu_[j] = -(j - 1.0) / j * b[j] / b[j - 2]
        mut[j] = mu_[j] * w1
        gt[j] = -(1.0 - b[j - 1]) * mut[j]
    return mu_, nu_, mut, gt


def rkl2_stages_for(dt, dt_fe):
    """Smallest stage count with (s^2+s-2)/4 * dt_fe >= dt (at least 2)."""
    s = 2
    while (s * s + s - 2) / 4.0 * dt_fe < dt:
        s += 1
    return s


@njit(cache=True)
def periodic_advance(dv, du, dE, v0, u0, th0, R, cv, mu, kappa, dx, dt, nsteps, scheme, s):
    """Advance a periodic state in place by ``nsteps`` steps.

    scheme 0 is SSP-RK2, scheme 1 is RKL2 with ``s`` stages.  Returns a
    status code (0 on success).
    """
    m = dv.size
    fb = np.empty(6)
    k0v = np.empty(m)
    k0u = np.empty(m)
    k0E = np.empty(m)
    kv = np.empty(m)
    ku = np.empty(m)
    kE = np.empty(m)
    if scheme == 1:
        mu_, nu_, mut, gt = rkl2_coefficients(s)
    y1v = np.empty(m)
    y1u = np.empty(m)
    y1E = np.empty(m)
    y2v = np.empty(m)
    y2u = np.empty(m)
    y2E = np.empty(m)
    for _ in range(nsteps):
        _wrap(dv)
        _wrap(du)
        _wrap(dE)
        rhs(dv, du, dE, v0, u0, th0, R, cv, mu, kappa, dx, k0v, k0u, k0E, fb)
        if scheme == 0:
            for i in range(m):
                y1v[i] = dv[i] + dt * k0v[i]
                y1u[i] = du[i] + dt * k0u[i]
                y1E[i] = dE[i] + dt * k0E[i]
            _wrap(y1v)
            _wrap(y1u)
            _wrap(y1E)
            rhs(y1v, y1u, y1E, v0, u0, th0, R, cv, mu, kappa, dx, kv, ku, kE, fb)
            for i in range(m):
                dv[i] = 0.5 * (dv[i] + y1v[i] + dt * kv[i])
                du[i] = 0.5 * (du[i] + y1u[i] + dt * ku[i])
                dE[i] = 0.5 * (dE[i] + y1E[i] + dt * kE[i])
        else:
            # y2 holds Y_{j-2}, y1 holds Y_{j-1}
            for i in range(m):
                y2v[i] = dv[i]
                y2u[i] = du[i]
                y2E[i] = dE[i]
                y1v[i] = dv[i] + mut[1] * dt * k0v[i]
                y1u[i] = du[i] + mut[1] * dt * k0u[i]
                y1E[i] = dE[i] + mut[1] * dt * k0E[i]
            for j in range(2, s + 1):
                _wrap(y1v)
                _wrap(y1u)
                _wrap(y1E)
                rhs(y1v, y1u, y1E, v0, u0, th0, R, cv, mu, kappa, dx, kv, ku, kE, fb)
                a = mu_[j]
                b = nu_[j]
                c = 1.0 - a - b
                d = mut[j] * dt
                e = gt[j] * dt
                for i in range(m):
                    nv = a * y1v[i] + b * y2v[i] + c * dv[i] + d * kv[i] + e * k0v[i]
                    nu2 = a * y1u[i] + b * y2u[i] + c * du[i] + d * ku[i] + e * k0u[i]
                    nE = a * y1E[i] + b * y2E[i] + c * dE[i] + d * kE[i] + e * k0E[i]
                    y2v[i] = y1v[i]
                    y2u[i] = y1u[i]
                    y2E[i] = y1E[i]
                    y1v[i] = nv
                    y1u[i] = nu2
                    y1E[i] = nE
            for i in range(m):
                dv[i] = y1v[i]
                du[i] = y1u[i]
                dE[i] = y1E[i]
        st = _check(dv, dE, du, v0, u0, th0, cv)
        if st != STATUS_OK:
            return st
    _wrap(dv)
    _wrap(du)
    _wrap(dE)
    return STATUS_OK


@njit(cache=True)
def dirichlet_advance(dv, du, dE, v0, u0, th0, R, cv, mu, kappa, dx, dt, nsteps, ghosts, flux_int):
    """SSP-RK2 on a truncated domain with prescribed ghost cells.

    ``ghosts[k]`` holds (left v,u,E, right v,u,E) deviations at time
    ``t0 + k dt`` for k = 0..nsteps.  ``flux_int`` accumulates the
    time-integrated deviation fluxes through the two boundary faces.
    Returns ``(status, steps_done)``.
    """
    m = dv.size
    fb = np.empty(6)
    k0v = np.empty(m)
    k0u = np.empty(m)
    k0E = np.empty(m)
    y1v = np.empty(m)
    y1u = np.empty(m)
    y1E = np.empty(m)
    for n in range(nsteps):
        dv[0] = ghosts[n, 0]
        du[0] = ghosts[n, 1]
        dE[0] = ghosts[n, 2]
        dv[m - 1] = ghosts[n, 3]
        du[m - 1] = ghosts[n, 4]
        dE[m - 1] = ghosts[n, 5]
        rhs(dv, du, dE, v0, u0, th0, R, cv, mu, kappa, dx, k0v, k0u, k0E, fb)
        for q in range(6):
            flux_int[q] += 0.5 * dt * fb[q]
        for i in range(1, m - 1):
            y1v[i] = dv[i] + dt * k0v[i]
            y1u[i] = du[i] + dt * k0u[i]
            y1E[i] = dE[i] + dt * k0E[i]
        y1v[0] = ghosts[n + 1, 0]
        y1u[0] = ghosts[n + 1, 1]
        y1E[0] = ghosts[n + 1, 2]
        y1v[m - 1] = ghosts[n + 1, 3]
        y1u[m - 1] = ghosts[n + 1, 4]
        y1E[m - 1] = ghosts[n + 1, 5]
        rhs(y1v, y1u, y1E, v0, u0, th0, R, cv, mu, kappa, dx, k0v, k0u, k0E, fb)
        for q in range(6):
            flux_int[q] += 0.5 * dt * fb[q]
        for i in range(1, m - 1):
            dv[i] = 0.5 * (dv[i] + y1v[i] + dt * k0v[i])
            du[i] = 0.5 * (du[i] + y1u[i] + dt * k0u[i])
            dE[i] = 0.5 * (dE[i] + y1E[i] + dt * k0E[i])
        st = _check(dv, dE, du, v0, u0, th0, cv)
        if st != STATUS_OK:
            return st, n + 1
    return STATUS_OK, nsteps
