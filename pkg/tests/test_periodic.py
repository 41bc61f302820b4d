import numpy as np
import pytest
from scipy.integrate import quad

from wavecomposite.errors import AmplitudeError, DomainError, UsageError
from wavecomposite.gas import GasParams, ThermoState
from wavecomposite.periodic import (PeriodicPerturbation, TorusState, build_initial_data, estimate_decay,
                                    self_convergence, solve_periodic, stable_dt, step_torus, torus_state,
                                    w2inf, zero_solution)

from oracles import linear_decay_rate

G = GasParams()
BASE = ThermoState(1.0, 0.0, 1.0)
SHAPE = PeriodicPerturbation(((1, 1.0, 0.0),), ((1, 0.0, 1.0),), ((1, 0.5, 0.5),))


def test_zero_perturbation_gives_base_state():
    x, v, u, th = build_initial_data(BASE, PeriodicPerturbation(), G, n=64)
    assert np.all(v == 1.0) and np.all(u == 0.0) and np.all(th == 1.0)


def test_velocity_only_temperature_formula():
    pert = PeriodicPerturbation((), ((2, 0.003, 0.001),), ((1, 0.002, 0.0),))
    x, v, u, th = build_initial_data(BASE, pert, G, n=64, eps0=10.0)
    _, p2, p3 = pert.evaluate(x)
    expected = BASE.theta + (G.gamma - 1) / G.R * p3 - (G.gamma - 1) / (2 * G.R) * p2 ** 2
    assert np.allclose(th, expected, atol=1e-15, rtol=0)


def test_single_mode_zero_mean():
    pert = PeriodicPerturbation(((1, 0.01, 0.0),))
    _, v, _, _ = build_initial_data(BASE, pert, G, n=128, eps0=10.0)
    assert abs(v.mean() - BASE.v) < 1e-15


def test_amplitude_is_h3_norm():
    pert = PeriodicPerturbation(((1, 0.3, 0.1), (2, 0.0, 0.2)), ((3, 0.1, 0.0),), ((1, 0.0, 0.05),))
    w = 2 * np.pi
    total = 0.0
    for comp in pert.components:
        for j in range(4):
            # j-th derivative of sum a cos(wkx) + b sin(wkx), squared and integrated over the period
            def d(x, comp=comp, j=j):
                s = 0.0
                for k, a, b in comp:
                    c = (w * k) ** j
                    phase = j * np.pi / 2
                    s += c * (a * np.cos(w * k * x + phase) + b * np.sin(w * k * x + phase))
                return s * s
            total += quad(d, 0, 1, limit=200)[0]
    assert pert.eps1 == pytest.approx(np.sqrt(total), rel=1e-10)


def test_amplitude_and_positivity_errors():
    with pytest.raises(AmplitudeError):
        build_initial_data(BASE, SHAPE.scaled_to(0.1), G, eps0=1e-2)
    with pytest.raises(AmplitudeError):
        build_initial_data(BASE, PeriodicPerturbation(((1, 2.0, 0.0),)), G, eps0=1e9)


def test_zero_mode_rejected():
    with pytest.raises(DomainError):
        PeriodicPerturbation(((0, 1.0, 0.0),))


@pytest.mark.parametrize("scheme", ["ssp-rk2", "rkl2"])
def test_constant_state_is_equilibrium(scheme):
    st = torus_state(G, BASE, PeriodicPerturbation(), 64)
    dt = min(stable_dt(G, st))
    for _ in range(10):
        st = step_torus(G, st, dt, scheme)
    assert np.max(np.abs(st.dv)) < 1e-15 and np.max(np.abs(st.du)) < 1e-15 and np.max(np.abs(st.dE)) < 1e-15


def test_sums_conserved_over_many_steps():
    st = torus_state(G, BASE, SHAPE.scaled_to(1e-2), 64)
    s0 = np.array([st.dv.sum(), st.du.sum(), st.dE.sum()])
    dt = min(stable_dt(G, st))
    for _ in range(1000):
        st = step_torus(G, st, dt)
    s1 = np.array([st.dv.sum(), st.du.sum(), st.dE.sum()])
    scale = np.array([BASE.v, 1.0, G.cv * BASE.theta]) * st.n
    assert np.max(np.abs(s1 - s0) / scale) < 1e-11


def test_step_leaves_input_untouched():
    st = torus_state(G, BASE, SHAPE.scaled_to(1e-2), 32)
    before = st.dv.copy()
    step_torus(G, st, 1e-4)
    assert np.array_equal(st.dv, before)


def test_unknown_scheme():
    st = torus_state(G, BASE, SHAPE.scaled_to(1e-2), 32)
    with pytest.raises(UsageError):
        step_torus(G, st, 1e-4, "euler")


@pytest.mark.parametrize("n", [16, 32])
def test_self_convergence_second_order(n):
    orders = self_convergence(G, BASE, SHAPE.scaled_to(1e-2), n=n)
    assert all(abs(o - 2.0) < 0.3 for o in orders.values())


def test_w2inf_of_sine():
    n = 256
    x = np.arange(n) / n
    f = np.sin(2 * np.pi * x)
    w = 2 * np.pi
    assert w2inf(f, 1 / n) == pytest.approx(1 + w + w * w, rel=1e-3)


@pytest.fixture(scope="module")
def decaying():
    return solve_periodic(G, BASE, SHAPE.scaled_to(1e-3), n=64, T=20.0, sample_dt=0.05)


def test_decay_rate_matches_linear_theory(decaying):
    est = estimate_decay(decaying)
    ref = linear_decay_rate(BASE.v, BASE.theta, 2 * np.pi, G.R, G.gamma, G.mu, G.kappa)
    assert est.r2 > 0.98
    assert est.rate == pytest.approx(ref, rel=0.02)


def test_history_reproduces_final_state(decaying):
    n = decaying.n
    x = np.arange(n) / n
    tf = decaying.tilde(x, decaying.T)
    assert np.allclose(tf.v, decaying.final.dv, atol=10 * decaying.truncation + 1e-15)
    assert decaying.conservation_drift < 1e-11


def test_amplitude_scaling_linear():
    a = solve_periodic(G, BASE, SHAPE.scaled_to(1e-3), n=64, T=10.0, sample_dt=0.05)
    b = solve_periodic(G, BASE, SHAPE.scaled_to(5e-4), n=64, T=10.0, sample_dt=0.05)
    i = np.searchsorted(a.times, 5.0)
    ratio = a.norms["Linf_u"][i] / b.norms["Linf_u"][i]
    assert ratio == pytest.approx(2.0, rel=0.1)


def test_zero_solution_reports_underflow():
    est = estimate_decay(zero_solution(G, BASE, T=20.0))
    assert est.underflow and np.isnan(est.rate)


def test_history_time_range(decaying):
    with pytest.raises(DomainError):
        decaying.tilde(np.zeros(3), decaying.T + 1.0)


def test_positivity_preserved(decaying):
    v, u, th = decaying.final.primitive(G)
    assert np.all(v > 0) and np.all(th > 0)
