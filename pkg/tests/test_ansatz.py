import numpy as np
import pytest

from wavecomposite.ansatz import (ResidualSeries, SERIES_KEYS, WeightEta, ansatz_fields, assemble_ansatz,
                                  build_ansatz, default_residual_times, eta_fields, eval_eta,
                                  initial_theta_gap, literal_initial_theta_gap, residual_bound_report,
                                  residual_grid, residuals)
from wavecomposite.errors import DomainError, ResolutionError
from wavecomposite.gas import GasParams, ThermoState
from wavecomposite.periodic import PeriodicPerturbation, perturbed_primitive
from wavecomposite.profiles import build_composite, composite_fields, contact_fields, eval_composite
from wavecomposite.riemann import EndStates, solve_pattern

from conftest import SHAPE

G = GasParams()


@pytest.fixture(scope="module")
def unperturbed(composite):
    return build_ansatz(G, composite, PeriodicPerturbation(), T=5.0)


def test_zero_perturbation_is_composite(unperturbed, composite):
    x = np.linspace(-60, 60, 2001)
    for t in (0.0, 1.0, 5.0):
        v, u, th = ansatz_fields(unperturbed, x, t)
        c = composite_fields(composite, G, x, t)
        assert max(np.max(np.abs(v - c.v)), np.max(np.abs(u - c.u)), np.max(np.abs(th - c.theta))) <= 1e-12
    assert assemble_ansatz(unperturbed, 0.3, 1.0) == eval_composite(composite, G, 0.3, 1.0)


def test_eta_limits_and_range(short_ansatz):
    w = short_ansatz.eta
    assert eval_eta(w, G, -1e3, 1.0)[0] == pytest.approx(0.0, abs=1e-8)
    assert eval_eta(w, G, 1e3, 1.0)[0] == pytest.approx(1.0, abs=1e-8)
    e = eta_fields(w, G, np.linspace(-50, 50, 1001), 2.0).eta
    assert np.all((e >= 0) & (e <= 1)) and np.all(np.diff(e) * np.sign(w.vo_right - w.vo_left) >= -1e-14)


def test_eta_chain_rule(short_ansatz):
    w = short_ansatz.eta
    x = np.linspace(-10, 10, 401)
    ef = eta_fields(w, G, x, 1.5)
    cf = contact_fields(w.backing, G, x, 1.5)
    assert np.max(np.abs(ef.eta_x * (w.vo_right - w.vo_left) - cf.v_x)) < 1e-10
    assert np.max(np.abs(ef.eta_t * (w.vo_right - w.vo_left) - cf.v_t)) < 1e-10


def test_eta_degenerate_mode(short_ansatz):
    w = WeightEta(short_ansatz.eta.backing, 1.0, 1.0)
    eta, eta_t, eta_x, flag = eval_eta(w, G, 0.4, 1.0)
    assert (eta, eta_t, eta_x, flag) == (0.5, 0.0, 0.0, True)


def test_ansatz_time_range(short_ansatz):
    with pytest.raises(DomainError):
        ansatz_fields(short_ansatz, np.zeros(3), short_ansatz.T + 1)


def test_initial_gap_matches_direct_difference(short_ansatz, composite):
    x = np.linspace(-40, 40, 4001)
    c = composite_fields(composite, G, x, 0.0)
    v0, u0, th0 = perturbed_primitive(G, c.v, c.u, c.theta, short_ansatz.pert, x)
    vb, ub, thb = ansatz_fields(short_ansatz, x, 0.0)
    assert np.max(np.abs(v0 - vb)) < 1e-14 and np.max(np.abs(u0 - ub)) < 1e-14
    assert np.max(np.abs((th0 - thb) - initial_theta_gap(short_ansatz, x))) < 1e-12


def test_contact_only_gap_differs_with_rarefactions(short_ansatz):
    x = np.linspace(-40, 40, 4001)
    diff = initial_theta_gap(short_ansatz, x) - literal_initial_theta_gap(short_ansatz, x)
    assert np.max(np.abs(diff)) > 1e-9


def test_contact_only_gap_exact_for_pure_contact():
    pat = solve_pattern(G, EndStates(ThermoState(1.0, 0.0, 1.0), ThermoState(1.1, 0.0, 1.1)))
    af = build_ansatz(G, build_composite(G, pat), SHAPE.scaled_to(1e-2), T=0.1, sample_dt=0.01, middle=False)
    x = np.linspace(-30, 30, 601)
    assert np.max(np.abs(initial_theta_gap(af, x) - literal_initial_theta_gap(af, x))) < 1e-15


def test_discrete_mass_residual_matches_closed_form(short_ansatz):
    x = residual_grid(short_ansatz, 1.0)
    rt = residuals(short_ansatz, x, 1.0)
    f, fc = rt.norms["F"][0], rt.norms["F_closed"][0]
    assert fc > 100 * rt.norms["F_noise"][0]
    assert abs(f - fc) / fc < 0.01
    assert all(np.all(np.isfinite(a)) for a in (rt.F, rt.G, rt.H))


def test_resolution_guard(short_ansatz):
    with pytest.raises(ResolutionError):
        residuals(short_ansatz, np.linspace(-40, 40, 200), 1.0)


def test_residuals_vanish_without_waves():
    s = ThermoState(1.0, 0.0, 1.0)
    af = build_ansatz(G, build_composite(G, solve_pattern(G, EndStates(s, s))), PeriodicPerturbation(), T=5.0)
    rt = residuals(af, np.linspace(-20, 20, 801), 2.0)
    assert np.all(rt.F == 0) and np.all(rt.G == 0) and np.all(rt.H == 0)
    assert all(np.all(v == 0) for v in rt.subtotals.values())


def test_default_residual_times():
    t = default_residual_times(80.0)
    assert t[0] == 1.0 and t[-1] == 80.0 and np.all(np.diff(t) > 0)
    assert np.sum(t <= 8.0) >= 20


def _synthetic(t, g2_rate, h4_rate):
    L1 = {k: np.zeros(t.size) for k in SERIES_KEYS}
    L1["F"] = L1["F_closed"] = 1e-3 * np.exp(-t)
    L1["F_noise"] = np.full(t.size, 1e-14)
    L1["G3"] = 1e-2 * np.exp(-0.1 * t)
    L1["G2"] = (1 + t) ** g2_rate
    L1["H2"] = (1 + t) ** -1.0
    L1["H4"] = (1 + t) ** h4_rate
    return ResidualSeries(t, L1, L1, L1)


def test_bound_report_on_synthetic_rates():
    t = np.linspace(1, 20, 40)
    good = residual_bound_report(_synthetic(t, -7 / 8, -1.0))
    assert good["F_rate"] == pytest.approx(1.0, rel=1e-9) and good["F_pass"]
    assert good["G2_bounded"] and good["H4_bounded"] and good["F_agreement_pass"]
    slow = residual_bound_report(_synthetic(t, -0.3, -0.3))
    assert not slow["G2_bounded"] and not slow["H4_bounded"]
