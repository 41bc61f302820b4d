import numpy as np
import pytest
from scipy.integrate import dblquad

from wavecomposite.diagnostics import (OMEGA_C, OMEGA_MINUS, OMEGA_PLUS, HeatKernelWeight, RunReport,
                                       classify_region, detect_floor, fit_decay, g_sup_numeric, norm,
                                       observed_order, region_speeds, restrict, weighted_square_integral)
from wavecomposite.errors import DataError, DomainError, UsageError
from wavecomposite.gas import GasParams, ThermoState
from wavecomposite.riemann import EndStates, solve_pattern


@pytest.mark.parametrize("kind", ["L1", "L2", "Linf", "H1", "W2inf"])
def test_zero_field_norms(kind):
    assert norm(np.zeros(50), kind, 0.1) == 0.0


def test_sine_l2():
    x = np.linspace(0, 1, 20001)
    assert norm(np.sin(2 * np.pi * x), "L2", x[1] - x[0]) == pytest.approx(1 / np.sqrt(2), abs=1e-6)


def test_constant_linf():
    assert norm(np.full(7, -3.5), "Linf") == 3.5


def test_norm_rejects_nan_and_bad_kind():
    with pytest.raises(DataError):
        norm(np.array([1.0, np.nan]), "L1")
    with pytest.raises(UsageError):
        norm(np.ones(3), "L3")


def test_exact_exponential_fit():
    t = np.linspace(0, 5, 30)
    fit = fit_decay(t, 3 * np.exp(-2 * t), "exp")
    assert fit.exponent == pytest.approx(-2, abs=1e-10)
    assert fit.prefactor == pytest.approx(3, abs=1e-10)
    assert fit.r2 == pytest.approx(1, abs=1e-10)


def test_exact_power_fit():
    t = np.linspace(1, 80, 40)
    assert fit_decay(t, 5 * (1 + t) ** (-7 / 8), "power").exponent == pytest.approx(-7 / 8, abs=1e-10)


@pytest.mark.parametrize("model,truth", [("exp", -0.3), ("power", -0.875)])
def test_noisy_fit(model, truth):
    rng = np.random.default_rng(5)
    t = np.linspace(1, 40, 60)
    clean = np.exp(truth * t) if model == "exp" else (1 + t) ** truth
    noisy = clean * (1 + 0.01 * rng.uniform(-1, 1, t.size))
    assert fit_decay(t, noisy, model).exponent == pytest.approx(truth, rel=0.05)


def test_fit_errors():
    t = np.arange(12.0)
    with pytest.raises(DataError):
        fit_decay(t, -np.ones(12))
    with pytest.raises(DataError):
        fit_decay(t[:5], np.ones(5))
    with pytest.raises(UsageError):
        fit_decay(t, np.ones(12), "log")


def test_floor_detection():
    t = np.linspace(0, 40, 81)
    y = np.maximum(np.exp(-t), 1e-12)
    assert 1e-12 < detect_floor(t, y) <= 1e-10
    assert detect_floor(t, np.exp(-t)) == 0.0


@pytest.mark.parametrize("sigma", [0.05, 0.1, 0.25])
def test_g_sup_identity(sigma):
    hk = HeatKernelWeight(sigma)
    assert g_sup_numeric(hk) == pytest.approx(np.sqrt(np.pi / sigma), rel=1e-6)
    assert hk.g(1e4, 0.0) == pytest.approx(hk.g_sup, rel=1e-12)


def test_g_t_identity_second_order():
    hk = HeatKernelWeight(0.1)
    x = np.linspace(-20, 20, 401)
    t = 2.0
    errs = []
    for dt in (1e-2, 5e-3):
        gt = (hk.g(x, t + dt) - hk.g(x, t - dt)) / (2 * dt)
        errs.append(np.max(np.abs(4 * hk.sigma * gt - hk.w_x(x, t))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert np.max(np.abs(4 * hk.sigma * hk.g_t(x, t) - hk.w_x(x, t))) < 1e-15


def test_weighted_integral_zero_field():
    t = np.linspace(0, 1, 11)
    x = np.linspace(-5, 5, 101)
    z = np.zeros((t.size, x.size))
    wi = weighted_square_integral(t, x, z, z, HeatKernelWeight(0.1))
    assert wi.lhs == 0 and wi.rhs == 0


def test_weighted_integral_static_gaussian():
    hk = HeatKernelWeight(0.1)
    t = np.linspace(0, 2, 81)
    x = np.linspace(-30, 30, 3001)
    h0 = np.exp(-x ** 2)
    h = np.tile(h0, (t.size, 1))
    hx = np.zeros_like(h)  # drops the gradient term so the right side is 4 pi ||h(0)||^2
    wi = weighted_square_integral(t, x, h, hx, hk)
    lhs_ref = dblquad(lambda xx, tt: np.exp(-2 * xx * xx) * hk.w(xx, tt) ** 2, 0, 2, -30, 30)[0]
    assert wi.lhs == pytest.approx(lhs_ref, rel=2e-4)  # trapezoid in t with dt = 0.025
    assert wi.rhs == pytest.approx(4 * np.pi * np.sqrt(np.pi / 2), rel=1e-6)
    assert wi.lhs <= wi.rhs


def test_weighted_integral_shape_errors():
    with pytest.raises(DataError):
        weighted_square_integral(np.arange(3.0), np.arange(4.0), np.zeros((3, 4)), np.zeros((2, 4)),
                                 HeatKernelWeight(0.1))


def test_region_classification(pattern, gp):
    lam1, lam3 = region_speeds(gp, pattern)
    assert classify_region(gp, pattern, 0.0, 3.0) == OMEGA_C
    assert classify_region(gp, pattern, (lam3 * 3.0 + 1) / 2, 3.0) == OMEGA_PLUS
    assert classify_region(gp, pattern, (lam1 * 3.0 - 1) / 2, 3.0) == OMEGA_MINUS
    assert classify_region(gp, pattern, lam3 * 3.0 / 2, 3.0) == OMEGA_C
    with pytest.raises(DomainError):
        classify_region(gp, pattern, 0.0, 0.0)


def test_region_classification_degenerate():
    g = GasParams()
    s = ThermoState(1.0, 0.0, 1.0)
    pat = solve_pattern(g, EndStates(s, s))
    out = classify_region(g, pat, np.linspace(-10, 10, 21), 1.0)
    assert set(out) <= {OMEGA_MINUS, OMEGA_C, OMEGA_PLUS}


def test_report_verdicts_reference_series():
    rep = RunReport()
    rep.add_series("a", [0, 1], [1.0, 0.5])
    rep.add_verdict("ok", True, 0.5, 1.0, series="a")
    with pytest.raises(DataError):
        rep.add_verdict("bad", True, 0.5, 1.0, series="missing")
    d = rep.to_dict()
    assert d["verdicts"]["ok"]["threshold"] == 1.0 and rep.all_pass


def test_restrict_and_order():
    assert np.array_equal(restrict(np.array([1.0, 3.0, 5.0, 7.0]), 2), np.array([2.0, 6.0]))
    # u_h = exact + C h^2 on nested cells
    exact = np.linspace(0, 1, 8)
    fine = np.repeat(exact, 4) + 1e-4 / 16
    mid = np.repeat(exact, 2) + 1e-4 / 4
    coarse = exact + 1e-4
    assert observed_order(coarse, mid, fine) == pytest.approx(2.0, abs=1e-9)
