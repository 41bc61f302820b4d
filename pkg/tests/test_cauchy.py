import numpy as np
import pytest

from wavecomposite import gas
from wavecomposite.ansatz import build_ansatz
from wavecomposite.cauchy import (Grid1D, advance_to, check_domain, edge_data, fan_interior_mask,
                                  init_cauchy, riemann_distance, run_cauchy, self_convergence, stable_dt,
                                  step_cauchy, theorem_proxy)
from wavecomposite.errors import AmplitudeError, DomainError, DomainTooSmallError, UsageError
from wavecomposite.gas import GasParams, ThermoState
from wavecomposite.periodic import PeriodicPerturbation
from wavecomposite.profiles import build_composite
from wavecomposite.riemann import EndStates, solve_pattern

from conftest import SHAPE

G = GasParams()
GRID = Grid1D(-60.0, 60.0, 512)


@pytest.fixture(scope="module")
def short_run(short_ansatz):
    return run_cauchy(G, short_ansatz, GRID, T=2.0, checkpoints=(1.0, 2.0))


@pytest.mark.parametrize("args", [(1.0, 0.0, 512), (0.0, 1.0, 100), (0.0, 1.0, 512.5)])
def test_grid_validation(args):
    with pytest.raises(DomainError):
        Grid1D(*args)


def test_grid_geometry():
    assert GRID.dx == pytest.approx(120 / 512)
    assert GRID.centers[0] == pytest.approx(-60 + GRID.dx / 2)
    assert GRID.refined().n_cells == 1024


def test_constant_state_stays_constant():
    s = ThermoState(1.0, 0.0, 1.0)
    af = build_ansatz(G, build_composite(G, solve_pattern(G, EndStates(s, s))), PeriodicPerturbation(), T=1.0)
    st = init_cauchy(G, af.composite, af.pert, GRID)
    out = advance_to(G, st, edge_data(af), 0.5)
    assert np.max(np.abs(out.dv)) == 0 and np.max(np.abs(out.du)) == 0 and np.max(np.abs(out.dE)) == 0


def test_step_does_not_mutate(short_ansatz):
    st = init_cauchy(G, short_ansatz.composite, short_ansatz.pert, GRID)
    before = st.du.copy()
    new = step_cauchy(G, st, edge_data(short_ansatz), stable_dt(G, st))
    assert np.array_equal(st.du, before) and new.t > st.t
    with pytest.raises(UsageError):
        step_cauchy(G, st, edge_data(short_ansatz), 0.0)


def test_ghosts_are_perturbed_end_states(short_ansatz):
    gh = edge_data(short_ansatz).ghosts(G, GRID, short_ansatz.composite.pattern.ends.left, [0.0])[0]
    pat = short_ansatz.composite.pattern
    p1, p2, p3 = short_ansatz.pert.evaluate(np.array([GRID.x_min - GRID.dx / 2, GRID.x_max + GRID.dx / 2]))
    E0 = gas.total_energy(G, pat.ends.left)
    R = pat.ends.right
    assert gh[0] == pytest.approx(p1[0], abs=1e-14)
    assert gh[3] == pytest.approx(R.v - pat.ends.left.v + p1[1], abs=1e-14)
    assert gh[5] == pytest.approx(gas.total_energy(G, R) - E0 + p3[1], abs=1e-14)


def test_domain_guard(short_ansatz):
    with pytest.raises(DomainTooSmallError):
        check_domain(G, short_ansatz.composite.pattern, Grid1D(-20.0, 20.0, 512), 2.0)
    with pytest.raises(DomainTooSmallError):
        run_cauchy(G, short_ansatz, Grid1D(-20.0, 20.0, 512), T=2.0)


def test_positivity_guard(composite):
    big = PeriodicPerturbation(((1, 5.0, 0.0),))
    with pytest.raises(AmplitudeError):
        init_cauchy(G, composite, big, GRID)


def test_conservation_and_positivity(short_run):
    assert short_run.conservation["relative"] < 1e-12
    for st in short_run.checkpoints.values():
        v, _, th = st.primitive(G)
        assert np.all(v > 0) and np.all(th > 0)


def test_initial_identity(short_run):
    exact, literal = short_run.initial_identity
    assert exact < 1e-10
    assert literal > 1e-10


def test_bit_identical_rerun(short_ansatz, short_run):
    again = run_cauchy(G, short_ansatz, GRID, T=2.0, checkpoints=(1.0, 2.0))
    for t, st in short_run.checkpoints.items():
        other = again.checkpoints[t]
        assert np.array_equal(st.dv, other.dv) and np.array_equal(st.du, other.du)
        assert np.array_equal(st.dE, other.dE)
    for k, v in short_run.series.items():
        assert np.array_equal(v, again.series[k], equal_nan=True)


def test_series_and_proxy(short_run):
    assert np.isnan(short_run.series["Linf_diff_riemann"][0])
    assert np.all(np.isfinite(short_run.series["Linf_diff_ansatz"]))
    p = theorem_proxy(short_run, checkpoints=(1.0, 2.0))
    assert set(p["ansatz_checkpoints"]) == {1.0, 2.0}
    assert p["ansatz_ratio"] == pytest.approx(p["ansatz_checkpoints"][1.0] / p["ansatz_checkpoints"][2.0])


def test_fan_mask_and_distance_errors(short_run, pattern):
    l1, l1m, l3m, l3 = pattern.fan_speeds(G)
    x = np.array([0.0, 0.5 * (l1 + l1m) * 10, 0.5 * (l3m + l3) * 10, 100.0])
    assert list(fan_interior_mask(G, pattern, x, 10.0)) == [False, True, True, False]
    st = short_run.checkpoints[2.0]
    with pytest.raises(UsageError):
        riemann_distance(G, st, pattern, "everywhere")


def test_self_convergence_second_order(short_ansatz):
    orders = self_convergence(G, short_ansatz, n=512, T=1.0)
    assert all(abs(o - 2.0) < 0.3 for o in orders.values())
