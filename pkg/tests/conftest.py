import pytest

from wavecomposite.ansatz import build_ansatz
from wavecomposite.gas import GasParams, ThermoState
from wavecomposite.periodic import PeriodicPerturbation
from wavecomposite.profiles import build_composite
from wavecomposite.riemann import composite_end_states, solve_pattern

LEFT = ThermoState(1.0, 0.0, 1.0)
SHAPE = PeriodicPerturbation(((1, 1.0, 0.0),), ((1, 0.0, 1.0),), ((1, 0.5, 0.5),))


@pytest.fixture(scope="session")
def gp():
    return GasParams()


@pytest.fixture(scope="session")
def pattern(gp):
    return solve_pattern(gp, composite_end_states(gp, LEFT, 0.1))


@pytest.fixture(scope="session")
def composite(gp, pattern):
    return build_composite(gp, pattern)


@pytest.fixture(scope="session")
def short_ansatz(gp, composite):
    """Default composite with an eps1 = 1e-2 perturbation, periodic history up to t = 2."""
    return build_ansatz(gp, composite, SHAPE.scaled_to(1e-2), T=2.0, middle=False)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
