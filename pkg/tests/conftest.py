import pytest

from wfq.analytic import coherent_state
from wfq.grid import Harmonic, PhysicalParams, SpaceGrid, TimeGrid
from wfq.schrodinger import SliceState, evolve


@pytest.fixture
def harmonic_setup():
    space = SpaceGrid(-10.0, 10.0, 256)
    time = TimeGrid(1.0, 32)
    params = PhysicalParams(1.0, 1.0, time.eps)
    return space, time, params, Harmonic(1.0)


@pytest.fixture
def coherent_history(harmonic_setup):
    space, time, params, potential = harmonic_setup
    init = SliceState.from_function(space, lambda x: coherent_state(x, 0.0, 1.0, 0.0))
    return evolve(init, potential, params, time)


@pytest.fixture
def tiny_periodic():
    """Grid small enough for the dense oracle."""
    space = SpaceGrid(-4.0, 4.0, 6, "periodic")
    time = TimeGrid(1.0, 2)
    return space, time, PhysicalParams(1.0, 1.0, time.eps)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            lines.extend(v for k, v in getattr(rep, "user_properties", []) if k == "acceptance")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
