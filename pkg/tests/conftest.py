import pytest

from qmetrics import Grid, load_preset_family
from qmetrics.experiments import run_dynamics_family, run_ground_state_family

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    def report(number, passed, detail):
        ACCEPTANCE_LINES.append((number, f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"))
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid1e():
    return Grid(15.0, 301)


@pytest.fixture(scope="session")
def grid2e():
    return Grid(15.0, 151)


@pytest.fixture(scope="session")
def fig3_run(grid2e):
    return run_ground_state_family(load_preset_family("2e"), grid2e, interacting=True)


@pytest.fixture(scope="session")
def fig4_run(grid2e):
    return run_ground_state_family(load_preset_family("2e"), grid2e, interacting=False)


@pytest.fixture(scope="session")
def fig2_run(grid1e):
    return run_dynamics_family(load_preset_family("1e"), grid1e)
