import pytest

from sramflip import CellParams
from sramflip.extraction import extract_cell

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def default_params():
    return CellParams()


@pytest.fixture(scope="session")
def desk_cell():
    """Default cell at dv1 = -dv2 = 42 mV, extracted with trajectory extension."""
    p = CellParams().with_offset(0.042)
    eq, axis, drift, pot = extract_cell(p)
    return p, eq, axis, drift, pot


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
