import numpy as np
import pytest

from securedfl.params import ParamVector
from securedfl.schedule import generate_schedule


def pv(values):
    return ParamVector.from_array(np.asarray(values, dtype=float))


@pytest.fixture(scope="session")
def gap4_schedule():
    sch = generate_schedule(9, 3, seed=0)
    assert sch.gap == 4
    return sch


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
