import numpy as np
import pytest

from hardcore_sbd.geometry import Window
from hardcore_sbd.params import SimParams

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def w2():
    return Window(2, 10.0)


@pytest.fixture
def small_params():
    return SimParams(d=2, L=8.0, rho=0.75, seed=11)


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""

    def rec(num, name, ok, detail=""):
        line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {name}"
        if detail:
            line += f"  [{detail}]"
        ACCEPTANCE_LINES.append((num, line))
        print(line)
        return ok

    return rec


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
