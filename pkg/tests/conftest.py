import math

import numpy as np
import pytest

from manifold_control.model import PulseSpec, SystemSpec, TimeGrid

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance-criterion verdict for the terminal summary."""

    def record(number, title, passed, detail=""):
        _CRITERIA.append((number, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {title}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20141014)


def setup(n_i, n_f, area, de=0.0, dt=None):
    system = SystemSpec(n_i, n_f, de)
    pulse = PulseSpec(area)
    return system, pulse, TimeGrid.for_pulse(pulse, dt, system)


PI = math.pi
