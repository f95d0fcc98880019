import math

import pytest

from cavitypress import FolnerSchedule, GroupDescriptor, golden_mean, hardcore

LOG_PHI = math.log((1 + math.sqrt(5)) / 2)


@pytest.fixture
def z1():
    return GroupDescriptor.lattice(1)


@pytest.fixture
def z2():
    return GroupDescriptor.lattice(2)


@pytest.fixture
def golden(z1):
    return golden_mean(z1)


@pytest.fixture
def hc1(z1):
    return hardcore(z1, 1.0)


@pytest.fixture
def box1(z1):
    return FolnerSchedule(z1)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
