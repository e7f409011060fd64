from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from nsad import ProgramBuilder

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance criterion lines collected by tests/test_acceptance.py
CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: int(k)):
        terminalreporter.write_line(CRITERIA[key])


@pytest.fixture
def p1():
    """a * (b + c)"""
    b = ProgramBuilder(3)
    b.mul(1, b.add(2, 3))
    return b.build(name="P1")


@pytest.fixture
def q1():
    """a*b + a*c"""
    b = ProgramBuilder(3)
    b.add(b.mul(1, 2), b.mul(1, 3))
    return b.build(name="Q1")


@pytest.fixture
def p2(p1, q1):
    """(a + b)(c + d) = Q1(a, c, d) + P1(b, c, d)"""
    b = ProgramBuilder(4)
    b.add(b.call(q1, 1, 3, 4), b.call(p1, 2, 3, 4))
    return b.build(name="P2")


@pytest.fixture
def abs_program():
    """|t| = relu(t) + relu(-t)"""
    b = ProgramBuilder(1)
    b.add(b.relu(1), b.relu(b.neg(1)))
    return b.build(name="abs")


def frac_list(values):
    return [Fraction(v) for v in values]
