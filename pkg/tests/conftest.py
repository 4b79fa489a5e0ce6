import os
from fractions import Fraction as F

import pytest
from hypothesis import HealthCheck, settings

from gurarii.kernel import VertexSystem
from gurarii.spaces import l1, linf, make_space

settings.register_profile(
    "default", deadline=None, max_examples=30, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", deadline=None, max_examples=100, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str = ""):
    ACCEPTANCE[number] = (title, passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {title} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())


@pytest.fixture
def line():
    return make_space(VertexSystem(1, ((F(1),), (F(-1),))), "line")


@pytest.fixture
def hexagon():
    # conv{+-(1,0), +-(1/2,1), +-(-1/2,1)}
    pts = [(F(1), F(0)), (F(1, 2), F(1)), (F(-1, 2), F(1))]
    pts += [tuple(-x for x in p) for p in pts]
    return make_space(VertexSystem(2, tuple(pts)), "hexagon")


@pytest.fixture
def square():
    return linf(2)


@pytest.fixture
def diamond():
    return l1(2)
