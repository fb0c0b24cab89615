import pytest
from hypothesis import HealthCheck, settings

from rangecap import make_group

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def lattice(d, generators=None):
    return make_group("lattice", {"dim": d}, generators)


@pytest.fixture
def z1():
    return lattice(1)


@pytest.fixture
def z2():
    return lattice(2)


@pytest.fixture
def z3():
    return lattice(3)


@pytest.fixture
def heis():
    return make_group("heisenberg")


@pytest.fixture
def free3():
    return make_group("free_product_z2", {"arity": 3})


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
