import pytest
from hypothesis import HealthCheck, settings

from kdiscrete.arith import make_config

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def cfg3():
    return make_config(3, 2)


@pytest.fixture(scope="session")
def cfg5():
    return make_config(5, 2)


@pytest.fixture(scope="session")
def split3():
    return make_config(3, 2, "split")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
