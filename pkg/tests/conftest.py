import numpy as np
import pytest

from qlh_approx.korovkin import OperatorFamily, uniform_grid


@pytest.fixture(scope="session")
def family():
    """Default-schedule R family; its grid cache is shared by every test."""
    return OperatorFamily()


@pytest.fixture(scope="session")
def grid():
    return uniform_grid()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
