import numpy as np
import pytest

from mixglr import exponential_suite, gaussian_suite, renewal_constants


@pytest.fixture(scope="session")
def exp3():
    return exponential_suite([0.5, 1.0, 2.0])


@pytest.fixture(scope="session")
def exp3_constants(exp3):
    return renewal_constants(exp3)


@pytest.fixture(scope="session")
def gauss3():
    return gaussian_suite([0.5, 1.0, 2.0])


@pytest.fixture(scope="session")
def gauss3_constants(gauss3):
    return renewal_constants(gauss3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


@pytest.fixture
def record():
    """Store the one-line verdict of an acceptance criterion for the summary."""

    def _record(number, ok, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
