import numpy as np
import pytest

from okreg.kernels import Kernel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gauss():
    return Kernel.gaussian(0.7)


def random_spd(rng, n, floor=0.1):
    B = rng.standard_normal((n, n))
    return B @ B.T + floor * np.eye(n)


def uniform_stream(T, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (T, d))
    y = 0.5 + 0.4 * np.sin(2.0 * X[:, 0]) * np.cos(X[:, -1])
    return X, y


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("abc")), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
