import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0 + 0j, -1.0])
PLUS_X = np.array([1, 1], dtype=complex) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def haar(n, rng):
    """Haar unitary from scipy, independent of the package's sampler."""
    from scipy.stats import unitary_group
    return unitary_group.rvs(n, random_state=rng)


def phases_close(a, b, tol):
    """Multiset equality of angles modulo 2 pi."""
    a = np.exp(1j * np.asarray(a))
    b = list(np.exp(1j * np.asarray(b)))
    for z in a:
        j = int(np.argmin([abs(z - w) for w in b]))
        if abs(z - b[j]) > tol:
            return False
        b.pop(j)
    return not b


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
