import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def gaussian_dictionary(rng, m, n):
    M = rng.standard_normal((m, n))
    return M / np.linalg.norm(M, axis=0)


def sparse_vector(rng, n, k):
    x = np.zeros(n)
    x[rng.choice(n, size=k, replace=False)] = rng.standard_normal(k)
    return x


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
