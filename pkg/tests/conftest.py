import numpy as np
import pytest

from etdclust.core import SparseSample


def random_sparse_dataset(rng, n, p, T):
    """``n`` curves with random subsets (>= 2 points) of a ``T``-point grid."""
    grid = np.arange(T) / (T - 1)
    samples = []
    for i in range(n):
        m = int(rng.integers(2, T + 1))
        idx = np.sort(rng.choice(T, size=m, replace=False))
        samples.append(SparseSample(f"s{i}", grid[idx], rng.normal(size=(m, p))))
    return samples


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
