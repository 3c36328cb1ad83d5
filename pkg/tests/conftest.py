import numpy as np
import pytest

from dlingam.dataset import Dataset
from dlingam.simulate import COEFF_HIGH, COEFF_LOW, instance_from_b

# x2 -> x1 -> x3 and x2 -> x3; index k holds x_{k+1}
CHAIN_B = np.array(
    [
        [0.0, 1.5, 0.0],
        [0.0, 0.0, 0.0],
        [0.8, -1.5, 0.0],
    ]
)
CHAIN_ORDER = (1, 0, 2)


def chain_data(n, seed, variances=None) -> Dataset:
    return instance_from_b(CHAIN_B, n, np.random.default_rng(seed), variances=variances)


def two_parent_b(rng, p=5) -> np.ndarray:
    """Strictly lower-triangular B where every variable after the second has two parents."""
    b = np.zeros((p, p))
    for i in range(1, p):
        par = rng.choice(i, size=min(2, i), replace=False)
        b[i, par] = rng.uniform(COEFF_LOW, COEFF_HIGH, len(par)) * rng.choice([-1.0, 1.0], len(par))
    return b


@pytest.fixture
def chain():
    return chain_data(2000, 0)


# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
