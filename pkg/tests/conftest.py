import numpy as np
import pytest

from dirank.preprocess import standardize


def ar1_pair(seed, n=2000, phi=0.8):
    """AR(1) target and an unrelated white-noise source, both standardized."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(n + 100)
    y = np.zeros(n + 100)
    for i in range(1, n + 100):
        y[i] = phi * y[i - 1] + w[i]
    return standardize(y[100:]), standardize(rng.standard_normal(n))


def same_day_pair(seed, n=2000, noise=1.0):
    """dst[n] = src[n] + noise: influence within the same sample index."""
    rng = np.random.default_rng(seed)
    s = rng.standard_normal(n)
    return s, s + noise * rng.standard_normal(n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    ACCEPTANCE_LINES.append(f"{criterion}: {status}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
