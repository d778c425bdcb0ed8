import itertools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_ds(rng, n, k=None):
    """Convex combination of k random permutation matrices."""
    k = k or int(rng.integers(1, n + 2))
    w = rng.dirichlet(np.ones(k))
    d = np.zeros((n, n))
    for wr in w:
        d[np.arange(n), rng.permutation(n)] += wr
    return d


def random_sym_ds(rng, n, k=None):
    d = random_ds(rng, n, k)
    return 0.5 * (d + d.T)


def random_psd(rng, n):
    a = rng.standard_normal((n, n))
    return a @ a.T / n


def brute_total_support(a):
    """Every positive entry lies on a permutation with all entries positive."""
    a = np.asarray(a)
    n = a.shape[0]
    covered = np.zeros_like(a, dtype=bool)
    for perm in itertools.permutations(range(n)):
        if all(a[i, perm[i]] > 0 for i in range(n)):
            covered[np.arange(n), list(perm)] = True
    return bool(np.all(covered[a > 0]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
