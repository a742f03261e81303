import itertools

import numpy as np
import pytest

from kernelprobe.sampler import brute_force_probe

# (measure, n) -> exact proportion at m = 4, three decimals
EXACT_P = {
    ("ins", 5): 0.047, ("ins", 6): 0.221, ("ins", 7): 0.530, ("ins", 8): 0.827,
    ("int", 5): 0.106, ("int", 6): 0.465, ("int", 7): 0.833, ("int", 8): 0.978,
    ("lev", 5): 0.087, ("lev", 6): 0.293, ("lev", 7): 0.591, ("lev", 8): 0.847,
    ("lcstr", 5): 0.002, ("lcstr", 6): 0.007, ("lcstr", 7): 0.026, ("lcstr", 8): 0.093,
}
EXACT_NSETS = {5: 42504, 6: 134596, 7: 346104, 8: 735471}


class _BruteCache:
    def __init__(self):
        self._store = {}

    def __call__(self, measure, n, m=4):
        key = (measure, n, m)
        if key not in self._store:
            self._store[key] = brute_force_probe(measure, n, m)
        return self._store[key]


@pytest.fixture(scope="session")
def brute():
    """Memoized exhaustive probes shared by the sampler and acceptance tests."""
    return _BruteCache()


@pytest.fixture(scope="session")
def perms4():
    return np.array(list(itertools.permutations(range(1, 5))), dtype=np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
