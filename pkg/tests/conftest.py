"""
Shared fixtures for the test suite.
"""

from dataclasses import dataclass

import numpy as np
import pytest
from scipy.stats import ortho_group

from src.harness import BenchmarkRunner
from src.metrics import MetricsCollector


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs over a full synthetic suite")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def random_pair(rng):
    """Two related 100 x 20 representations."""
    R = rng.standard_normal((100, 20))
    R_prime = R @ rng.standard_normal((20, 20)) + 0.5 * rng.standard_normal((100, 20))
    return R, R_prime


@pytest.fixture
def orthogonal(rng):
    return ortho_group.rvs(20, random_state=rng)


@pytest.fixture
def runner():
    """Serial runner without the shared cache."""
    return BenchmarkRunner(n_jobs=1, cache=None, collector=MetricsCollector(enabled=False))


@dataclass(frozen=True)
class InvarianceCase:
    R: np.ndarray
    Q: np.ndarray
    c: float
    shift: np.ndarray
    column_perm: np.ndarray


INVARIANCE_PARAMS = [(seed, c) for seed in range(20) for c in (0.5, 3.0)]


@pytest.fixture(params=INVARIANCE_PARAMS, ids=[f"seed{s}-c{c}" for s, c in INVARIANCE_PARAMS])
def invariance_case(request):
    """Seeded 100 x 20 matrix with an orthogonal map, scale, row shift and column permutation."""
    seed, c = request.param
    rng = np.random.default_rng(seed)
    return InvarianceCase(
        R=rng.standard_normal((100, 20)),
        Q=ortho_group.rvs(20, random_state=rng),
        c=c,
        shift=rng.standard_normal(20),
        column_perm=rng.permutation(20),
    )
