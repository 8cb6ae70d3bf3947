import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "lattice",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("lattice")


def brute_force_sum(fn, x, y, area, M):
    """Plain box sum of fn(|p|^2) over 0 < max(|m|, |n|) <= M, no certificate."""
    m, n = np.meshgrid(np.arange(-M, M + 1, dtype=float), np.arange(-M, M + 1, dtype=float))
    q = area * ((m + x * n) ** 2 / y + y * n * n)
    mask = (m != 0) | (n != 0)
    return float(np.sum(fn(q[mask])))


@pytest.fixture
def brute():
    return brute_force_sum


@pytest.fixture(scope="session")
def classical_thresholds():
    from lattice_lab.lj_thresholds import compute_thresholds

    return compute_thresholds()
