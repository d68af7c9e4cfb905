import numpy as np
import pytest

from mcdiff.mixture import make_state


def random_state(rng, n, T=300.0, rho=None, concentration=1.0):
    """Strict state with Dirichlet fractions and molar masses spread over two decades."""
    y = rng.dirichlet(np.full(n, concentration))
    y = np.maximum(y, 1e-3)
    y /= y.sum()
    M = rng.uniform(0.002, 0.2, n)
    rho = rng.uniform(0.5, 2.0) if rho is None else rho
    return make_state(T, rho, M, y)


def random_friction(rng, n, low=0.1, high=10.0):
    f = np.triu(rng.uniform(low, high, (n, n)), 1)
    return f + f.T


def random_rank_deficient(rng, n):
    """(A, b, c) with A b = 0, A^T c = 0, <b, c> = 1 and rank N-1 almost surely."""
    b = rng.uniform(0.2, 2.0, n)
    c = rng.uniform(0.2, 2.0, n)
    c /= b @ c
    proj = np.eye(n) - np.outer(b, c)
    G = rng.standard_normal((n, n)) + n * np.eye(n)
    return proj @ G @ proj, b, c


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    X = rng.standard_normal((n, rank))
    return X @ X.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
