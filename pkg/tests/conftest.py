import numpy as np
import pytest

from equicity.demo import make_demo_config, rect

make_workshop_config = make_demo_config


@pytest.fixture(scope="session")
def workshop_game(tmp_path_factory):
    root = tmp_path_factory.mktemp("workshop")
    return make_workshop_config(root), root


def random_stochastic(rng, rows, cols):
    """Strictly positive row-stochastic matrix."""
    m = rng.random((rows, cols)) + 0.05
    return m / m.sum(axis=1, keepdims=True)


def power_iteration(q, tol=1e-12, max_iter=200_000):
    """Independent stationary-distribution oracle: iterate beta <- beta Q."""
    n = q.shape[0]
    beta = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = beta @ q
        if np.linalg.norm(nxt - beta) < tol:
            return nxt
        beta = nxt
    raise AssertionError("power iteration did not converge")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
