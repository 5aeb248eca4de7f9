import numpy as np
import pytest

from equicity.errors import NoConvergence, ShapeMismatch, ZeroRow
from equicity.pooling import (
    duality_residuals,
    interaction_matrices,
    pool_opinions,
    primal_distribution,
    steady_state,
)

from conftest import power_iteration, random_stochastic


def test_interaction_identity():
    p, q = interaction_matrices(np.eye(2), np.eye(2))
    assert np.array_equal(p, np.eye(2))
    assert np.array_equal(q, np.eye(2))


def test_interaction_single_actor():
    # One actor with full control everywhere: every Q row equals the interest row.
    xk = np.array([[0.2, 0.3, 0.5]])
    ck = np.ones((3, 1))
    _, q = interaction_matrices(xk, ck)
    assert np.allclose(q, np.tile(xk, (3, 1)))


def test_interaction_products_stay_stochastic(rng):
    xk = random_stochastic(rng, 3, 4)
    ck = random_stochastic(rng, 4, 3)
    p, q = interaction_matrices(xk, ck)
    assert np.all(np.abs(p.sum(axis=1) - 1) <= 1e-12)
    assert np.all(np.abs(q.sum(axis=1) - 1) <= 1e-12)


def test_interaction_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        interaction_matrices(np.eye(2), np.eye(3))


def test_steady_state_identity_is_degenerate():
    with pytest.raises(NoConvergence):
        steady_state(np.eye(2))


def test_steady_state_periodic_chain():
    beta = steady_state(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(beta, [0.5, 0.5])


def test_steady_state_matches_power_iteration(rng):
    q = random_stochastic(rng, 5, 5)
    beta = steady_state(q)
    oracle = power_iteration(q)
    assert np.max(np.abs(beta - oracle)) <= 1e-8


def test_steady_state_oracle_on_100_chains_up_to_n50(rng):
    for _ in range(100):
        n = int(rng.integers(2, 51))
        q = random_stochastic(rng, n, n)
        beta = steady_state(q)
        assert np.max(np.abs(beta - power_iteration(q))) <= 1e-8


def test_steady_state_two_closed_classes_rejected():
    # Block-diagonal chain: two communicating classes, no unique stationary vector.
    q = np.array(
        [
            [0.5, 0.5, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.0],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.5, 0.5],
        ]
    )
    with pytest.raises(NoConvergence):
        steady_state(q)


def test_pool_unanimity(rng):
    # Identical interest rows across actors reproduce that row as consensus.
    m, n, o = 4, 5, 3
    shared = random_stochastic(rng, o, n)  # one row per colour
    x = np.empty((m, n, o))
    for k in range(o):
        x[:, :, k] = shared[k]
    c = rng.random((n, m, o)) + 0.1
    a = pool_opinions(x, c)
    for k in range(o):
        assert np.max(np.abs(a[:, k] - shared[k])) <= 1e-12


def test_pool_single_actor(rng):
    m, n, o = 1, 4, 2
    x = rng.random((m, n, o)) + 0.2
    c = np.ones((n, m, o))
    a = pool_opinions(x, c)
    for k in range(o):
        expected = x[0, :, k] / x[0, :, k].sum()
        assert np.max(np.abs(a[:, k] - expected)) <= 1e-12


def test_pool_matches_power_iteration(rng):
    m, n, o = 5, 7, 5
    x = rng.random((m, n, o)) + 0.05
    c = rng.random((n, m, o)) + 0.05
    a = pool_opinions(x, c)
    for k in range(o):
        xk = x[:, :, k] / x[:, :, k].sum(axis=1, keepdims=True)
        ck = c[:, :, k] / c[:, :, k].sum(axis=1, keepdims=True)
        oracle = power_iteration(ck @ xk)
        assert np.max(np.abs(a[:, k] - oracle)) <= 1e-8


def test_pool_columns_stochastic(rng):
    x = rng.random((6, 9, 4)) + 0.01
    c = rng.random((9, 6, 4)) + 0.01
    a = pool_opinions(x, c)
    assert np.all(np.abs(a.sum(axis=0) - 1.0) <= 1e-9)
    assert np.all(a >= 0)


def test_pool_permutation_equivariance(rng):
    m, n, o = 4, 6, 3
    x = rng.random((m, n, o)) + 0.05
    c = rng.random((n, m, o)) + 0.05
    perm = rng.permutation(n)
    a = pool_opinions(x, c)
    a_perm = pool_opinions(x[:, perm, :], c[perm, :, :])
    assert np.max(np.abs(a_perm - a[perm, :])) <= 1e-10


def test_pool_zero_row_reports_colour(rng):
    x = rng.random((3, 4, 2)) + 0.1
    x[1, :, 1] = 0.0  # actor 1 abstains on colour 1
    c = rng.random((4, 3, 2)) + 0.1
    with pytest.raises(ZeroRow) as exc:
        pool_opinions(x, c)
    assert exc.value.colour == 1


def test_duality_identity_pair():
    r1, r2 = duality_residuals(np.eye(3), np.eye(3), np.full(3, 1 / 3), np.full(3, 1 / 3))
    assert r1 == 0.0
    assert r2 == 0.0


def test_duality_between_stationary_vectors(rng):
    xk = random_stochastic(rng, 4, 6)
    ck = random_stochastic(rng, 6, 4)
    _, q = interaction_matrices(xk, ck)
    alpha = primal_distribution(xk, ck)
    beta = steady_state(q)
    r1, r2 = duality_residuals(xk, ck, alpha, beta)
    assert r1 <= 1e-8
    assert r2 <= 1e-8


def test_duality_chain_alpha_x_is_stationary(rng):
    # beta := alpha X directly satisfies beta Q = beta (algebraic chain).
    xk = random_stochastic(rng, 5, 5)
    ck = random_stochastic(rng, 5, 5)
    _, q = interaction_matrices(xk, ck)
    alpha = primal_distribution(xk, ck)
    beta = alpha @ xk
    assert np.max(np.abs(beta @ q - beta)) <= 1e-10
