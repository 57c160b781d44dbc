import numpy as np
import pytest

from layerflow.exchange import (build_matrix, exchange_rates, implicit_solve,
                                thomas_solve, tridiagonal_exchange)


def random_system(rng, N):
    G = np.zeros(N + 1)
    G[1:N] = rng.uniform(-2.0, 2.0, max(N - 1, 0))
    h = rng.uniform(0.05, 3.0, N)
    dt = rng.uniform(1e-4, 0.5)
    return G, h, dt


def test_rates_single_layer():
    G = exchange_rates(np.array([1.7]), np.array([1.0]))
    assert np.array_equal(G, [0.0, 0.0])


def test_rates_uniform_divergence_equal_fractions():
    N = 5
    D = np.full(N, 0.83)
    G = exchange_rates(D, np.full(N, 1.0 / N))
    assert np.allclose(G, 0.0, atol=1e-15)


def test_rates_two_layer_hand_value():
    d1, d2 = 0.4, -1.1
    G = exchange_rates(np.array([d1, d2]), np.array([0.5, 0.5]))
    assert G[0] == 0.0 and G[2] == 0.0
    assert G[1] == pytest.approx((d1 - d2) / 2.0, rel=1e-14)


def test_rates_telescoping_consistency():
    # G_{a+1/2} - G_{a-1/2} = D_a - l_a * sum(D): the layer-depth drift
    rng = np.random.default_rng(3)
    for _ in range(50):
        N = rng.integers(2, 9)
        l = rng.uniform(0.1, 1.0, N)
        l /= l.sum()
        D = rng.uniform(-2, 2, N)
        G = exchange_rates(D, l)
        assert np.allclose(np.diff(G), D - l * D.sum(), atol=1e-13)


def test_matrix_identity_when_no_exchange():
    A = build_matrix(np.zeros(4), np.full(3, 0.4), 0.1)
    assert np.array_equal(A, np.eye(3))


def test_matrix_two_layer_hand_value():
    # G_{3/2} = 0.1, h1 = h2 = 0.5, dt = 0.1
    A = build_matrix(np.array([0.0, 0.1, 0.0]), np.array([0.5, 0.5]), 0.1)
    assert np.allclose(A, [[1.0, -0.02], [0.0, 1.02]], rtol=0, atol=1e-15)


def test_matrix_column_sums_one():
    rng = np.random.default_rng(11)
    for _ in range(200):
        N = rng.integers(1, 9)
        G, h, dt = random_system(rng, N)
        A = build_matrix(G, h, dt)
        assert np.allclose(A.sum(axis=0), 1.0, rtol=0, atol=1e-13)


def test_inverse_nonnegative():
    rng = np.random.default_rng(13)
    for _ in range(200):
        N = rng.integers(1, 9)
        G, h, dt = random_system(rng, N)
        Ainv = np.linalg.inv(build_matrix(G, h, dt))
        assert Ainv.min() >= -1e-14


def test_transpose_solve_max_norm_bound():
    rng = np.random.default_rng(17)
    for _ in range(200):
        N = rng.integers(1, 9)
        G, h, dt = random_system(rng, N)
        A = build_matrix(G, h, dt)
        T = rng.uniform(0.0, 5.0, N)
        x = np.linalg.solve(A.T, T)
        assert np.max(np.abs(x)) <= np.max(np.abs(T)) * (1.0 + 1e-12) + 1e-300


def test_implicit_solve_identity():
    rhs = np.array([[1.0], [2.0], [-0.5]])
    bands = tridiagonal_exchange(np.zeros((4, 1)), np.full((3, 1), 0.7), 0.3)
    assert np.array_equal(implicit_solve(bands, rhs), rhs)


def test_implicit_solve_two_layer_hand_value():
    G = np.array([[0.0], [0.1], [0.0]])
    h = np.full((2, 1), 0.5)
    bands = tridiagonal_exchange(G, h, 0.1)
    q = np.array([[3.0], [-1.5]])
    out = implicit_solve(bands, q.copy())
    assert out[0, 0] == pytest.approx(3.0 + (0.02 / 1.02) * -1.5, rel=1e-14)
    assert out[1, 0] == pytest.approx(-1.5 / 1.02, rel=1e-14)
    # cross-check against the dense solve
    A = build_matrix(G[:, 0], h[:, 0], 0.1)
    assert np.allclose(out[:, 0], np.linalg.solve(A, q[:, 0]), rtol=1e-14)


def test_thomas_matches_dense_lu():
    rng = np.random.default_rng(23)
    for _ in range(100):
        N = int(rng.integers(1, 9))
        G, h, dt = random_system(rng, N)
        A = build_matrix(G, h, dt)
        bands = tridiagonal_exchange(G[:, None], h[:, None], dt)
        rhs = rng.uniform(-4, 4, N)
        x_tri = thomas_solve(*bands, rhs[:, None])[:, 0]
        x_dense = np.linalg.solve(A, rhs)
        assert np.allclose(x_tri, x_dense, rtol=0, atol=1e-12 * max(1.0, np.abs(x_dense).max()))


def test_momentum_sum_preserved():
    rng = np.random.default_rng(29)
    for _ in range(100):
        N = int(rng.integers(2, 9))
        G, h, dt = random_system(rng, N)
        bands = tridiagonal_exchange(G[:, None], h[:, None], dt)
        rhs = rng.uniform(-4, 4, (N, 1))
        out = implicit_solve(bands, rhs)
        assert out.sum() == pytest.approx(rhs.sum(), rel=1e-12, abs=1e-12)
