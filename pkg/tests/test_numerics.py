import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairsc.errors import ContractError
from fairsc.numerics import (
    LbfgsConfig,
    gaussian_matrix,
    lbfgs_minimize,
    make_rng,
    spd_inv_sqrt,
    sym_eig,
    thin_svd,
)


def _sym(seed, n):
    A = np.random.default_rng(seed).standard_normal((n, n))
    return A + A.T


class TestSymEig:
    def test_identity(self):
        w, V = sym_eig(np.eye(3))
        assert np.allclose(w, [1, 1, 1])
        assert np.allclose(V.T @ V, np.eye(3))

    def test_diagonal_sorted_descending(self):
        w, V = sym_eig(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(w, [3, 2, 1])
        # eigenvectors are the permuted axes
        assert np.allclose(np.abs(V), np.eye(3)[:, [0, 2, 1]])

    def test_reconstruction_8x8(self):
        A = _sym(1, 8)
        w, V = sym_eig(A)
        assert np.linalg.norm(A - V @ np.diag(w) @ V.T) <= 1e-8

    def test_eigen_equation(self):
        A = _sym(2, 12)
        w, V = sym_eig(A)
        assert np.all(np.diff(w) <= 0)
        assert np.linalg.norm(A @ V - V * w) <= 1e-8 * np.linalg.norm(A)

    def test_top_subset_matches_full(self):
        A = _sym(3, 20)
        w_all, _ = sym_eig(A)
        w_top, V_top = sym_eig(A, top=4)
        assert np.allclose(w_top, w_all[:4])
        assert np.linalg.norm(A @ V_top - V_top * w_top) <= 1e-8 * np.linalg.norm(A)

    def test_rejects_non_square(self):
        with pytest.raises(ContractError):
            sym_eig(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ContractError):
            sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_tiny_asymmetry_tolerated(self):
        A = _sym(4, 5)
        A[0, 1] += 1e-12
        sym_eig(A)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 200), seed=st.integers(0, 2**31 - 1))
    def test_reconstruction_property(self, n, seed):
        A = _sym(seed, n)
        w, V = sym_eig(A)
        scale = np.linalg.norm(A)
        assert np.linalg.norm(A - (V * w) @ V.T) <= 1e-8 * scale
        assert np.linalg.norm(V.T @ V - np.eye(n)) <= 1e-10 * max(n, 1)


class TestThinSvd:
    def test_identity(self):
        L, S, R = thin_svd(np.eye(3))
        assert np.allclose(S, [1, 1, 1])

    def test_rank_one(self):
        A = np.zeros((4, 2))
        A[0, 0] = 2.0
        _, S, _ = thin_svd(A)
        assert np.allclose(S, [2.0, 0.0])

    def test_singular_values_from_gram_eigenvalues(self):
        A = np.random.default_rng(5).standard_normal((6, 3))
        _, S, _ = thin_svd(A)
        gram = np.sort(np.linalg.eigvalsh(A.T @ A))[::-1]
        assert np.allclose(S, np.sqrt(gram), atol=1e-12)

    def test_rejects_nan(self):
        with pytest.raises(ContractError):
            thin_svd(np.array([[np.nan], [1.0]]))

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 200), k=st.integers(1, 12), seed=st.integers(0, 2**31 - 1))
    def test_factorization_property(self, n, k, seed):
        k = min(k, n)
        A = np.random.default_rng(seed).standard_normal((n, k))
        L, S, R = thin_svd(A)
        assert L.shape == (n, k) and R.shape == (k, k)
        assert np.linalg.norm(A - (L * S) @ R.T) <= 1e-8 * np.linalg.norm(A)
        assert np.linalg.norm(L.T @ L - np.eye(k)) <= 1e-10
        assert np.linalg.norm(R.T @ R - np.eye(k)) <= 1e-10
        assert np.all(np.diff(S) <= 0) and np.all(S >= 0)


class TestSpdInvSqrt:
    def test_identity(self):
        assert np.allclose(spd_inv_sqrt(np.eye(2), 1e-12), np.eye(2))

    def test_diagonal(self):
        assert np.allclose(spd_inv_sqrt(np.diag([4.0, 9.0]), 1e-12), np.diag([0.5, 1 / 3]))

    def test_floor_applied(self):
        out = spd_inv_sqrt(np.diag([1.0, 0.0]), 1e-10)
        assert np.allclose(out, np.diag([1.0, 1e5]))

    def test_default_floor_handles_singular(self):
        out = spd_inv_sqrt(np.zeros((2, 2)))
        assert np.all(np.isfinite(out))

    @settings(max_examples=30, deadline=None)
    @given(k=st.integers(1, 10), seed=st.integers(0, 2**31 - 1))
    def test_whitening_property(self, k, seed):
        B = np.random.default_rng(seed).standard_normal((k, k))
        S = B @ B.T + 0.1 * np.eye(k)
        R = spd_inv_sqrt(S, 1e-12)
        assert np.allclose(R, R.T)
        assert np.linalg.norm(R @ S @ R - np.eye(k)) <= 1e-8 * k


def _quadratic(A, c):
    def fun(x):
        r = x - c
        return 0.5 * r @ A @ r, A @ r
    return fun


def _rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return f, g


class TestLbfgs:
    def test_half_norm_squared(self):
        x0 = np.random.default_rng(0).standard_normal((5, 3)) * 10
        res = lbfgs_minimize(lambda x: (0.5 * np.sum(x * x), x), x0, LbfgsConfig(ftol=1e-15))
        assert res.status == "gtol"
        assert np.max(np.abs(res.x)) <= 1e-3

    def test_spd_quadratic_minimizer(self):
        rng = np.random.default_rng(1)
        B = rng.standard_normal((6, 6))
        A = B @ B.T + np.eye(6)
        c = rng.standard_normal(6)
        res = lbfgs_minimize(_quadratic(A, c), np.zeros(6), LbfgsConfig(gtol=1e-10, ftol=1e-16))
        assert np.allclose(res.x, c, atol=1e-8)

    def test_rosenbrock(self):
        cfg = LbfgsConfig(gtol=1e-8, ftol=1e-16, max_iters=1000)
        res = lbfgs_minimize(_rosenbrock, np.array([-1.2, 1.0]), cfg)
        assert res.f <= 1e-6
        assert np.allclose(res.x, [1.0, 1.0], atol=1e-3)

    def test_history_monotone_and_final_not_worse(self):
        res = lbfgs_minimize(_rosenbrock, np.array([-1.2, 1.0]), LbfgsConfig(ftol=1e-16, gtol=1e-8))
        h = np.array(res.history)
        assert np.all(np.diff(h) <= 0)
        assert res.f <= h[0]

    def test_ftol_stops_early(self):
        res = lbfgs_minimize(_rosenbrock, np.array([-1.2, 1.0]), LbfgsConfig(ftol=0.5, gtol=1e-12))
        assert res.status == "ftol"

    def test_max_iters(self):
        res = lbfgs_minimize(_rosenbrock, np.array([-1.2, 1.0]),
                             LbfgsConfig(max_iters=3, gtol=1e-12, ftol=1e-16))
        assert res.status == "max_iters" and res.iterations == 3

    def test_linesearch_failure_returns_best_point(self):
        # gradient points the wrong way, so no step satisfies the Wolfe conditions
        def bad(x):
            return float(np.sum(x * x)), -x

        x0 = np.ones(3)
        res = lbfgs_minimize(bad, x0, LbfgsConfig(gtol=1e-12))
        assert res.status == "linesearch_failed"
        assert res.f <= 3.0

    def test_already_optimal(self):
        res = lbfgs_minimize(lambda x: (0.5 * float(x @ x), x), np.zeros(4))
        assert res.iterations == 0 and res.status == "gtol"

    def test_unpacks_like_tuple(self):
        x, f, it = lbfgs_minimize(lambda x: (0.5 * float(x @ x), x), np.ones(2))
        assert f <= 0.5 and it >= 1

    @pytest.mark.parametrize("kwargs", [
        {"wolfe_c1": 0.9, "wolfe_c2": 0.1},
        {"gtol": 0.0},
        {"ftol": -1.0},
        {"memory": 0},
    ])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            LbfgsConfig(**kwargs)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 8))
    def test_monotone_property(self, seed, n):
        rng = np.random.default_rng(seed)
        B = rng.standard_normal((n, n))
        A = B @ B.T + 0.01 * np.eye(n)
        res = lbfgs_minimize(_quadratic(A, rng.standard_normal(n)), rng.standard_normal(n))
        assert np.all(np.diff(res.history) <= 1e-12)


class TestRandomness:
    def test_same_seed_same_matrix(self):
        assert np.array_equal(gaussian_matrix(make_rng(7), 4, 3), gaussian_matrix(make_rng(7), 4, 3))

    def test_shape(self):
        assert gaussian_matrix(make_rng(0), 2, 3).shape == (2, 3)

    def test_moments(self):
        x = gaussian_matrix(make_rng(11), 100, 100)
        assert abs(x.mean()) <= 0.05
        assert abs(x.var() - 1.0) <= 0.1

    def test_rejects_empty(self):
        with pytest.raises(ContractError):
            gaussian_matrix(make_rng(0), 0, 3)

    def test_generator_passthrough(self):
        g = np.random.default_rng(3)
        assert make_rng(g) is g
