import numpy as np
import pytest

from qsmpc.numerics import (NotPositiveDefiniteError, SingularMatrixError,
                            cholesky_upper, eigenvalues, is_negative_definite,
                            mat_exp, solve_linear)

from conftest import DEMO_H


class TestMatExp:
    def test_zero_matrix(self):
        assert np.allclose(mat_exp(np.zeros((2, 2))), np.eye(2), atol=1e-14)

    def test_diagonal(self):
        out = mat_exp(np.diag([-1.0, 2.0]))
        assert np.allclose(out, np.diag([np.exp(-1.0), np.exp(2.0)]), rtol=1e-13)

    def test_nilpotent_closed_form(self):
        # DEMO_H = -I + N with N^2 = 0, so exp(t H) = exp(-t) (I + t N)
        t = 0.2
        N = DEMO_H + np.eye(2)
        assert np.allclose(N @ N, 0.0, atol=1e-15)
        oracle = np.exp(-t) * (np.eye(2) + t * N)
        out = mat_exp(t * DEMO_H)
        assert np.abs(out - oracle).max() <= 1e-10 * np.abs(oracle).max()

    def test_semigroup_property(self, rng):
        for _ in range(20):
            M = rng.standard_normal((3, 3))
            M *= rng.uniform(0.1, 2.0) / np.linalg.norm(M)
            gap = np.linalg.norm(mat_exp(M) @ mat_exp(M) - mat_exp(2 * M))
            assert gap <= 1e-8

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            mat_exp(np.ones((2, 3)))
        with pytest.raises(ValueError):
            mat_exp(np.eye(2), tol=0.0)
        with pytest.raises(ValueError):
            mat_exp(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(cholesky_upper(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(cholesky_upper(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_reconstruction(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 8))
            G = rng.standard_normal((n, n)) + n * np.eye(n)
            S = G.T @ G
            W = cholesky_upper(S)
            assert np.all(np.tril(W, -1) == 0.0)
            assert np.abs(W.T @ W - S).max() <= 1e-10 * np.abs(S).max()

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky_upper(-np.eye(2))
        with pytest.raises(NotPositiveDefiniteError):
            cholesky_upper(np.diag([1.0, 0.0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            cholesky_upper(np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestEigenvalues:
    def test_identity(self):
        vals = eigenvalues(np.eye(2))
        assert np.allclose(sorted(vals.real), [1.0, 1.0])
        assert np.allclose(vals.imag, 0.0)

    def test_double_root(self):
        # characteristic polynomial of DEMO_H is (s + 1)^2
        vals = np.sort_complex(eigenvalues(DEMO_H))
        assert np.allclose(vals, [-1.0, -1.0], atol=1e-7)

    def test_diagonal(self):
        vals = sorted(eigenvalues(np.diag([2.0, -3.0])).real)
        assert np.allclose(vals, [-3.0, 2.0])

    def test_residual_property(self, rng):
        for _ in range(15):
            n = int(rng.integers(2, 9))
            M = rng.standard_normal((n, n))
            scale = np.linalg.norm(M)
            for lam in eigenvalues(M):
                sigma_min = np.linalg.svd(M - lam * np.eye(n), compute_uv=False)[-1]
                assert sigma_min <= 1e-7 * scale

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            eigenvalues(np.eye(65))


class TestNegativeDefinite:
    def test_trivial_cases(self):
        assert is_negative_definite(-np.eye(3))
        assert not is_negative_definite(np.eye(3))
        assert not is_negative_definite(np.zeros((2, 2)))

    def test_demo_contraction_matrix(self):
        # eigenvalue oracle on Q - P + A' P A for the demo weights
        A = mat_exp(0.2 * DEMO_H)
        M = 0.1 * np.eye(2) - 50 * np.eye(2) + 50 * (A.T @ A)
        M = 0.5 * (M + M.T)
        assert np.all(np.linalg.eigvalsh(M) < 0)
        assert is_negative_definite(M)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            is_negative_definite(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestSolveLinear:
    def test_identity(self):
        b = np.array([3.0, -1.0])
        assert np.array_equal(solve_linear(np.eye(2), b), b)

    def test_diagonal(self):
        x = solve_linear(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0])

    def test_residual(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 10))
            A = rng.standard_normal((n, n)) + n * np.eye(n)
            b = rng.standard_normal(n)
            x = solve_linear(A, b)
            assert np.linalg.norm(A @ x - b) <= 1e-9 * np.linalg.norm(b)

    def test_matrix_rhs(self, rng):
        A = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        B = rng.standard_normal((4, 3))
        X = solve_linear(A, B)
        assert np.abs(A @ X - B).max() <= 1e-9

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            solve_linear(np.zeros((2, 2)), np.ones(2))
