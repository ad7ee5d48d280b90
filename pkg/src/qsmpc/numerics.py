"""Dense linear algebra for small matrices: exponential, Cholesky, eigenvalues, solves."""

from __future__ import annotations

import numpy as np

SYMMETRY_TOL = 1e-9
PIVOT_TOL = 1e-12


class NotPositiveDefiniteError(ValueError):
    """A Cholesky pivot was zero or negative."""


class SingularMatrixError(ValueError):
    """LU elimination found no pivot above the threshold."""


def as_matrix(M, name="matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={M.ndim}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_square(M, name="matrix") -> np.ndarray:
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def as_vector(v, name="vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def check_symmetric(S, name="matrix", tol=SYMMETRY_TOL) -> np.ndarray:
    S = as_square(S, name)
    scale = max(1.0, float(np.abs(S).max(initial=0.0)))
    if np.abs(S - S.T).max(initial=0.0) > tol * scale:
        raise ValueError(f"{name} is not symmetric within {tol}")
    return S


def mat_exp(M, tol: float = 1e-12) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    The argument is halved until its infinity norm is at most 1/2, the series
    is summed until the term norm drops below the truncation threshold, and
    the result is squared back up.  Relative accuracy is min(tol, machine eps)
    for the small, well-scaled matrices this package works with.
    """
    M = as_square(M, "mat_exp argument")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = M.shape[0]
    norm = float(np.linalg.norm(M, np.inf))
    if norm == 0.0:
        return np.eye(n)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5))))
    A = M / (2.0 ** squarings)
    result = np.eye(n)
    term = np.eye(n)
    threshold = min(tol, float(np.finfo(float).eps)) / 4.0
    for k in range(1, 64):
        term = term @ A / k
        result = result + term
        if np.linalg.norm(term, np.inf) <= threshold * np.linalg.norm(result, np.inf):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def cholesky_upper(S) -> np.ndarray:
    """Upper-triangular W with W.T @ W = S for a symmetric positive definite S.

    Raises NotPositiveDefiniteError as soon as a pivot fails to stay positive.
    """
    S = check_symmetric(S, "cholesky argument")
    n = S.shape[0]
    W = np.zeros_like(S)
    for i in range(n):
        pivot = S[i, i] - W[:i, i] @ W[:i, i]
        if pivot <= 0.0 or not np.isfinite(pivot):
            raise NotPositiveDefiniteError(f"pivot {i} is {pivot:.3e}")
        W[i, i] = np.sqrt(pivot)
        if i + 1 < n:
            W[i, i + 1:] = (S[i, i + 1:] - W[:i, i] @ W[:i, i + 1:]) / W[i, i]
    return W


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues of a small square matrix, as a complex array.

    Symmetric inputs take the specialized Hermitian path; the general path is
    the standard Hessenberg-plus-shifted-QR routine under numpy, which raises
    LinAlgError if the iteration fails to converge.
    """
    M = as_square(M, "eigenvalues argument")
    if M.shape[0] > 64:
        raise ValueError("eigenvalues supports dimensions up to 64")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M - M.T).max(initial=0.0) <= SYMMETRY_TOL * scale:
        return np.linalg.eigvalsh(M).astype(complex)
    return np.linalg.eigvals(M)


def is_negative_definite(S) -> bool:
    """True iff -S admits a Cholesky factorization (all pivots positive)."""
    S = check_symmetric(S, "definiteness argument")
    try:
        cholesky_upper(-S)
    except NotPositiveDefiniteError:
        return False
    return True


def solve_linear(A, b) -> np.ndarray:
    """Solve A x = b by LU with partial pivoting; b may be a vector or matrix."""
    A = as_square(A, "solve_linear matrix")
    rhs = np.asarray(b, dtype=float)
    if rhs.ndim not in (1, 2):
        raise ValueError("right-hand side must be a vector or matrix")
    if not np.all(np.isfinite(rhs)):
        raise ValueError("right-hand side has non-finite entries")
    if rhs.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} vs {rhs.shape}")
    n = A.shape[0]
    lu = A.copy()
    x = rhs.copy().reshape(n, -1)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) < PIVOT_TOL:
            raise SingularMatrixError(f"pivot below {PIVOT_TOL} at column {k}")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            x[[k, p]] = x[[p, k]]
        factors = lu[k + 1:, k] / lu[k, k]
        lu[k + 1:, k:] -= np.outer(factors, lu[k, k:])
        x[k + 1:] -= np.outer(factors, x[k])
    for k in range(n - 1, -1, -1):
        x[k] -= lu[k, k + 1:] @ x[k + 1:]
        x[k] /= lu[k, k]
    return x.reshape(rhs.shape)
