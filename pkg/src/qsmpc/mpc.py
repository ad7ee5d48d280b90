"""Horizon assembly: stacked matrices, cost evaluation, and the integer
least-squares reduction used by every solver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .system import LtiReference, QuantizedPlant, _frozen


@dataclass(frozen=True, eq=False)
class MpcProblem:
    """Receding-horizon tracking problem.

    P weighs the terminal tracking error, Q the stage tracking error, R the
    input effort; all three must be symmetric positive definite.  N is the
    horizon length.
    """

    plant: QuantizedPlant
    ref: LtiReference
    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    N: int

    def __post_init__(self):
        if self.ref.n != self.plant.n:
            raise ValueError("reference and plant state dimensions differ")
        if self.ref.h != self.plant.h:
            raise ValueError("reference and plant use different time steps")
        if self.N < 1:
            raise ValueError("horizon length must be at least 1")
        for name, M, dim in (("P", self.P, self.plant.n),
                             ("Q", self.Q, self.plant.n),
                             ("R", self.R, self.plant.m)):
            M = numerics.check_symmetric(M, name)
            if M.shape[0] != dim:
                raise ValueError(f"{name} must be {dim}x{dim}, got {M.shape}")
            try:
                numerics.cholesky_upper(M)
            except numerics.NotPositiveDefiniteError as exc:
                raise ValueError(f"{name} is not positive definite") from exc
            object.__setattr__(self, name, _frozen(M))

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def m(self) -> int:
        return self.plant.m


@dataclass(frozen=True, eq=False)
class ExtensiveForm:
    """Stacked horizon matrices and the cached Cholesky factor of H_tilde.

    Layout, with n the state and m the input dimension:
      A_tilde  : (N+1)n x n   rows I, A_q, ..., A_q^N
      B_tilde  : (N+1)n x Nm  lower block Toeplitz of A_q^j (h B_q)
      Q_tilde  : block diagonal, N copies of Q then one P
      R_tilde  : block diagonal, N copies of R
      H_tilde  : B_tilde' Q_tilde B_tilde + R_tilde, symmetric positive definite
      W        : upper triangular with W' W = H_tilde
      uncon_gain : H_tilde^{-1} B_tilde' Q_tilde, precomputed once per problem
    """

    A_tilde: np.ndarray
    B_tilde: np.ndarray
    Q_tilde: np.ndarray
    R_tilde: np.ndarray
    H_tilde: np.ndarray
    W: np.ndarray
    uncon_gain: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True, eq=False)
class IlsInstance:
    """One step's integer least-squares data.

    For every stacked input U the horizon cost equals
    ||W U - u_bar||^2 + constant, with u_bar = W u_uncon and u_uncon the
    unconstrained minimizer.
    """

    W: np.ndarray
    u_bar: np.ndarray
    constant: float
    u_uncon: np.ndarray

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    def objective(self, U) -> float:
        """||W U - u_bar||^2 for a stacked (real or ternary) input."""
        U = np.asarray(U, dtype=float).ravel()
        r = self.W @ U - self.u_bar
        return float(r @ r)


def build_extensive(prob: MpcProblem) -> ExtensiveForm:
    """Assemble the stacked horizon matrices and factor H_tilde once."""
    n, m, N = prob.n, prob.m, prob.N
    A_q = prob.plant.A_q
    Bh = prob.plant.h * prob.plant.B_q

    powers = [np.eye(n)]
    for _ in range(N):
        powers.append(A_q @ powers[-1])
    A_tilde = np.vstack(powers)

    B_tilde = np.zeros(((N + 1) * n, N * m))
    for i in range(1, N + 1):
        for j in range(i):
            B_tilde[i * n:(i + 1) * n, j * m:(j + 1) * m] = powers[i - 1 - j] @ Bh

    Q_tilde = np.kron(np.eye(N + 1), prob.Q)
    Q_tilde[-n:, -n:] = prob.P
    R_tilde = np.kron(np.eye(N), prob.R)

    H_tilde = B_tilde.T @ Q_tilde @ B_tilde + R_tilde
    try:
        W = numerics.cholesky_upper(H_tilde)
    except numerics.NotPositiveDefiniteError as exc:
        raise ValueError("stacked Hessian lost positive definiteness") from exc
    uncon_gain = numerics.solve_linear(H_tilde, B_tilde.T @ Q_tilde)
    return ExtensiveForm(A_tilde=_frozen(A_tilde), B_tilde=_frozen(B_tilde),
                         Q_tilde=_frozen(Q_tilde), R_tilde=_frozen(R_tilde),
                         H_tilde=_frozen(H_tilde), W=_frozen(W),
                         uncon_gain=_frozen(uncon_gain))


def reference_horizon(ref: LtiReference, xref0, N: int) -> np.ndarray:
    """Stack [xref0; A_d xref0; ...; A_d^N xref0] into one vector."""
    x = numerics.as_vector(xref0, "reference state")
    if x.shape[0] != ref.n:
        raise ValueError(f"reference state dimension {x.shape[0]} does not match {ref.n}")
    if N < 0:
        raise ValueError("horizon length must be non-negative")
    out = np.empty((N + 1) * ref.n)
    for i in range(N + 1):
        out[i * ref.n:(i + 1) * ref.n] = x
        x = ref.A_d @ x
    return out


def stage_cost(prob: MpcProblem, x0, xref0, U) -> float:
    """Horizon cost of a stacked input sequence, by rolling both systems forward.

    Accepts real-valued U so the box-relaxed problem shares this evaluator.
    """
    x = numerics.as_vector(x0, "plant state")
    r = numerics.as_vector(xref0, "reference state")
    U = np.asarray(U, dtype=float).ravel()
    n, m, N = prob.n, prob.m, prob.N
    if x.shape[0] != n or r.shape[0] != n:
        raise ValueError("state dimension mismatch")
    if U.shape[0] != N * m:
        raise ValueError(f"expected stacked input of length {N * m}, got {U.shape[0]}")
    A_q, B_q, h = prob.plant.A_q, prob.plant.B_q, prob.plant.h
    A_d = prob.ref.A_d
    total = 0.0
    for i in range(N):
        ui = U[i * m:(i + 1) * m]
        e = x - r
        total += e @ prob.Q @ e + ui @ prob.R @ ui
        x = A_q @ x + h * (B_q @ ui)
        r = A_d @ r
    e = x - r
    total += e @ prob.P @ e
    return float(total)


def ils_transform(ext: ExtensiveForm, x_q, ref_stack) -> IlsInstance:
    """Complete the square: horizon cost as ||W U - u_bar||^2 + constant.

    The unconstrained minimizer is u_uncon = -H_tilde^{-1} B_tilde' Q_tilde
    (A_tilde x_q - ref_stack); the constant is the input-independent remainder,
    kept so the quadratic reproduces the full horizon cost exactly.
    """
    x_q = numerics.as_vector(x_q, "plant state")
    ref_stack = numerics.as_vector(ref_stack, "stacked reference")
    if ref_stack.shape[0] != ext.A_tilde.shape[0]:
        raise ValueError("stacked reference length does not match the horizon")
    e = ext.A_tilde @ x_q - ref_stack
    u_uncon = -(ext.uncon_gain @ e)
    u_bar = ext.W @ u_uncon
    constant = float(e @ ext.Q_tilde @ e - u_uncon @ ext.H_tilde @ u_uncon)
    return IlsInstance(W=ext.W, u_bar=u_bar, constant=constant, u_uncon=u_uncon)


@dataclass(frozen=True)
class StabilityReport:
    """Result of the sufficient-condition check for asymptotically stable tracking.

    matched_discretization: the plant matrix equals the reference's exact
        discretization.
    error_contraction: Q - P + A_q' P A_q is negative definite, so the optimal
        cost contracts along closed-loop steps.
    witness: eigenvalues of that test matrix, for diagnostics.
    """

    matched_discretization: bool
    error_contraction: bool
    witness: np.ndarray

    @property
    def satisfied(self) -> bool:
        return self.matched_discretization and self.error_contraction


def stability_conditions(prob: MpcProblem, tol: float = 1e-8) -> StabilityReport:
    A_q = prob.plant.A_q
    matched = bool(np.linalg.norm(A_q - prob.ref.A_d) <= tol)
    M = prob.Q - prob.P + A_q.T @ prob.P @ A_q
    M = 0.5 * (M + M.T)
    contraction = numerics.is_negative_definite(M)
    witness = numerics.eigenvalues(M)
    return StabilityReport(matched_discretization=matched,
                           error_contraction=contraction,
                           witness=witness)
