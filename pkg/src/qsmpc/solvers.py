"""Input-sequence selection engines: exhaustive search, sphere decoding,
and the box-relaxed quadratic program with nearest-point rounding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mpc import IlsInstance, MpcProblem
from .system import enumerate_alphabet

EXHAUSTIVE_GUARD = 2 ** 20  # refuse enumerations beyond this many candidates


@dataclass
class SphereState:
    """Outcome of one sphere-decoder search.

    radius_sq shrinks to each new incumbent's cost and never increases;
    incumbent_costs records the (strictly decreasing) incumbent sequence.
    nodes_visited counts partial assignments that survived pruning.
    """

    radius_sq: float
    best_U: np.ndarray | None
    best_cost: float
    nodes_visited: int
    incumbent_costs: list = field(default_factory=list)


@dataclass
class RelaxedSolution:
    """Box-constrained minimizer estimate with its termination certificate."""

    U: np.ndarray
    iterations: int
    projected_gradient_norm: float
    converged: bool


def exhaustive_solve(ils: IlsInstance, N: int, m: int) -> tuple[np.ndarray, float]:
    """Globally minimize ||W U - u_bar||^2 over all ternary stacks by enumeration.

    Ties resolve to the lexicographically smallest stack (entries ordered
    -1 < 0 < 1).  Guarded against enumerations larger than 2**20.
    """
    dim = N * m
    if dim != ils.dim:
        raise ValueError(f"instance dimension {ils.dim} does not match N*m={dim}")
    if 3 ** dim > EXHAUSTIVE_GUARD:
        raise ValueError(f"3**{dim} candidates exceed the exhaustive guard {EXHAUSTIVE_GUARD}")
    candidates = enumerate_alphabet(dim)
    residuals = candidates @ ils.W.T - ils.u_bar
    costs = np.einsum("ij,ij->i", residuals, residuals)
    idx = int(np.argmin(costs))  # first minimum = lexicographically smallest
    return candidates[idx].copy(), float(costs[idx])


def babai_round(U_relaxed) -> np.ndarray:
    """Componentwise nearest ternary value; halves round away from zero."""
    U = np.asarray(U_relaxed, dtype=float).ravel()
    rounded = np.sign(U) * np.floor(np.abs(U) + 0.5)
    return np.clip(rounded, -1, 1).astype(int)


def shift_sequence(prev: np.ndarray, m: int) -> np.ndarray:
    """Advance a stacked sequence one step: drop the first block, append zeros."""
    prev = np.asarray(prev).ravel()
    out = np.zeros_like(prev)
    out[:-m] = prev[m:]
    return out


def initial_radius(ils: IlsInstance, babai_U, shifted_U=None) -> float:
    """Smallest squared radius among the provided candidate sequences."""
    radius = ils.objective(babai_U)
    if shifted_U is not None:
        radius = min(radius, ils.objective(shifted_U))
    return radius


def scalar_identity_weight(R) -> float | None:
    """The scalar r when R equals r times the identity exactly, else None."""
    R = np.asarray(R, dtype=float)
    r = float(R[0, 0])
    if r > 0 and np.array_equal(R, r * np.eye(R.shape[0])):
        return r
    return None


def dominant_patterns(B_q, R) -> np.ndarray | None:
    """Per-step input patterns that dominate the rest, or None.

    When R is a positive multiple of the identity, swapping any input block
    for a minimum-norm block with the same aggregate direction B_q u leaves
    every predicted state unchanged and can only lower the input cost, so the
    optimum over full sequences is attained on these representatives.  For any
    other R no such reduction is attempted.
    """
    if scalar_identity_weight(R) is None:
        return None
    B_q = np.asarray(B_q, dtype=float)
    alphabet = enumerate_alphabet(B_q.shape[1])
    raw = alphabet.astype(float) @ B_q.T
    best: dict[tuple, np.ndarray] = {}
    for u, d in zip(alphabet, raw):
        key = tuple(np.round(d, 12) + 0.0)
        cur = best.get(key)
        if cur is None or int(np.abs(u).sum()) < int(np.abs(cur).sum()):
            best[key] = u
    return np.array(sorted((tuple(u) for u in best.values())), dtype=int)


def sphere_decode(ils: IlsInstance, init_radius_sq: float, N: int, m: int,
                  block_patterns=None, incumbent=None) -> SphereState:
    """Depth-first branch-and-bound over the ternary lattice.

    Coordinates are fixed from the last stacked entry down to the first, the
    natural order for an upper-triangular W: assigning level i completes row i
    of the residual, so the accumulated partial cost is a valid lower bound.
    At each level candidates are tried nearest-first; any partial cost above
    the current radius prunes the branch, and each full candidate that
    improves on the incumbent tightens the radius.  Deterministic: ordering
    ties fall back to value order -1 < 0 < 1, and only strict improvements
    replace the incumbent.

    block_patterns, when given, restricts each m-sized input block to those
    rows (see dominant_patterns); one block is then assigned per tree level.
    The caller is responsible for the table preserving the optimal cost.

    incumbent seeds the search with a known feasible sequence, so only
    strictly better candidates are explored; the returned minimizer is the
    seed itself when nothing inside the radius beats it.
    """
    dim = N * m
    W, u_bar = ils.W, ils.u_bar
    if dim != ils.dim:
        raise ValueError(f"instance dimension {ils.dim} does not match N*m={dim}")
    if np.any(np.diag(W) <= 0):
        raise ValueError("W must be upper triangular with positive diagonal")

    # pad the opening radius so the candidate that produced it cannot fall a
    # few ulps outside under the tree's incremental cost accumulation
    padded = float(init_radius_sq) * (1.0 + 1e-12) + 1e-15
    state = SphereState(radius_sq=padded, best_U=None,
                        best_cost=math.inf, nodes_visited=0)
    if incumbent is not None:
        seed = np.asarray(incumbent, dtype=int).ravel()
        if seed.shape[0] != dim:
            raise ValueError("incumbent length does not match the instance")
        cost = ils.objective(seed)
        if cost > padded:
            raise ValueError("incumbent cost exceeds the initial radius; "
                             "seed with the minimum-cost candidate")
        state.best_U = seed.copy()
        state.best_cost = cost
        state.radius_sq = cost
        state.incumbent_costs.append(cost)
    if block_patterns is None:
        _descend_coordinates(state, W, u_bar, dim)
    else:
        _descend_blocks(state, W, u_bar, N, m, np.asarray(block_patterns, dtype=int))
    if state.best_U is None:
        raise RuntimeError("no lattice point inside the initial radius")
    return state


def _descend_coordinates(state: SphereState, W, u_bar, dim: int) -> None:
    # hot path runs on plain Python floats; numpy call overhead per node would
    # dominate at these dimensions
    diag = [float(W[i, i]) for i in range(dim)]
    cols = [[float(W[j, i]) for j in range(i)] for i in range(dim)]
    ub = [float(v) for v in u_bar]
    # tails[level][j] = contribution of coordinates above `level` to row j
    tails = [[0.0] * dim for _ in range(dim)]
    assigned = [0] * dim

    def descend(level: int, dist: float) -> None:
        tail = tails[level]
        offset = tail[level] - ub[level]
        d = diag[level]
        # ascending child order is what makes the break below sound
        children = sorted(((dist + (offset - d) ** 2, -1),
                           (dist + offset * offset, 0),
                           (dist + (offset + d) ** 2, 1)))
        for child_dist, v in children:
            # before any incumbent the padded radius is inclusive; afterwards
            # equal-cost candidates cannot improve the minimum
            if child_dist > state.radius_sq or (state.best_U is not None
                                                and child_dist >= state.radius_sq):
                break
            state.nodes_visited += 1
            assigned[level] = v
            if level == 0:
                if child_dist < state.best_cost:
                    state.best_U = np.array(assigned, dtype=int)
                    state.best_cost = child_dist
                    state.radius_sq = child_dist
                    state.incumbent_costs.append(child_dist)
            else:
                child_tail = tails[level - 1]
                col = cols[level]
                if v == 0:
                    child_tail[:level] = tail[:level]
                else:
                    for j in range(level):
                        child_tail[j] = tail[j] + col[j] * v
                descend(level - 1, child_dist)

    descend(dim - 1, 0.0)


def _descend_blocks(state: SphereState, W, u_bar, N: int, m: int,
                    patterns: np.ndarray) -> None:
    if patterns.ndim != 2 or patterns.shape[1] != m:
        raise ValueError(f"block patterns must be rows of length {m}")
    pat_f = patterns.astype(float)
    # per-block tables: pattern contributions to the block's own rows and to
    # every row above it
    own = [pat_f @ W[b * m:(b + 1) * m, b * m:(b + 1) * m].T for b in range(N)]
    cross = [W[:b * m, b * m:(b + 1) * m] @ pat_f.T for b in range(N)]
    ubb = [u_bar[b * m:(b + 1) * m] for b in range(N)]
    assigned = np.zeros((N, m), dtype=int)

    def descend(b: int, dist: float, contrib: np.ndarray) -> None:
        # contrib[j] = contribution of the assigned blocks to row j, j < (b+1)m
        adds = own[b] + (contrib[b * m:] - ubb[b])
        costs = np.einsum("ij,ij->i", adds, adds)
        costs += dist
        order = costs.argsort(kind="stable").tolist()
        cost_list = costs.tolist()
        for ci in order:
            child_dist = cost_list[ci]
            if child_dist > state.radius_sq or (state.best_U is not None
                                                and child_dist >= state.radius_sq):
                break
            state.nodes_visited += 1
            assigned[b] = patterns[ci]
            if b == 0:
                if child_dist < state.best_cost:
                    state.best_U = assigned.ravel().copy()
                    state.best_cost = child_dist
                    state.radius_sq = child_dist
                    state.incumbent_costs.append(child_dist)
            else:
                descend(b - 1, child_dist, contrib[:b * m] + cross[b][:, ci])

    descend(N - 1, 0.0, np.zeros(N * m))


def _largest_eigenvalue(S: np.ndarray) -> float:
    """Dominant eigenvalue of a symmetric PSD matrix by power iteration."""
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(S.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(500):
        w = S @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam_new = float(v @ S @ v)
        if abs(lam_new - lam) <= 1e-13 * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def relaxed_qp_solve(ils: IlsInstance, tol: float = 1e-8, max_iter: int = 5000) -> RelaxedSolution:
    """Minimize ||W U - u_bar||^2 over the box [-1, 1]^dim by accelerated
    projected gradient.

    The step is the reciprocal of the gradient's Lipschitz constant
    (twice the dominant eigenvalue of W'W, found by power iteration, padded
    2% against underestimation).  Termination certificate: the fixed-point
    residual ||U - proj(U - step * grad)|| drops below tol.  Hitting max_iter
    returns the best iterate seen, flagged unconverged.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    W, u_bar = ils.W, ils.u_bar
    WtW = W.T @ W
    Wt_ub = W.T @ u_bar
    step = 1.0 / (2.0 * _largest_eigenvalue(WtW) * 1.02)

    def grad(U):
        return 2.0 * (WtW @ U - Wt_ub)

    def objective(U):
        r = W @ U - u_bar
        return float(r @ r)

    def residual(U):
        return float(np.linalg.norm(U - np.clip(U - step * grad(U), -1.0, 1.0)))

    x = np.clip(ils.u_uncon, -1.0, 1.0)
    res = residual(x)
    if res <= tol:
        return RelaxedSolution(U=x, iterations=0, projected_gradient_norm=res, converged=True)

    y = x.copy()
    t = 1.0
    f_x = objective(x)
    best_x, best_f = x.copy(), f_x
    for it in range(1, max_iter + 1):
        x_new = np.clip(y - step * grad(y), -1.0, 1.0)
        f_new = objective(x_new)
        if f_new < best_f:
            best_x, best_f = x_new.copy(), f_new
        res = residual(x_new)
        if res <= tol:
            return RelaxedSolution(U=x_new, iterations=it,
                                   projected_gradient_norm=res, converged=True)
        if f_new > f_x:
            # adaptive restart: drop the momentum when the objective rises
            t = 1.0
            y = x_new.copy()
        else:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = x_new + ((t - 1.0) / t_next) * (x_new - x)
            t = t_next
        x, f_x = x_new, f_new
    return RelaxedSolution(U=best_x, iterations=max_iter,
                           projected_gradient_norm=residual(best_x), converged=False)


def round_or_shift(prob: MpcProblem, ils: IlsInstance, relaxed_U,
                   prev_selected=None) -> tuple[np.ndarray, np.ndarray]:
    """Select between the rounded relaxation and the shifted previous sequence.

    Keeps whichever has the lower horizon cost, ties to the shifted sequence;
    costs are compared through the instance quadratic, which reproduces the
    rolled-out horizon cost up to a shared constant.  The first step, with no
    previous selection, takes the rounded sequence.  Returns the selected
    stacked sequence and its first input block.
    """
    rounded = babai_round(relaxed_U)
    if prev_selected is None:
        selected = rounded
    else:
        shifted = shift_sequence(np.asarray(prev_selected, dtype=int), prob.m)
        selected = shifted if ils.objective(shifted) <= ils.objective(rounded) else rounded
    return selected, selected[:prob.m].copy()


def suboptimal_step(prob: MpcProblem, ils: IlsInstance, prev_selected=None,
                    tol: float = 1e-8, max_iter: int = 5000) -> tuple[np.ndarray, np.ndarray]:
    """One step of the relax-round-or-shift rule: solve the box relaxation,
    then apply round_or_shift."""
    relaxed = relaxed_qp_solve(ils, tol=tol, max_iter=max_iter)
    return round_or_shift(prob, ils, relaxed.U, prev_selected)
