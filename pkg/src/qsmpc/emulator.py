"""Closed-loop receding-horizon driver: steps the reference and the quantized
plant under a chosen solver, logs trajectories, computes metrics, and harvests
classifier datasets."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import solvers
from .classifier import Dataset, DirectionCodec, Mlp, predict_input
from .mpc import MpcProblem, build_extensive, ils_transform, reference_horizon, stage_cost
from .numerics import as_vector
from .system import lti_step, plant_step

SOLVER_NAMES = ("sphere-exact", "suboptimal", "exhaustive", "classifier")
COST_MONOTONE_TOL = 1e-9
THREADS_ENV = "QSMPC_THREADS"


@dataclass(eq=False)
class RunConfig:
    """One closed-loop run: problem, solver choice, initial pair, step count.

    Classifier runs additionally need a trained mlp and its codec.  The seed
    is recorded in the log; every solver here is deterministic, so it matters
    only for traceability of derived artifacts.
    """

    problem: MpcProblem
    solver: str
    x_q0: np.ndarray
    x_ref0: np.ndarray
    steps: int
    seed: int = 0
    mlp: Mlp | None = None
    codec: DirectionCodec | None = None
    qp_tol: float = 1e-8
    qp_max_iter: int = 5000

    def __post_init__(self):
        if self.solver not in SOLVER_NAMES:
            raise ValueError(f"unknown solver {self.solver!r}, expected one of {SOLVER_NAMES}")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        self.x_q0 = as_vector(self.x_q0, "x_q0")
        self.x_ref0 = as_vector(self.x_ref0, "x_ref0")
        n = self.problem.n
        if self.x_q0.shape[0] != n or self.x_ref0.shape[0] != n:
            raise ValueError(f"initial states must have dimension {n}")
        if self.solver == "exhaustive":
            dim = self.problem.N * self.problem.m
            if 3 ** dim > solvers.EXHAUSTIVE_GUARD:
                raise ValueError(f"exhaustive solver refused: 3**{dim} candidates "
                                 f"exceed the guard {solvers.EXHAUSTIVE_GUARD}")
        if self.solver == "classifier" and (self.mlp is None or self.codec is None):
            raise ValueError("classifier runs need both mlp and codec")


@dataclass(eq=False)
class TrajectoryLog:
    """Closed-loop record.  States have steps+1 rows (terminal state included);
    inputs, costs, solve times, flags and selected sequences have one row per
    step.  solver_flags is 0 for a clean step and 1 when the step's relaxed
    solve stopped at its iteration cap (the run continues on the best iterate).
    """

    states_q: np.ndarray
    states_ref: np.ndarray
    inputs: np.ndarray
    costs: np.ndarray
    solve_times: np.ndarray
    selected_sequences: np.ndarray
    solver: str
    seed: int
    solver_flags: np.ndarray | None = None

    @property
    def steps(self) -> int:
        return self.inputs.shape[0]


@dataclass
class Metrics:
    """Tracking-quality summary of one log.

    terminal_ball_radius is the radius of the smallest origin-centered ball
    containing the last 20% of plant states.
    """

    max_error: float
    final_error: float
    cost_monotone_violations: int
    terminal_ball_radius: float


def features_for(x_q: np.ndarray, x_ref: np.ndarray) -> np.ndarray:
    """Classifier features: plant state, reference state, and their gap."""
    return np.concatenate([x_q, x_ref, x_ref - x_q])


def run_emulation(cfg: RunConfig) -> TrajectoryLog:
    """Receding-horizon loop: solve, apply the first input block, step, log.

    The previous selected sequence is carried forward; its one-step shift with
    a zero tail seeds the sphere decoder's radius and is the standing
    candidate of the suboptimal rule.  Classifier runs log the horizon cost of
    the predicted input followed by zeros.
    """
    prob = cfg.problem
    n, m, N, K = prob.n, prob.m, prob.N, cfg.steps
    ext = build_extensive(prob)
    # dominance table collapses same-direction input blocks; exact only when
    # R is a positive multiple of the identity (None otherwise)
    patterns = None
    if cfg.solver == "sphere-exact":
        patterns = solvers.dominant_patterns(prob.plant.B_q, prob.R)

    states_q = np.zeros((K + 1, n))
    states_ref = np.zeros((K + 1, n))
    inputs = np.zeros((K, m), dtype=int)
    costs = np.zeros(K)
    solve_times = np.zeros(K)
    selected_seqs = np.zeros((K, N * m), dtype=int)
    flags = np.zeros(K, dtype=int)

    x = cfg.x_q0.copy()
    r = cfg.x_ref0.copy()
    prev = None
    for k in range(K):
        states_q[k] = x
        states_ref[k] = r
        ref_stack = reference_horizon(prob.ref, r, N)
        ils = ils_transform(ext, x, ref_stack)
        start = time.perf_counter()
        if cfg.solver == "sphere-exact":
            babai = solvers.babai_round(ils.u_uncon)
            shifted = solvers.shift_sequence(prev, m) if prev is not None else None
            radius = solvers.initial_radius(ils, babai, shifted)
            seed = babai
            if shifted is not None and ils.objective(shifted) < ils.objective(babai):
                seed = shifted
            selected = solvers.sphere_decode(ils, radius, N, m,
                                             block_patterns=patterns,
                                             incumbent=seed).best_U
        elif cfg.solver == "exhaustive":
            selected, _ = solvers.exhaustive_solve(ils, N, m)
        elif cfg.solver == "suboptimal":
            relaxed = solvers.relaxed_qp_solve(ils, tol=cfg.qp_tol,
                                               max_iter=cfg.qp_max_iter)
            flags[k] = 0 if relaxed.converged else 1
            selected, _ = solvers.round_or_shift(prob, ils, relaxed.U, prev)
        else:  # classifier
            u = predict_input(cfg.mlp, cfg.codec, features_for(x, r))
            selected = np.zeros(N * m, dtype=int)
            selected[:m] = u
        solve_times[k] = time.perf_counter() - start

        u = selected[:m]
        inputs[k] = u
        selected_seqs[k] = selected
        costs[k] = stage_cost(prob, x, r, selected)
        x = plant_step(prob.plant, x, u)
        r = lti_step(prob.ref, r)
        prev = selected
    states_q[K] = x
    states_ref[K] = r
    return TrajectoryLog(states_q=states_q, states_ref=states_ref, inputs=inputs,
                         costs=costs, solve_times=solve_times,
                         selected_sequences=selected_seqs,
                         solver=cfg.solver, seed=cfg.seed, solver_flags=flags)


def _run_indexed(pair):
    i, cfg = pair
    try:
        return run_emulation(cfg)
    except Exception as exc:
        raise RuntimeError(f"run {i} failed: {exc}") from exc


def batch_run(cfgs: list[RunConfig]) -> list[TrajectoryLog]:
    """Run independent configs, preserving input order.

    QSMPC_THREADS caps the worker count; unset or 1 means sequential.  Workers
    are separate processes (the solvers hold the interpreter lock), with a
    thread-pool fallback when process pools are unavailable.
    """
    workers = int(os.environ.get(THREADS_ENV, "1") or "1")
    if workers < 1:
        raise ValueError(f"{THREADS_ENV} must be at least 1")
    if not cfgs:
        return []
    if workers == 1 or len(cfgs) == 1:
        return [_run_indexed(pair) for pair in enumerate(cfgs)]
    workers = min(workers, len(cfgs))
    try:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_indexed, enumerate(cfgs)))
    except (OSError, PermissionError):
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_indexed, enumerate(cfgs)))


def compute_metrics(log: TrajectoryLog) -> Metrics:
    errors = np.linalg.norm(log.states_q - log.states_ref, axis=1)
    violations = int(np.sum(log.costs[1:] > log.costs[:-1] + COST_MONOTONE_TOL))
    tail = max(1, int(np.ceil(0.2 * log.states_q.shape[0])))
    ball = float(np.linalg.norm(log.states_q[-tail:], axis=1).max())
    return Metrics(max_error=float(errors.max()), final_error=float(errors[-1]),
                   cost_monotone_violations=violations, terminal_ball_radius=ball)


def collect_dataset(logs: list[TrajectoryLog], codec: DirectionCodec) -> Dataset:
    """One row per logged step: features plus the class of the applied input."""
    rows = []
    labels = []
    for log in logs:
        for k in range(log.steps):
            rows.append(features_for(log.states_q[k], log.states_ref[k]))
            labels.append(codec.class_of_input(log.inputs[k]))
    return Dataset(features=np.array(rows), labels=np.array(labels, dtype=int))


# CSV persistence ------------------------------------------------------------

def trajectory_header(n: int, m: int) -> str:
    cols = (["k"] + [f"xq_{i}" for i in range(n)] + [f"xref_{i}" for i in range(n)]
            + [f"u_{i}" for i in range(m)] + ["J", "solve_ms"])
    return ",".join(cols)


def write_trajectory_csv(log: TrajectoryLog, path) -> None:
    n = log.states_q.shape[1]
    m = log.inputs.shape[1]
    lines = [trajectory_header(n, m)]
    for k in range(log.steps):
        cells = ([str(k)] + [repr(float(v)) for v in log.states_q[k]]
                 + [repr(float(v)) for v in log.states_ref[k]]
                 + [str(int(v)) for v in log.inputs[k]]
                 + [repr(float(log.costs[k])), repr(float(log.solve_times[k] * 1e3))])
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(eq=False)
class TrajectoryTable:
    """Trajectory CSV contents; states here have one row per logged step."""

    k: np.ndarray
    states_q: np.ndarray
    states_ref: np.ndarray
    inputs: np.ndarray
    costs: np.ndarray
    solve_ms: np.ndarray


def read_trajectory_csv(path) -> TrajectoryTable:
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        raise ValueError(f"{path}: empty trajectory file")
    lines = text.splitlines()
    header = lines[0].split(",")
    try:
        n = sum(1 for c in header if c.startswith("xq_"))
        m = sum(1 for c in header if c.startswith("u_"))
        expected = trajectory_header(n, m)
    except Exception:
        raise ValueError(f"{path}: malformed header")
    if ",".join(header) != expected or n == 0:
        raise ValueError(f"{path}: unexpected trajectory header")
    data = np.array([[float(c) for c in line.split(",")] for line in lines[1:]])
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError(f"{path}: no data rows")
    return TrajectoryTable(k=data[:, 0].astype(int),
                           states_q=data[:, 1:1 + n],
                           states_ref=data[:, 1 + n:1 + 2 * n],
                           inputs=data[:, 1 + 2 * n:1 + 2 * n + m].astype(int),
                           costs=data[:, 1 + 2 * n + m],
                           solve_ms=data[:, 2 + 2 * n + m])


def write_dataset_csv(dataset: Dataset, path) -> None:
    width = dataset.features.shape[1]
    lines = [",".join([f"f_{i}" for i in range(width)] + ["label"])]
    for row, label in zip(dataset.features, dataset.labels):
        lines.append(",".join([repr(float(v)) for v in row] + [str(int(label))]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dataset_csv(path) -> Dataset:
    text = Path(path).read_text(encoding="utf-8").strip()
    lines = text.splitlines()
    if len(lines) < 2:
        raise ValueError(f"{path}: dataset file has no rows")
    header = lines[0].split(",")
    if header[-1] != "label" or not all(c.startswith("f_") for c in header[:-1]):
        raise ValueError(f"{path}: unexpected dataset header")
    data = np.array([[float(c) for c in line.split(",")] for line in lines[1:]])
    return Dataset(features=data[:, :-1], labels=data[:, -1].astype(int))
