"""The cheap controller: relax the integer program to a box, round, compare.

Instead of searching the ternary lattice, each step solves the box-relaxed
quadratic program by accelerated projected gradient, rounds the result to the
nearest ternary sequence, and keeps either that rounded sequence or the
previous selection shifted one step with a zero tail, whichever costs less.
The emulation degrades gracefully and the per-step work becomes a fixed,
search-free amount, which is the whole point.
"""

from pathlib import Path

import numpy as np

import qsmpc

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

H = np.array([[0.0, 1.0], [-1.0, -2.0]])
B_q = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
ref = qsmpc.LtiReference(H=H, h=0.2)
plant = qsmpc.QuantizedPlant(A_q=ref.A_d, B_q=B_q, h=0.2)
# the full experiment horizon: long enough that exact search starts to cost
problem = qsmpc.MpcProblem(plant=plant, ref=ref, P=50 * np.eye(2),
                           Q=0.1 * np.eye(2), R=0.05 * np.eye(4), N=10)

angles = [2 * np.pi * i / 8 for i in range(8)]
points = [np.array([np.cos(a), np.sin(a)]) for a in angles]


def family(solver):
    cfgs = [qsmpc.RunConfig(problem=problem, solver=solver, x_q0=p, x_ref0=2 * p,
                            steps=60) for p in points]
    return qsmpc.batch_run(cfgs)


exact_logs = family("sphere-exact")
sub_logs = family("suboptimal")

exact_time = sum(log.solve_times.sum() for log in exact_logs)
sub_time = sum(log.solve_times.sum() for log in sub_logs)
exact_err = max(qsmpc.compute_metrics(log).max_error for log in exact_logs)
sub_err = max(qsmpc.compute_metrics(log).max_error for log in sub_logs)
exact_final = max(qsmpc.compute_metrics(log).final_error for log in exact_logs)
sub_final = max(qsmpc.compute_metrics(log).final_error for log in sub_logs)

print(f"exact     : {exact_time * 1e3:7.1f} ms solve time, "
      f"max error {exact_err:.4f}, final {exact_final:.2e}")
print(f"suboptimal: {sub_time * 1e3:7.1f} ms solve time, "
      f"max error {sub_err:.4f}, final {sub_final:.2e}")
print(f"speedup {exact_time / sub_time:.2f}x, "
      f"error ratio {sub_err / exact_err:.2f}x")

svg = qsmpc.phase_portrait_svg([(log.states_ref, log.states_q) for log in sub_logs])
(OUT / "relax_round_or_shift.svg").write_text(svg)
print(f"wrote {OUT / 'relax_round_or_shift.svg'}")
