"""What happens when the plant cannot coast: bounded drift, no convergence.

With the plant's state matrix forced to the identity, the quantized system
has no decay of its own; it can only hop on the 0.2-spaced input grid while
the reference spirals into the origin.  Trajectories stay bounded and end up
circling inside a small ball around the origin whose radius is set by the
grid mismatch of the starting point; starts aligned with the grid land on the
origin exactly, diagonal starts hover nearby forever.
"""

from pathlib import Path

import numpy as np

import qsmpc

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

H = np.array([[0.0, 1.0], [-1.0, -2.0]])
B_q = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
ref = qsmpc.LtiReference(H=H, h=0.2)
plant = qsmpc.QuantizedPlant(A_q=np.eye(2), B_q=B_q, h=0.2)
problem = qsmpc.MpcProblem(plant=plant, ref=ref, P=50 * np.eye(2),
                           Q=0.1 * np.eye(2), R=0.05 * np.eye(4), N=5)

# the sufficient conditions fail here by construction; the run is still safe
report = qsmpc.stability_conditions(problem)
print("discretization matched:", report.matched_discretization, "(expected False)")

# two representative starts: grid-aligned and diagonal
starts = [np.array([1.0, 0.0]), np.array([np.cos(np.pi / 4), np.sin(np.pi / 4)])]
logs = []
for p in starts:
    cfg = qsmpc.RunConfig(problem=problem, solver="sphere-exact",
                          x_q0=p, x_ref0=p, steps=40)
    log = qsmpc.run_emulation(cfg)
    logs.append(log)
    met = qsmpc.compute_metrics(log)
    print(f"start {np.round(p, 3)}: max |x| = "
          f"{np.linalg.norm(log.states_q, axis=1).max():.4f}, "
          f"terminal ball radius = {met.terminal_ball_radius:.4f}")

svg = qsmpc.phase_portrait_svg([(log.states_ref, log.states_q) for log in logs])
(OUT / "bounded_drift.svg").write_text(svg)
print(f"wrote {OUT / 'bounded_drift.svg'}")
