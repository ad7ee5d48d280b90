"""Train a dense classifier on the exact solver's choices, then let it drive.

Every closed-loop step pairs the tracking features (plant state, reference
state, their gap) with the aggregate input direction the solver picked, one
of 25 classes for this plant.  A four-layer softmax net learns that mapping
from one family of emulations, is tested on a rotated family it never saw,
and finally replaces the solver in the loop: inference instead of search.
"""

import time
from pathlib import Path

import numpy as np

import qsmpc

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

H = np.array([[0.0, 1.0], [-1.0, -2.0]])
B_q = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
ref = qsmpc.LtiReference(H=H, h=0.2)
plant = qsmpc.QuantizedPlant(A_q=ref.A_d, B_q=B_q, h=0.2)
problem = qsmpc.MpcProblem(plant=plant, ref=ref, P=50 * np.eye(2),
                           Q=0.1 * np.eye(2), R=0.05 * np.eye(4), N=5)


def family(count, steps, phase=0.0):
    cfgs = []
    for i in range(count):
        a = phase + 2 * np.pi * i / count
        p = np.array([np.cos(a), np.sin(a)])
        cfgs.append(qsmpc.RunConfig(problem=problem, solver="sphere-exact",
                                    x_q0=p, x_ref0=2 * p, steps=steps))
    return qsmpc.batch_run(cfgs)


codec = qsmpc.codec_build(plant)
print(f"direction classes: {codec.class_count}")

train_set = qsmpc.collect_dataset(family(8, 412), codec)
test_set = qsmpc.collect_dataset(family(8, 105, phase=np.pi / 8), codec)
print(f"training rows: {len(train_set)}, test rows: {len(test_set)}")

mlp = qsmpc.Mlp.for_features(train_set.features.shape[1], codec.class_count, seed=0)
t0 = time.perf_counter()
report = qsmpc.train(mlp, train_set, epochs=20, seed=0, test_dataset=test_set)
print(f"trained in {time.perf_counter() - t0:.0f}s, "
      f"train accuracy {report.train_accuracy:.3f}, "
      f"test accuracy {report.test_accuracy:.3f}")

qsmpc.save_model(mlp, codec, OUT / "controller.json")

# swap the net in for the solver on a start it never trained on
p = np.array([np.cos(0.3), np.sin(0.3)])
for solver, extra in (("sphere-exact", {}), ("classifier", {"mlp": mlp, "codec": codec})):
    cfg = qsmpc.RunConfig(problem=problem, solver=solver, x_q0=p, x_ref0=2 * p,
                          steps=60, **extra)
    log = qsmpc.run_emulation(cfg)
    met = qsmpc.compute_metrics(log)
    print(f"{solver:>13}: max error {met.max_error:.4f}, "
          f"final error {met.final_error:.2e}, "
          f"solve time {log.solve_times.sum() * 1e3:.1f} ms")
