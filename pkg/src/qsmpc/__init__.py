"""qsmpc: emulate stable continuous LTI systems with a discrete plant driven
by ternary quantized inputs.

The receding-horizon tracking problem is reduced to an integer least-squares
instance and solved exactly (sphere decoding, with an exhaustive oracle) or
approximately (box-relaxed QP plus nearest-point rounding), and a small dense
classifier can be trained on the solver's choices to act as a fast controller.
"""

from .classifier import (Dataset, DirectionCodec, Mlp, TrainReport, codec_build,
                         forward, gradient_check, load_model, predict_input,
                         save_model, train)
from .emulator import (Metrics, RunConfig, TrajectoryLog, batch_run,
                       collect_dataset, compute_metrics, features_for,
                       read_dataset_csv, read_trajectory_csv, run_emulation,
                       write_dataset_csv, write_trajectory_csv)
from .mpc import (ExtensiveForm, IlsInstance, MpcProblem, StabilityReport,
                  build_extensive, ils_transform, reference_horizon, stage_cost,
                  stability_conditions)
from .numerics import (cholesky_upper, eigenvalues, is_negative_definite,
                       mat_exp, solve_linear)
from .plotting import phase_portrait_svg
from .solvers import (RelaxedSolution, SphereState, babai_round, dominant_patterns,
                      exhaustive_solve, initial_radius, relaxed_qp_solve,
                      round_or_shift, shift_sequence, sphere_decode,
                      suboptimal_step)
from .system import (LtiReference, QuantizedPlant, discretize, enumerate_alphabet,
                     lti_step, plant_step, validate_ternary)

__version__ = "0.1.0"
