"""Command-line entry point: config ingestion and the check / emulate /
collect / train / plot workflows."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classifier, emulator, plotting
from .mpc import MpcProblem, stability_conditions
from .system import LtiReference, QuantizedPlant, discretize

SOLVER_FLAGS = {"sphere": "sphere-exact", "suboptimal": "suboptimal",
                "exhaustive": "exhaustive", "classifier": "classifier"}


class ConfigError(ValueError):
    """Config file rejected; the message names the offending field."""


@dataclass(eq=False)
class ParsedConfig:
    problem: MpcProblem
    solver: str
    seed: int
    steps: int
    pairs: list  # (x_q0, x_ref0) per run


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"missing field {where}.{key}")
    return doc[key]


def _matrix(value, where: str) -> np.ndarray:
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} is not a numeric matrix") from None
    if M.ndim != 2:
        raise ConfigError(f"{where} must be a list of rows")
    return M


def _weight(value, dim: int, where: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        return float(value) * np.eye(dim)
    M = _matrix(value, where)
    if M.shape != (dim, dim):
        raise ConfigError(f"{where} must be {dim}x{dim} or a scalar")
    return M


def _points(value, n: int, where: str) -> list:
    if isinstance(value, dict):
        for key in ("radius", "count"):
            if key not in value:
                raise ConfigError(f"missing field {where}.{key}")
        if n != 2:
            raise ConfigError(f"{where}: circle shorthand needs a 2-dimensional state")
        radius = float(value["radius"])
        count = int(value["count"])
        phase = float(value.get("phase", 0.0))
        if count < 1:
            raise ConfigError(f"{where}.count must be at least 1")
        return [np.array([radius * math.cos(phase + 2 * math.pi * i / count),
                          radius * math.sin(phase + 2 * math.pi * i / count)])
                for i in range(count)]
    if isinstance(value, list):
        points = []
        for i, p in enumerate(value):
            arr = np.array(p, dtype=float)
            if arr.shape != (n,):
                raise ConfigError(f"{where}[{i}] must have {n} coordinates")
            points.append(arr)
        if not points:
            raise ConfigError(f"{where} is empty")
        return points
    raise ConfigError(f"{where} must be a list of points or a circle shorthand")


def load_config(path) -> ParsedConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc

    system = _require(doc, "system", "config")
    H = _matrix(_require(system, "H", "system"), "system.H")
    h = float(_require(system, "h", "system"))
    ref = LtiReference(H=H, h=h)

    plant_doc = _require(doc, "plant", "config")
    B_q = _matrix(_require(plant_doc, "B_q", "plant"), "plant.B_q")
    mode = plant_doc.get("A_q_mode", "exp")
    if mode == "exp":
        A_q = discretize(H, h)
    elif mode == "identity":
        A_q = np.eye(H.shape[0])
    elif isinstance(mode, list):
        A_q = _matrix(mode, "plant.A_q_mode")
    else:
        raise ConfigError(f"plant.A_q_mode must be 'exp', 'identity' or a matrix, got {mode!r}")
    plant = QuantizedPlant(A_q=A_q, B_q=B_q, h=h)

    weights = _require(doc, "weights", "config")
    P = _weight(_require(weights, "P", "weights"), plant.n, "weights.P")
    Q = _weight(_require(weights, "Q", "weights"), plant.n, "weights.Q")
    R = _weight(_require(weights, "R", "weights"), plant.m, "weights.R")
    N = int(_require(doc, "horizon", "config"))

    try:
        problem = MpcProblem(plant=plant, ref=ref, P=P, Q=Q, R=R, N=N)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    run = _require(doc, "run", "config")
    steps = int(_require(run, "steps", "run"))
    initial = _points(_require(run, "initial_points", "run"), plant.n, "run.initial_points")
    if "reference_points" in run:
        reference = _points(run["reference_points"], plant.n, "run.reference_points")
        if len(reference) != len(initial):
            raise ConfigError("run.reference_points count differs from run.initial_points")
    else:
        reference = [p.copy() for p in initial]

    solver = doc.get("solver", "sphere")
    if solver not in SOLVER_FLAGS:
        raise ConfigError(f"solver must be one of {sorted(SOLVER_FLAGS)}, got {solver!r}")
    seed = int(doc.get("seed", 0))
    return ParsedConfig(problem=problem, solver=solver, seed=seed, steps=steps,
                        pairs=list(zip(initial, reference)))


def _codec_sidecar(data_path) -> Path:
    return Path(str(data_path) + ".codec.json")


def _save_codec(codec: classifier.DirectionCodec, path) -> None:
    doc = {"directions": codec.directions.tolist(),
           "canonical_inputs": codec.canonical_inputs.tolist(),
           "b_q": None if codec.b_q is None else codec.b_q.tolist()}
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def _load_codec(path) -> classifier.DirectionCodec:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    b_q = doc.get("b_q")
    return classifier.DirectionCodec(
        directions=np.array(doc["directions"], dtype=float),
        canonical_inputs=np.array(doc["canonical_inputs"], dtype=int),
        b_q=None if b_q is None else np.array(b_q, dtype=float))


def _build_runs(cfg: ParsedConfig, solver: str, mlp=None, codec=None) -> list:
    return [emulator.RunConfig(problem=cfg.problem, solver=SOLVER_FLAGS[solver],
                               x_q0=xq, x_ref0=xr, steps=cfg.steps, seed=cfg.seed,
                               mlp=mlp, codec=codec)
            for xq, xr in cfg.pairs]


def cmd_check(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = stability_conditions(cfg.problem)
    eigs = ", ".join(f"{v.real:+.6f}{v.imag:+.6f}j" for v in report.witness)
    print(f"discretization matches reference flow: {report.matched_discretization}")
    print(f"tracking-error weights contract:       {report.error_contraction}")
    print(f"contraction test eigenvalues:          [{eigs}]")
    if report.satisfied:
        print("both stability conditions hold")
        return 0
    print("stability conditions NOT satisfied")
    return 1


def _print_metrics(logs) -> None:
    print(f"{'run':>4} {'max_err':>12} {'final_err':>12} {'J_violations':>13} {'ball_radius':>12}")
    for i, log in enumerate(logs):
        met = emulator.compute_metrics(log)
        print(f"{i:>4} {met.max_error:>12.6f} {met.final_error:>12.6f} "
              f"{met.cost_monotone_violations:>13d} {met.terminal_ball_radius:>12.6f}")


def cmd_emulate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    solver = args.solver or cfg.solver
    mlp = codec = None
    if solver == "classifier":
        if not args.model:
            print("emulate: --model is required with the classifier solver", file=sys.stderr)
            return 2
        mlp, codec = classifier.load_model(args.model)
        plant_codec = classifier.codec_build(cfg.problem.plant)
        if not np.array_equal(plant_codec.directions, codec.directions):
            print("emulate: model codec does not match the configured plant", file=sys.stderr)
            return 1
        codec = plant_codec
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs = emulator.batch_run(_build_runs(cfg, solver, mlp=mlp, codec=codec))
    for i, log in enumerate(logs):
        emulator.write_trajectory_csv(log, out_dir / f"traj_{i:03d}.csv")
    _print_metrics(logs)
    print(f"wrote {len(logs)} trajectory files to {out_dir}")
    return 0


def cmd_collect(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    solver = args.solver or cfg.solver
    if solver == "classifier":
        print("collect: datasets come from the sphere, exhaustive or suboptimal solver",
              file=sys.stderr)
        return 2
    logs = emulator.batch_run(_build_runs(cfg, solver))
    codec = classifier.codec_build(cfg.problem.plant)
    dataset = emulator.collect_dataset(logs, codec)
    emulator.write_dataset_csv(dataset, args.out)
    _save_codec(codec, _codec_sidecar(args.out))
    print(f"wrote {len(dataset)} rows to {args.out} "
          f"({codec.class_count} direction classes)")
    return 0


def cmd_train(args) -> int:
    dataset = emulator.read_dataset_csv(args.data)
    test_set = emulator.read_dataset_csv(args.test) if args.test else None
    codec_path = Path(args.codec) if args.codec else _codec_sidecar(args.data)
    if not codec_path.exists():
        print(f"train: codec file {codec_path} not found (produced by collect; "
              f"override with --codec)", file=sys.stderr)
        return 2
    codec = _load_codec(codec_path)
    mlp = classifier.Mlp.for_features(dataset.features.shape[1], codec.class_count,
                                      seed=args.seed)
    report = classifier.train(mlp, dataset, epochs=args.epochs, seed=args.seed,
                              test_dataset=test_set)
    classifier.save_model(mlp, codec, args.out)
    print(f"epochs: {len(report.epoch_losses)}  final loss: {report.epoch_losses[-1]:.6f}")
    print(f"train accuracy: {report.train_accuracy:.4f}")
    print(f"test accuracy:  {report.test_accuracy:.4f}")
    print(f"wrote model to {args.out}")
    return 0


def cmd_plot(args) -> int:
    series = []
    for path in args.traj:
        table = emulator.read_trajectory_csv(path)
        series.append((table.states_ref, table.states_q))
    bounds = tuple(args.bounds) if args.bounds else None
    svg = plotting.phase_portrait_svg(series, bounds=bounds)
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsmpc",
                                     description="Emulate stable LTI systems with a "
                                                 "ternary-input plant.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="verify the stability conditions of a config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("emulate", help="run closed-loop emulations, write CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--solver", choices=sorted(SOLVER_FLAGS))
    p.add_argument("--model", help="model JSON (classifier solver only)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("collect", help="harvest a classifier dataset from emulations")
    p.add_argument("--config", required=True)
    p.add_argument("--solver", choices=["sphere", "exhaustive", "suboptimal"])
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="train the direction classifier on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--test", help="held-out dataset CSV; default splits --data")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--codec", help="codec JSON; defaults to <data>.codec.json")
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plot", help="render trajectory CSVs as a phase-plane SVG")
    p.add_argument("--traj", nargs="+", required=True)
    p.add_argument("--bounds", nargs=4, type=float, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
