"""Command-line front end.

Subcommands: ``select``, ``estimate``, ``crossval``, ``bench``, ``synth``.
Reports are JSON documents with a fixed key order; sensor numbers in
reports are 1-based (row 1 of the input file is sensor 1).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .errors import (
    BoundViolation,
    ConfigError,
    DimensionMismatch,
    InfeasibleSubset,
    InvalidBudget,
    InvalidMatrix,
    NotPositiveDefinite,
    NumericalBreakdown,
    ParseError,
)
from .harness import (
    ALGORITHMS,
    ExperimentConfig,
    bench_csv,
    cross_validate,
    run_benchmark,
    select_sensors,
    synthesize_field,
)
from .io import load_matrix, save_matrix
from .problem import SelectionProblem
from .reduction import reduce_output
from .ridge import evaluate, fit

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("sensorsel")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def render_report(doc: dict) -> str:
    """Serialize a report; non-finite numbers become ``null``."""
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def _one_based(indices: Sequence[int]) -> list[int]:
    return [int(i) + 1 for i in indices]


def _parse_indices(text: str) -> list[int]:
    try:
        vals = [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise UsageError(f"--indices expects comma-separated integers, got {text!r}")
    if any(v < 1 for v in vals):
        raise UsageError("--indices are 1-based sensor numbers")
    return [v - 1 for v in vals]


def _parse_sizes(text: str) -> list[tuple[int, int, int, int]]:
    sizes = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 4:
            raise UsageError(f"--sizes entries are N,M,Ny,p; got {chunk!r}")
        try:
            sizes.append(tuple(int(v) for v in parts))
        except ValueError:
            raise UsageError(f"--sizes entries must be integers; got {chunk!r}")
    if not sizes:
        raise UsageError("--sizes is empty")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--algorithm", choices=ALGORITHMS, default="greg")
    common.add_argument("--sensors", type=int, help="sensor budget p")
    common.add_argument("--lambda", dest="lambda_tilde", type=float, default=0.0,
                        help="per-sample regularization used for selection")
    common.add_argument("--rank", type=int, default=None,
                        help="SVD modes used for selection (reduced output / DG / BDG)")
    common.add_argument("--input-x")
    common.add_argument("--input-y", help="defaults to the input-x matrix (reconstruction)")
    common.add_argument("--format", choices=("csv", "dmat"), default=None,
                        help="input file format (default: by extension)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--center", action="store_true", help="subtract row means")
    common.add_argument("--output", help="report path (default: stdout)")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--no-timing", action="store_true",
                        help="omit wall-clock fields so reports are reproducible")

    parser = _Parser(prog="sensorsel", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sub.add_parser("select", parents=[common], help="select sensors")

    p_est = sub.add_parser("estimate", parents=[common],
                           help="fit the ridge estimator on selected sensors")
    p_est.add_argument("--indices", help="1-based sensors; skips selection")
    p_est.add_argument("--estimation-lambda", type=float, default=None)
    p_est.add_argument("--test-x")
    p_est.add_argument("--test-y")

    p_cv = sub.add_parser("crossval", parents=[common], help="k-fold cross-validation")
    p_cv.add_argument("--folds", type=int, default=5)
    p_cv.add_argument("--estimation-lambda", type=float, default=None)
    p_cv.add_argument("--leave-groups",
                      help="file with one group label per snapshot; each group is a test fold")

    p_b = sub.add_parser("bench", parents=[common], help="timing benchmark")
    p_b.add_argument("--sizes", required=True, help="N,M,Ny,p;N,M,Ny,p;...")
    p_b.add_argument("--repeats", type=int, default=3)

    p_s = sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    p_s.add_argument("--n", type=int, required=True)
    p_s.add_argument("--m", type=int, required=True)
    p_s.add_argument("--noise", type=float, default=0.0, help="noise relative to field RMS")
    p_s.add_argument("--mode", choices=("reconstruction", "estimation"),
                     default="reconstruction")
    p_s.add_argument("--output-x", required=True)
    p_s.add_argument("--output-y")
    return parser


def _load_xy(args):
    if not args.input_x:
        raise UsageError("--input-x is required")
    x = load_matrix(args.input_x, args.format)
    y = load_matrix(args.input_y, args.format) if args.input_y else x
    return x, y


def _need_sensors(args) -> int:
    if args.sensors is None:
        raise UsageError("--sensors is required")
    if args.sensors < 1:
        raise UsageError("--sensors must be >= 1")
    return args.sensors


def _echo(args, **extra) -> dict:
    cfg = {
        "algorithm": args.algorithm,
        "sensors": args.sensors,
        "lambda": args.lambda_tilde,
        "rank": args.rank,
        "input_x": args.input_x,
        "input_y": args.input_y,
        "format": args.format,
        "seed": args.seed,
        "center": args.center,
    }
    cfg.update(extra)
    return cfg


def _center_rows(a: np.ndarray) -> np.ndarray:
    return a - a.mean(axis=1, keepdims=True)


def cmd_select(args) -> dict:
    p = _need_sensors(args)
    x, y = _load_xy(args)
    if args.center:
        x, y = _center_rows(x), _center_rows(y)
    result = select_sensors(args.algorithm, x, y, p, args.lambda_tilde, args.rank, args.seed)
    doc = {
        "command": "select",
        "config": _echo(args),
        "result": {
            "indices": _one_based(result.indices),
            "objective_trajectory": result.objective_trajectory,
            "termination": result.termination.value,
        },
    }
    if args.rank is not None and args.algorithm in ("greg", "naive", "somp"):
        red = reduce_output(y, min(args.rank, min(y.shape)))
        doc["result"]["reduction"] = {"r": red.r, "truncated_energy": red.truncated_energy}
    if not args.no_timing:
        doc["result"]["step_seconds"] = result.step_times
        doc["result"]["total_seconds"] = float(sum(result.step_times))
    return doc


def cmd_estimate(args) -> dict:
    x, y = _load_xy(args)
    if args.center:
        x, y = _center_rows(x), _center_rows(y)
    est_lambda = args.lambda_tilde if args.estimation_lambda is None else args.estimation_lambda
    doc = {"command": "estimate", "config": _echo(args, estimation_lambda=est_lambda)}
    if args.indices:
        indices = _parse_indices(args.indices)
    else:
        p = _need_sensors(args)
        result = select_sensors(args.algorithm, x, y, p, args.lambda_tilde, args.rank, args.seed)
        indices = result.indices
    problem = SelectionProblem(x, y, est_lambda, 0)
    est = fit(problem, indices)
    train = evaluate(est, x, y)
    doc["estimator"] = {
        "indices": _one_based(est.sensor_indices),
        "gain": est.gain,
        "training_cost": est.training_cost,
        "gain_norm": est.gain_norm,
        "train_normalized_error": train.normalized_frobenius_error,
    }
    if args.test_x:
        x_te = load_matrix(args.test_x, args.format)
        y_te = load_matrix(args.test_y, args.format) if args.test_y else x_te
        met = evaluate(est, x_te, y_te)
        doc["test"] = {
            "normalized_frobenius_error": met.normalized_frobenius_error,
            "absolute_frobenius_error": met.absolute_frobenius_error,
            "rmse": met.rmse,
            "zero_reference": met.zero_reference,
        }
    return doc


def _read_groups(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        labels = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not labels:
        raise ParseError(f"no group labels in {path}")
    return labels


def cmd_crossval(args) -> dict:
    p = _need_sensors(args)
    if args.folds < 2:
        raise UsageError(f"--folds must be >= 2 (got {args.folds})")
    config = ExperimentConfig(
        algorithm=args.algorithm,
        budget_p=p,
        lambda_tilde=args.lambda_tilde,
        estimation_lambda_tilde=args.estimation_lambda,
        reduction_rank=args.rank,
        folds=args.folds,
        seed=args.seed,
        center=args.center,
        x_path=args.input_x,
        y_path=args.input_y,
        input_format=args.format,
        report_path=args.output,
    )
    x, y = _load_xy(args)
    groups = _read_groups(args.leave_groups) if args.leave_groups else None
    report = cross_validate(x, y, config, groups)
    folds = []
    for f in report.folds:
        entry = {
            "test_snapshots": _one_based(f.test_snapshots),
            "selected": _one_based(f.selected),
            "termination": f.termination,
            "train_error": f.train_error,
            "test_error": f.test_error,
            "gain_norm": f.gain_norm,
        }
        if not args.no_timing:
            entry["selection_seconds"] = f.selection_seconds
        folds.append(entry)
    return {
        "command": "crossval",
        "config": report.config,
        "folds": folds,
        "aggregate": {
            "sensors": list(range(1, p + 1)),
            "mean_train_error": report.mean_train_error,
            "stderr_train_error": report.stderr_train_error,
            "mean_test_error": report.mean_test_error,
            "stderr_test_error": report.stderr_test_error,
            "mean_gain_norm": report.mean_gain_norm,
            "stderr_gain_norm": report.stderr_gain_norm,
        },
        "environment": report.environment,
    }


def cmd_bench(args) -> str:
    sizes = _parse_sizes(args.sizes)
    rows = run_benchmark(sizes, args.algorithm, args.repeats, args.seed, args.lambda_tilde)
    return bench_csv(rows)


def cmd_synth(args) -> dict:
    if args.rank is None:
        raise UsageError("--rank is required for synth")
    x, y = synthesize_field(args.n, args.m, args.rank, args.noise, args.seed, args.mode)
    fmt = args.format
    save_matrix(args.output_x, x, fmt)
    if args.output_y:
        save_matrix(args.output_y, y, fmt)
    return {
        "command": "synth",
        "config": {
            "n": args.n, "m": args.m, "rank": args.rank, "noise": args.noise,
            "mode": args.mode, "seed": args.seed, "format": fmt,
        },
        "outputs": {"x": args.output_x, "y": args.output_y},
        "shapes": {"x": list(x.shape), "y": list(y.shape)},
    }


COMMANDS = {
    "select": cmd_select,
    "estimate": cmd_estimate,
    "crossval": cmd_crossval,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _configure_logging(quiet: bool) -> None:
    if not log.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        log.addHandler(handler)
        log.propagate = False
    log.setLevel(logging.WARNING if quiet else logging.INFO)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "sensorsel: error: a subcommand is required")
        _configure_logging(args.quiet)
        out = COMMANDS[args.command](args)
        text = out if isinstance(out, str) else render_report(out)
        # synth writes its matrices itself; --output is the report path for all commands
        _emit(text, args.output)
        return EXIT_OK
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, InvalidBudget) as exc:
        print(f"sensorsel: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, InvalidMatrix, DimensionMismatch, OSError, IndexError) as exc:
        print(f"sensorsel: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InfeasibleSubset, NotPositiveDefinite, NumericalBreakdown, BoundViolation) as exc:
        print(f"sensorsel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
