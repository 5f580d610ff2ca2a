"""
Grid commands that emit CSV tables: sweep, scaling, expectation, oracle.
"""

import argparse
import logging

from ..models.schemas import ProblemInstance
from ..services.analytic import SUCCESS_FLOOR_GRID
from ..services.harness import exact_stop_distribution, scaling_fit, sweep
from ..services.search import deterministic_expectation_run
from ..services.artifacts import write_csv
from .common import (
    UsageError,
    add_algorithm_arguments,
    add_trial_arguments,
    build_config,
    command,
    fmt,
    output_dir,
    parse_float_list,
    record_run,
)


logger = logging.getLogger(__name__)


def _grid(args: argparse.Namespace) -> list[float]:
    if args.p_values is not None:
        return list(args.p_values)
    if args.grid == "default":
        return list(SUCCESS_FLOOR_GRID)
    raise UsageError(f"Unknown grid: {args.grid}")


@command("sweep")
def cmd_sweep(args: argparse.Namespace) -> int:
    problems = [ProblemInstance.from_fraction(p) for p in _grid(args)]
    rows = sweep(problems, build_config(args), args.trials, args.seed, workers=args.workers)
    path = write_csv(output_dir(args) / "sweep.csv", "sweep", (row.model_dump() for row in rows))
    record_run("sweep", args, [path], seed=args.seed)
    print(f"{len(rows)} rows -> {path}")
    return 0


@command("scaling")
def cmd_scaling(args: argparse.Namespace) -> int:
    if args.nmin > args.nmax:
        raise UsageError("--nmin must not exceed --nmax")
    fit = scaling_fit([2 ** e for e in range(args.nmin, args.nmax + 1)], build_config(args))
    path = write_csv(output_dir(args) / "scaling.csv", "scaling", (row.model_dump() for row in fit.rows))
    record_run("scaling", args, [path])
    print(
        f"slope={fmt(fit.slope)} limiting_ratio={fmt(fit.limiting_ratio)} "
        f"r_stop/sqrt(N)={fmt(fit.r_stop_over_sqrt_n)}"
    )
    return 0


@command("expectation")
def cmd_expectation(args: argparse.Namespace) -> int:
    config = build_config(args)
    rows = []
    for p in _grid(args):
        run = deterministic_expectation_run(ProblemInstance.from_fraction(p), config)
        rows.append(run.model_dump())
        print(f"p={fmt(run.p)} r_stop={run.stop_iteration} g_at_stop={fmt(run.g_at_stop)}")
    path = write_csv(output_dir(args) / "expectation.csv", "expectation", rows)
    record_run("expectation", args, [path])
    return 0


@command("oracle")
def cmd_oracle(args: argparse.Namespace) -> int:
    config = build_config(args)
    problem = ProblemInstance.from_fraction(args.p)
    distribution = exact_stop_distribution(problem, config, args.horizon)
    path = write_csv(output_dir(args) / "oracle.csv", "oracle", (
        {"r": r, "prob_stop": prob, "g_at_stop": g}
        for r, (prob, g) in enumerate(zip(distribution.stop_probabilities, distribution.g_measured))
    ))
    record_run("oracle", args, [path])
    print(
        f"p={fmt(distribution.p)} horizon={distribution.horizon} "
        f"per_attempt_success={fmt(distribution.per_attempt_success)} "
        f"truncated_mass={fmt(distribution.truncated_mass)}"
    )
    return 0


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    def add_grid(parser: argparse.ArgumentParser) -> None:
        grid = parser.add_mutually_exclusive_group()
        grid.add_argument("--p-values", type=parse_float_list, default=None,
                          help="Comma-separated target fractions")
        grid.add_argument("--grid", choices=["default"], default="default")

    parser = subparsers.add_parser("sweep", parents=[common], help="Monte-Carlo sweep over a P grid")
    add_grid(parser)
    add_algorithm_arguments(parser)
    add_trial_arguments(parser)
    parser.set_defaults(func=cmd_sweep)

    parser = subparsers.add_parser("scaling", parents=[common], help="Query scaling with m = 1")
    parser.add_argument("--nmin", type=int, default=10, help="Smallest exponent (N = 2^nmin)")
    parser.add_argument("--nmax", type=int, default=20, help="Largest exponent")
    add_algorithm_arguments(parser)
    parser.set_defaults(func=cmd_scaling)

    parser = subparsers.add_parser("expectation", parents=[common],
                                   help="Noise-free runs driven by expected counts")
    add_grid(parser)
    add_algorithm_arguments(parser)
    parser.set_defaults(func=cmd_expectation)

    parser = subparsers.add_parser("oracle", parents=[common], help="Exact stop-time law of one attempt")
    parser.add_argument("--p", type=float, required=True)
    parser.add_argument("--horizon", type=int, default=None,
                        help="Number of ancilla samples (default: the iteration cap)")
    add_algorithm_arguments(parser)
    parser.set_defaults(func=cmd_oracle)

