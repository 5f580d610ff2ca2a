"""
Simulation commands: Monte-Carlo runs of either algorithm and the
engine-mode comparison.
"""

import argparse
import logging

from ..services.artifacts import write_json
from ..services.harness import compare_modes, monte_carlo
from .common import (
    add_algorithm_arguments,
    add_problem_arguments,
    add_trial_arguments,
    build_config,
    build_problem,
    command,
    fmt,
    output_dir,
    record_run,
)


logger = logging.getLogger(__name__)


@command("run")
def cmd_run(args: argparse.Namespace) -> int:
    """Seeded trials; writes results.json and manifest.json."""
    problem = build_problem(args)
    config = build_config(args)
    stats = monte_carlo(problem, config, args.trials, args.seed,
                        algorithm=args.algorithm, workers=args.workers)

    out = output_dir(args)
    results = write_json(out / "results.json", stats)
    record_run("run", args, [results], seed=args.seed)

    print(
        f"{stats.algorithm} p={fmt(stats.p)} mode={stats.mode.value} trials={stats.trials} "
        f"success_rate={fmt(stats.success_rate)} ci=[{fmt(stats.ci_low)}, {fmt(stats.ci_high)}] "
        f"per_attempt={fmt(stats.per_attempt_success_rate)} mean_queries={fmt(stats.mean_queries)} "
        f"mean_restarts={fmt(stats.mean_restarts)}"
    )
    return 0


@command("diagnose")
def cmd_diagnose(args: argparse.Namespace) -> int:
    """Same seed across engine modes; writes diagnose.json."""
    problem = build_problem(args)
    config = build_config(args)
    comparison = compare_modes(problem, config, args.trials, args.seed, workers=args.workers)

    out = output_dir(args)
    path = write_json(out / "diagnose.json", comparison)
    record_run("diagnose", args, [path], seed=args.seed)

    for mode, stats in comparison.stats.items():
        print(f"{mode:<9} success_rate={fmt(stats.success_rate)} mean_queries={fmt(stats.mean_queries)}")
    print(
        f"divergence (dephased - ideal): success_rate={fmt(comparison.success_rate_divergence)} "
        f"mean_queries={fmt(comparison.mean_queries_divergence)}"
    )
    return 0


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("run", parents=[common], help="Monte-Carlo run of one algorithm")
    add_problem_arguments(parser)
    add_algorithm_arguments(parser)
    add_trial_arguments(parser)
    parser.add_argument("--algorithm", choices=["proposed", "canonical"], default="proposed")
    parser.set_defaults(func=cmd_run)

    parser = subparsers.add_parser("diagnose", parents=[common],
                                   help="Compare engine modes (including the dephased model)")
    add_problem_arguments(parser)
    add_algorithm_arguments(parser)
    add_trial_arguments(parser)
    parser.set_defaults(func=cmd_diagnose)
