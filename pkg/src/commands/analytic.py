"""
Analytic commands: the Set_Val calibration table and forward/inverse
evaluation of the closed-form ratio.
"""

import argparse
import logging
import math
from pathlib import Path

from ..models.schemas import StopAngle
from ..services.analytic import (
    as_fraction,
    expected_ratio_closed,
    solve_stop_probability,
    table1,
)
from ..services.artifacts import canonical_json, manifest_path_for, write_csv
from .common import command, fmt, record_run


logger = logging.getLogger(__name__)


@command("table1")
def cmd_table1(args: argparse.Namespace) -> int:
    """Print the 3x3 calibration table; optionally write it as CSV."""
    rows = table1()
    header = f"{'case':<5}{'p':>16}{'g':>8}{'closed form':>18}{'quadrature':>18}{'published':>11}{'deviation':>18}"
    print(header)
    for row in rows:
        print(
            f"{row.case:<5}{fmt(row.p):>16}{fmt(row.g_target):>8}{fmt(row.ratio_closed):>18}"
            f"{fmt(row.ratio_quadrature):>18}{fmt(row.ratio_published):>11}{fmt(row.deviation):>18}"
        )

    if args.csv:
        path = write_csv(Path(args.csv), "table1", (
            {
                "case": row.case,
                "p": row.p,
                "g_target": row.g_target,
                "ratio_closed": row.ratio_closed,
                "ratio_paper": row.ratio_published,
            }
            for row in rows
        ))
        record_run("table1", args, [path], manifest_path=manifest_path_for(path))
    return 0


@command("analytic")
def cmd_analytic(args: argparse.Namespace) -> int:
    """Ratio from a stop probability (--g), or stop probability from a ratio (--ratio)."""
    frac = as_fraction(args.p)
    if args.g is not None:
        stop = StopAngle.from_probability(args.g)
        record = {
            "direction": "forward",
            "p": frac.p,
            "g": args.g,
            "stop_angle": stop.x,
            "ratio": expected_ratio_closed(frac, stop),
        }
    else:
        g = solve_stop_probability(frac, args.ratio)
        record = {
            "direction": "inverse",
            "p": frac.p,
            "ratio": args.ratio,
            "g": g,
            "stop_angle": math.asin(math.sqrt(g)),
        }
    print(canonical_json(record), end="")
    return 0


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("table1", parents=[common], help="Set_Val calibration table")
    parser.add_argument("--csv", type=str, default=None, help="Also write the table to this CSV file")
    parser.set_defaults(func=cmd_table1)

    parser = subparsers.add_parser("analytic", parents=[common], help="Closed-form ratio, forward or inverse")
    parser.add_argument("--p", type=float, required=True)
    direction = parser.add_mutually_exclusive_group(required=True)
    direction.add_argument("--g", type=float, default=None, help="Success probability at the stop")
    direction.add_argument("--ratio", type=float, default=None, help="Expected corrected ratio")
    parser.set_defaults(func=cmd_analytic)
