"""
fpsearch - command-line entry point

Fixed-point quantum search simulator: calibration table, closed-form
evaluation, Monte-Carlo runs, sweeps, scaling fits and the exact stop-time
oracle.

Run with: python -m src.main <command> [options]

Settings are layered: environment (FPSEARCH_*, .env) < --config file
(key=value lines, same keys as the flags) < explicit flags.

Exit codes: 0 success, 1 unexpected error, 2 usage or validation error,
3 simulation cap reached.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .commands import MODULES, UsageError
from .config import get_settings
from .services.analytic import AnalyticError, ThresholdUnreachable
from .services.artifacts import ArtifactError
from .services.engine import EngineError, RegisterTooLarge
from .services.estimator import EstimatorError
from .services.harness import HarnessError, HorizonOverflow
from .services.search import SearchError, SimulationCapExceeded


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_CAP = 3

CAP_ERRORS = (RegisterTooLarge, SimulationCapExceeded, HorizonOverflow, ThresholdUnreachable)
USAGE_ERRORS = (
    UsageError, ValidationError, ValueError, AnalyticError, EstimatorError,
    EngineError, SearchError, HarnessError, ArtifactError,
)


# =============================================================================
# PARSER
# =============================================================================

def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("global")
    group.add_argument("--config", type=str, default=None, help="key=value file of flag defaults")
    group.add_argument("--out", type=str, default=None, help="Output directory")
    group.add_argument("--workers", type=int, default=None, help="Worker processes (0 = all cores)")
    group.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING, ...")
    group.add_argument("-v", "--verbose", action="count", default=0)
    return common


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="fpsearch",
        description="Fixed-point quantum search with a corrected-ratio stopping rule",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_options()
    for module in MODULES:
        module.register(subparsers, common)
    return parser, dict(subparsers.choices)


# =============================================================================
# CONFIG FILES
# =============================================================================

def read_config_file(path: Path) -> dict[str, str]:
    """key=value lines; '#' starts a comment; keys use flag or attribute spelling."""
    if not path.is_file():
        raise UsageError(f"Config file not found: {path}")
    values = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _convert(action: argparse.Action, value: str):
    if action.nargs == 0:
        return value.lower() in ("1", "true", "yes", "on")
    if action.type is not None:
        return action.type(value)
    return value


def apply_config_defaults(subparsers: dict[str, argparse.ArgumentParser], values: dict[str, str]) -> None:
    """Install config-file values as subcommand defaults, below explicit flags."""
    known = set()
    for sub in subparsers.values():
        defaults = {}
        for action in sub._actions:
            if action.dest in values and action.dest not in ("config", "help"):
                defaults[action.dest] = _convert(action, values[action.dest])
                known.add(action.dest)
        if defaults:
            sub.set_defaults(**defaults)
    for key in sorted(set(values) - known):
        logger.warning("config key %r matches no option; ignored", key)


# =============================================================================
# ENTRY POINT
# =============================================================================

def configure_logging(level: Optional[str], verbose: int) -> None:
    if level is None:
        level = "DEBUG" if verbose >= 2 else "INFO" if verbose == 1 else get_settings().log_level
    logging.basicConfig(
        level=level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, CAP_ERRORS):
        return EXIT_CAP
    if isinstance(exc, USAGE_ERRORS):
        return EXIT_USAGE
    return EXIT_UNEXPECTED


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()

    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        if known.config:
            apply_config_defaults(subparsers, read_config_file(Path(known.config)))
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    configure_logging(args.log_level, args.verbose)
    logger.info("command %s started", args.command)

    try:
        code = args.func(args)
    except (*CAP_ERRORS, *USAGE_ERRORS) as exc:
        message = getattr(exc, "message", str(exc))
        logger.debug("%s: %s", type(exc).__name__, getattr(exc, "internal_reason", ""))
        print(f"error: {message}", file=sys.stderr)
        return exit_code_for(exc)
    except Exception:
        # Log the traceback, but keep stdout clean
        logger.exception("unexpected failure in %s", args.command)
        return EXIT_UNEXPECTED

    logger.info("command %s finished", args.command)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
