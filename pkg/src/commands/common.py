"""
Shared pieces of the command modules: the handler registry, argument groups
and the problem / config builders.
"""

import argparse
import logging
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from ..config import get_settings
from ..models.schemas import AlgorithmConfig, ProblemInstance, SearchMode
from ..services.artifacts import MANIFEST_NAME, build_manifest, format_number, write_manifest


logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], int]

# command name -> handler; filled by the @command decorator
HANDLERS: dict[str, Handler] = {}

# Namespace entries that are plumbing rather than parameters.
_INTERNAL_KEYS = ("func", "command")


class UsageError(Exception):
    """Raised for flag combinations argparse cannot express."""

    def __init__(self, message: str, internal_reason: str = ""):
        self.message = message
        self.internal_reason = internal_reason
        super().__init__(message)


def command(name: str) -> Callable[[Handler], Handler]:
    def decorator(func: Handler) -> Handler:
        HANDLERS[name] = func
        return func
    return decorator


def fmt(value: Any) -> str:
    return format_number(value)


# =============================================================================
# ARGUMENT GROUPS
# =============================================================================

def add_problem_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("problem")
    group.add_argument("--n", type=int, default=None, help="Number of qubits (N = 2^n)")
    group.add_argument("--m", type=int, default=None, help="Number of marked items (default 1)")
    group.add_argument("--targets", type=str, default=None,
                       help="Comma-separated marked indices (implies --m)")
    group.add_argument("--p", type=float, default=None, help="Target fraction m/N for the 2-D mode")


def add_algorithm_arguments(parser: argparse.ArgumentParser) -> None:
    settings = get_settings()
    group = parser.add_argument_group("algorithm")
    group.add_argument("--mode", choices=[m.value for m in SearchMode], default=SearchMode.IDEALIZED_2D.value)
    group.add_argument("--set-val", type=float, default=settings.set_val)
    group.add_argument("--eta", type=float, default=settings.eta)
    group.add_argument("--burn-in", type=int, default=settings.burn_in)
    group.add_argument("--max-restarts", type=int, default=settings.default_max_restarts)
    group.add_argument("--max-iterations", type=int, default=None,
                       help="Per-attempt iteration cap (default 20*sqrt(N/m) + 200)")
    group.add_argument("--measure-after-rotation", action="store_true",
                       help="Measure after the G step of the stopping iteration")
    group.add_argument("--target-g", type=float, default=None,
                       help="Known-P tuning: derive Set_Val from this success probability")


def add_trial_arguments(parser: argparse.ArgumentParser, trials: int = 1000) -> None:
    group = parser.add_argument_group("trials")
    group.add_argument("--trials", type=int, default=trials)
    group.add_argument("--seed", type=int, default=get_settings().default_seed)


def parse_float_list(text: str) -> list[float]:
    return [float(part) for part in text.replace(",", " ").split()]


# =============================================================================
# BUILDERS
# =============================================================================

def build_problem(args: argparse.Namespace) -> ProblemInstance:
    """ProblemInstance from --n/--m/--targets or --p."""
    if args.n is not None and args.p is not None:
        raise UsageError("Give either --n or --p, not both")
    if args.n is not None:
        targets = None
        if args.targets:
            targets = [int(part) for part in args.targets.split(",") if part.strip()]
        if targets is not None and args.m is not None and len(set(targets)) != args.m:
            raise UsageError("--m disagrees with the number of --targets")
        return ProblemInstance.from_qubits(args.n, m=args.m, targets=targets)
    if args.p is not None:
        if args.m is not None or args.targets:
            raise UsageError("--m and --targets need --n")
        return ProblemInstance.from_fraction(args.p)
    raise UsageError("One of --n or --p is required")


def build_config(args: argparse.Namespace) -> AlgorithmConfig:
    return AlgorithmConfig(
        mode=SearchMode(args.mode),
        set_val=args.set_val,
        eta=args.eta,
        burn_in=args.burn_in,
        max_iterations_per_attempt=args.max_iterations,
        max_restarts=args.max_restarts,
        seed=getattr(args, "seed", 0),
        measure_after_rotation=args.measure_after_rotation,
        target_g=args.target_g,
    )


def output_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out if args.out else get_settings().output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def command_parameters(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _INTERNAL_KEYS}


def record_run(
    name: str,
    args: argparse.Namespace,
    outputs: Sequence[Path],
    manifest_path: Optional[Path] = None,
    seed: Optional[int] = None,
) -> Path:
    """Write the manifest that pairs with `outputs`."""
    if manifest_path is None:
        manifest_path = Path(outputs[0]).parent / MANIFEST_NAME
    manifest = build_manifest(name, command_parameters(args), outputs, seed=seed)
    return write_manifest(manifest_path, manifest)
