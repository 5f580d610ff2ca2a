"""
Replay a run from its manifest.
"""

import argparse
import logging
from pathlib import Path

from ..config import settings_override
from ..services.artifacts import load_manifest
from .common import HANDLERS, UsageError, command


logger = logging.getLogger(__name__)


@command("replay")
def cmd_replay(args: argparse.Namespace) -> int:
    """
    Re-run the command recorded in a manifest with its recorded parameters.

    The handler runs under the settings recorded in the manifest, not the
    current environment. --out redirects the outputs; --workers applies to
    this execution only, results do not depend on it.
    """
    manifest = load_manifest(Path(args.manifest))
    handler = HANDLERS.get(manifest.command)
    if handler is None or manifest.command == "replay":
        raise UsageError(f"Manifest records an unknown command: {manifest.command}")

    parameters = dict(manifest.parameters)
    if args.out:
        if parameters.get("csv"):
            parameters["csv"] = str(Path(args.out) / Path(parameters["csv"]).name)
        parameters["out"] = args.out
    if args.workers is not None:
        parameters["workers"] = args.workers

    logger.info("replaying %s from %s (parameters %s)", manifest.command, args.manifest, manifest.parameters_hash)
    with settings_override(manifest.settings):
        return handler(argparse.Namespace(command=manifest.command, **parameters))


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("replay", parents=[common], help="Re-run a command from its manifest.json")
    parser.add_argument("manifest", help="Path to a manifest written by an earlier run")
    parser.set_defaults(func=cmd_replay)
