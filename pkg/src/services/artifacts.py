"""
Result files and run manifests.

Output files carry no timestamps, floats are written with a fixed number of
significant digits and JSON keys are sorted, so identical inputs give
byte-identical files. The manifest is the only file that records when a run
happened; it also records everything needed to replay it.

CSV schemas are fixed per command; SCHEMA_VERSION changes whenever one does.
"""

import csv
import hashlib
import json
import logging
import math
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from pydantic import BaseModel

from .. import __version__
from ..config import get_settings
from ..models.schemas import RunManifest


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

CSV_SCHEMAS: dict[str, tuple[str, ...]] = {
    "table1": ("case", "p", "g_target", "ratio_closed", "ratio_paper"),
    "sweep": ("p", "trials", "success_rate", "ci_lo", "ci_hi", "mean_queries", "mean_restarts"),
    "scaling": ("N", "r_stop", "queries_proposed", "queries_canonical", "ratio"),
    "expectation": (
        "p", "stop_iteration", "g_at_stop", "g_after_rotation", "corrected_ratio", "oracle_queries",
    ),
    "oracle": ("r", "prob_stop", "g_at_stop"),
}

MANIFEST_NAME = "manifest.json"

# Parameters that change where or how fast a run executes, not what it computes.
NON_SEMANTIC_PARAMETERS = frozenset({"out", "csv", "workers", "log_level", "verbose", "config"})


class ArtifactError(Exception):
    """Raised when a result file or manifest cannot be written or read."""

    def __init__(self, message: str, internal_reason: str = ""):
        self.message = message
        self.internal_reason = internal_reason
        super().__init__(message)


# =============================================================================
# HASHING AND FORMATTING
# =============================================================================

def hash_text(text: str) -> str:
    """SHA-256 hex digest of text."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def format_number(value: Any) -> str:
    """Fixed-precision text for a CSV cell."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{get_settings().significant_digits}g}"
    return str(value)


def normalize(value: Any, round_floats: bool = True) -> Any:
    """
    JSON-safe copy with floats rounded to the configured significant digits.

    Non-finite floats become the strings "inf", "-inf" and "nan". Manifests
    keep full precision (round_floats=False) so that replays are exact.
    """
    if isinstance(value, BaseModel):
        return normalize(value.model_dump(mode="python"), round_floats)
    if isinstance(value, Mapping):
        return {str(k): normalize(v, round_floats) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(v, round_floats) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return format_number(value)
        return float(format_number(value)) if round_floats else value
    return str(value)


def canonical_json(value: Any) -> str:
    return json.dumps(normalize(value), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def parameters_hash(parameters: Mapping[str, Any]) -> str:
    """Hash of the parameters that determine a command's results."""
    semantic = {k: v for k, v in parameters.items() if k not in NON_SEMANTIC_PARAMETERS}
    return hash_text(json.dumps(normalize(semantic, round_floats=False), sort_keys=True, separators=(",", ":")))[:16]


# =============================================================================
# WRITERS
# =============================================================================

def write_json(path: Path, value: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(value), encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def write_csv(path: Path, schema: str, rows: Iterable[Mapping[str, Any]]) -> Path:
    """Write rows under one of the fixed CSV_SCHEMAS; extra keys are dropped."""
    if schema not in CSV_SCHEMAS:
        raise ArtifactError(f"Unknown CSV schema: {schema}")
    columns = CSV_SCHEMAS[schema]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            missing = [c for c in columns if c not in row]
            if missing:
                raise ArtifactError(
                    f"Row is missing columns of the {schema} schema",
                    internal_reason=f"missing={missing}",
                )
            writer.writerow([format_number(row[c]) for c in columns])
    logger.info("wrote %s", path)
    return path


def read_csv(path: Path, schema: str) -> list[dict[str, str]]:
    """Read a CSV back, checking its header against the schema."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = tuple(reader.fieldnames or ())
        if header != CSV_SCHEMAS[schema]:
            raise ArtifactError(
                f"{path} does not follow the {schema} schema",
                internal_reason=f"header={header}",
            )
        return list(reader)


# =============================================================================
# MANIFESTS
# =============================================================================

def build_manifest(
    command: str,
    parameters: Mapping[str, Any],
    outputs: Sequence[Path],
    seed: Optional[int] = None,
) -> RunManifest:
    clean = normalize(dict(parameters), round_floats=False)
    return RunManifest(
        tool_version=__version__,
        command=command,
        parameters=clean,
        settings=normalize(get_settings().model_dump(), round_floats=False),
        seed=seed,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        parameters_hash=parameters_hash(clean),
        outputs=[Path(p).name for p in outputs],
        schema_version=SCHEMA_VERSION,
    )


def write_manifest(path: Path, manifest: RunManifest) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def manifest_path_for(output: Path) -> Path:
    """Manifest location for a single named output file (e.g. a --csv target)."""
    output = Path(output)
    return output.with_name(f"{output.stem}.{MANIFEST_NAME}")


def load_manifest(path: Path) -> RunManifest:
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"Manifest not found: {path}")
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ArtifactError(f"Invalid manifest: {path}", internal_reason=str(exc)) from exc
