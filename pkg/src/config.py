"""
Configuration
Loads environment variables and provides typed settings.

Every value here is a default; CLI flags and `--config` files override it.
Environment variables use the FPSEARCH_ prefix, e.g. FPSEARCH_DEFAULT_SEED.
"""

import os
from contextlib import contextmanager
from functools import lru_cache
from typing import Any, Iterator, Mapping

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Stopping rule: Set_Val = 1.0 and the optimal cloner eta = 1/3
    set_val: float = Field(1.0, gt=0.0)
    eta: float = Field(1.0 / 3.0, gt=0.0, le=1.0 / 3.0)
    # Minimum ancilla samples before the ratio is trusted (0 = literal reading)
    burn_in: int = Field(25, ge=0)

    # Reproducibility
    default_seed: int = Field(20240601, ge=0)

    # Parallelism: 0 means one worker per available core
    workers: int = Field(0, ge=0)

    # Simulation caps
    statevector_max_qubits: int = Field(24, ge=1, le=30)
    dp_max_horizon: int = Field(10_000, ge=1)
    default_max_restarts: int = Field(100, ge=0)

    # Numerical tolerances
    quadrature_tolerance: float = 1e-9
    closed_form_tolerance: float = 1e-9
    bisection_tolerance: float = 1e-10

    # Output
    output_dir: str = "results"
    significant_digits: int = Field(12, ge=1, le=17)
    log_level: str = "WARNING"

    model_config = SettingsConfigDict(
        env_prefix="FPSEARCH_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


@contextmanager
def settings_override(values: Mapping[str, Any]) -> Iterator[Settings]:
    """
    Run a block under recorded settings.

    The values go through the FPSEARCH_ environment, so worker processes see
    them too; the previous environment is restored on exit. Unknown keys are
    ignored.
    """
    known = {k: v for k, v in values.items() if k in Settings.model_fields}
    Settings(**known)

    saved = {}
    for key, value in known.items():
        name = f"FPSEARCH_{key.upper()}"
        saved[name] = os.environ.get(name)
        os.environ[name] = str(value)
    get_settings.cache_clear()
    try:
        yield get_settings()
    finally:
        for name, previous in saved.items():
            if previous is None:
                os.environ.pop(name, None)
            else:
                os.environ[name] = previous
        get_settings.cache_clear()
