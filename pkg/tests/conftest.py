"""
Shared fixtures.

Run with: pytest tests/ -v
Skip the acceptance-scale Monte-Carlo checks with: pytest -m "not slow"
"""

import pytest

from src.config import get_settings


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale Monte-Carlo checks (10^5 trials)")


@pytest.fixture(autouse=True)
def fresh_settings():
    """Every test starts from freshly loaded settings."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def override_settings(monkeypatch):
    """Set FPSEARCH_* variables for one test."""
    def _apply(**values):
        for key, value in values.items():
            monkeypatch.setenv(f"FPSEARCH_{key.upper()}", str(value))
        get_settings.cache_clear()
        return get_settings()
    return _apply
