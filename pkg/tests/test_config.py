"""
Settings tests: recorded settings applied for one block and then undone.
"""

import os

import pytest

from src.config import get_settings, settings_override


class TestSettingsOverride:

    def test_environment_restored(self, monkeypatch):
        monkeypatch.setenv("FPSEARCH_BURN_IN", "7")
        monkeypatch.delenv("FPSEARCH_SIGNIFICANT_DIGITS", raising=False)
        with settings_override({"burn_in": 3, "significant_digits": 6, "unknown_key": 1}) as settings:
            assert settings.burn_in == 3
            assert get_settings().significant_digits == 6
        assert os.environ["FPSEARCH_BURN_IN"] == "7"
        assert "FPSEARCH_SIGNIFICANT_DIGITS" not in os.environ
        assert get_settings().burn_in == 7

    def test_invalid_recorded_value(self, monkeypatch):
        monkeypatch.delenv("FPSEARCH_SIGNIFICANT_DIGITS", raising=False)
        with pytest.raises(ValueError):
            with settings_override({"significant_digits": 40}):
                pass
        assert "FPSEARCH_SIGNIFICANT_DIGITS" not in os.environ
