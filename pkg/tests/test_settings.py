"""Settings singleton and environment overrides."""

import pytest
from pydantic import ValidationError

from src.config.settings import Settings, get_settings, reset_settings


class TestSettings:

    def test_defaults(self):
        s = get_settings()
        assert s.sigma3_floor == 1e-6
        assert s.divergence_bound == 50.0
        assert s.unstable_fraction == 0.2
        assert s.log_level_number == 20

    def test_singleton(self):
        assert get_settings() is get_settings()

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("CASECOHORT_SIGMA3_FLOOR", "1e-4")
        monkeypatch.setenv("CASECOHORT_LOG_LEVEL", "debug")
        reset_settings()
        s = get_settings()
        assert s.sigma3_floor == 1e-4
        assert s.log_level_number == 10

    def test_out_of_range(self, monkeypatch):
        monkeypatch.setenv("CASECOHORT_UNSTABLE_FRACTION", "1.5")
        with pytest.raises(ValidationError):
            Settings()
