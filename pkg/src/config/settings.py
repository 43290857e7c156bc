"""
CaseCohort v1.0 - Configuration
================================
Runtime defaults for the estimators, the design layer and the Monte Carlo
harness. Values come from environment (CASECOHORT_ prefix) or .env.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class LogLevel(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


# ─── BASE PATHS ────────────────────────────────────────────

STUDIES_DIR = Path(__file__).resolve().parent / "studies"


# ─── MAIN SETTINGS ─────────────────────────────────────────

class Settings(BaseSettings):
    """
    CaseCohort global settings.

    Reads from environment variables with CASECOHORT_ prefix.
    Example: CASECOHORT_SIGMA3_FLOOR=1e-4
    """

    model_config = SettingsConfigDict(
        env_prefix="CASECOHORT_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # ── Identity ─────────────────────────────
    app_version: str = "1.0.0"
    log_level: LogLevel = LogLevel.INFO

    # ── Design ───────────────────────────────
    # Lower bound on selection probabilities (missing-at-random floor)
    sigma3_floor: float = Field(default=1e-6, gt=0.0, le=1.0)

    # ── Newton solver (Cox) ──────────────────
    newton_tol: float = Field(default=1e-10, gt=0.0)
    newton_max_iter: int = Field(default=50, ge=1)
    newton_max_halvings: int = Field(default=30, ge=0)
    divergence_bound: float = Field(default=50.0, gt=0.0)
    step_tol: float = Field(default=1e-6, gt=0.0)
    information_floor: float = Field(default=1e-12, ge=0.0)

    # ── Monte Carlo ──────────────────────────
    unstable_fraction: float = Field(default=0.2, ge=0.0, le=1.0)
    confidence_level: float = Field(default=0.95, gt=0.0, lt=1.0)
    default_jobs: int = Field(default=1, ge=1)

    # ── Paths ────────────────────────────────
    studies_dir: str = str(STUDIES_DIR)

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_log_level(cls, v):
        if isinstance(v, str):
            return v.upper()
        return v

    @property
    def log_level_number(self) -> int:
        return {"DEBUG": 10, "INFO": 20, "WARNING": 30, "ERROR": 40}[self.log_level.value]


# ─── SINGLETON ──────────────────────────────────────────────

_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get or create the global settings singleton."""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings() -> None:
    """Drop the cached singleton (tests change env between cases)."""
    global _settings
    _settings = None
