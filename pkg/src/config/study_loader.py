"""
CaseCohort v1.0 - Study Loader
===============================
Loads Monte Carlo study definitions from YAML or JSON.
A study is referenced by file path or by name inside the studies
directory (config/studies/<name>.yaml).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Union

import structlog
import yaml
from pydantic import ValidationError

from src.config.settings import get_settings
from src.errors import StudyConfigError

logger = structlog.get_logger()

_studies_cache: dict[str, Any] = {}

_SUFFIXES = (".yaml", ".yml", ".json")


def _resolve(ref: Union[str, Path], studies_dir: Optional[Path]) -> Path:
    candidate = Path(ref)
    if candidate.suffix in _SUFFIXES and candidate.exists():
        return candidate
    dir_path = Path(studies_dir or get_settings().studies_dir)
    for suffix in _SUFFIXES:
        path = dir_path / f"{ref}{suffix}"
        if path.exists():
            return path
    raise StudyConfigError(f"Study not found: {ref} (looked in {dir_path})")


def read_study_file(path: Union[str, Path]) -> dict[str, Any]:
    """Raw mapping from a YAML or JSON file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f) if path.suffix == ".json" else yaml.safe_load(f)
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
        raise StudyConfigError(f"Cannot read study file {path}: {e}") from e
    if not isinstance(data, dict):
        raise StudyConfigError(f"Study file {path} must contain a mapping")
    return data


def load_study(ref: Union[str, Path], studies_dir: Optional[Path] = None):
    """
    Load and validate a study.

    Args:
        ref: File path, or study name in the studies directory
        studies_dir: Custom studies directory (default: settings.studies_dir)

    Returns:
        StudyConfig
    """
    # harness imports config; keep this import local
    from src.harness.runner import StudyConfig

    path = _resolve(ref, studies_dir)
    key = str(path.resolve())
    if key in _studies_cache:
        return _studies_cache[key]

    data = read_study_file(path)
    data.setdefault("name", path.stem)
    try:
        study = StudyConfig.model_validate(data)
    except ValidationError as e:
        raise StudyConfigError(f"Invalid study {path.name}: {e}") from e

    _studies_cache[key] = study
    logger.info("study.loaded", name=study.name, replications=study.replications, family=study.model.family)
    return study


def list_studies(studies_dir: Optional[Path] = None) -> list[str]:
    dir_path = Path(studies_dir or get_settings().studies_dir)
    return sorted({p.stem for suffix in _SUFFIXES for p in dir_path.glob(f"*{suffix}")})


def clear_cache() -> None:
    """Clear the studies cache (tests, hot-reload)."""
    global _studies_cache
    _studies_cache = {}
