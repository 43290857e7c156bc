"""
Shared fixtures. Monte Carlo acceptance studies are marked `slow` and only
run with --runslow.
"""

from __future__ import annotations

import os

import numpy as np
import pytest

from src.config import settings as settings_module
from src.config.study_loader import clear_cache
from src.survival.cohort import Cohort
from tests.helpers import make_cohort


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run Monte Carlo studies")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo study, minutes of runtime")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Every test starts from default settings and an empty study cache."""
    for key in list(os.environ):
        if key.startswith("CASECOHORT_"):
            monkeypatch.delenv(key, raising=False)
    settings_module.reset_settings()
    clear_cache()
    yield
    settings_module.reset_settings()
    clear_cache()


@pytest.fixture
def three_subjects() -> Cohort:
    """(Y, Delta, Z) = (1,1,1), (2,1,0), (3,0,1)."""
    return make_cohort([(1.0, 1, 1.0), (2.0, 1, 0.0), (3.0, 0, 1.0)])


@pytest.fixture
def analytic_cox() -> Cohort:
    """Root at theta = -log(2)/2."""
    return make_cohort([(1.0, 1, 0.0), (2.0, 1, 1.0), (3.0, 0, 0.0), (3.0, 0, 1.0)])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
