"""
CaseCohort v1.0 - Errors
=========================
Exception hierarchy shared by every subpackage.
The CLI maps ConfigurationError to exit code 1.
"""

from __future__ import annotations

from typing import Optional

import numpy as np


class CaseCohortError(Exception):
    """Root of every error raised by this package."""
    pass


class ConfigurationError(CaseCohortError):
    """Invalid user configuration (plans, schemes, studies, CLI input)."""
    pass


# ─── SURVIVAL DATA ──────────────────────────────────────────

class PathDomainError(CaseCohortError, ValueError):
    """Time argument outside the domain of a covariate path."""
    pass


class MaskedCovariateError(CaseCohortError):
    """Attempt to read the covariates of an unobserved subject."""
    pass


class CohortFormatError(ConfigurationError):
    """Malformed cohort CSV or sidecar."""
    pass


# ─── DESIGN ────────────────────────────────────────────────

class DesignError(ConfigurationError):
    """Sampling plan or weight scheme cannot be applied to a cohort."""
    pass


# ─── SIMULATION ────────────────────────────────────────────

class ModelViolationError(CaseCohortError):
    """Hazard model produces a negative intensity somewhere."""
    pass


# ─── ESTIMATION ────────────────────────────────────────────

class EstimationError(CaseCohortError):
    """Estimating equation cannot be evaluated or solved."""
    pass


class EmptyRiskSetError(EstimationError):
    """Weighted risk set is empty at a time where it is needed."""

    def __init__(self, t: float, message: Optional[str] = None):
        self.t = float(t)
        super().__init__(message or f"Empty weighted risk set at t={self.t:g}")


class SingularMatrixError(EstimationError):
    """Slope / information matrix is singular."""
    pass


class NonConvergenceError(EstimationError):
    """Newton iterations exhausted; carries the last iterate."""

    def __init__(self, message: str, theta: np.ndarray, iterations: int):
        self.theta = np.asarray(theta, dtype=float).copy()
        self.iterations = iterations
        super().__init__(message)


class DivergenceError(NonConvergenceError):
    """Iterates run off to infinity (monotone likelihood / separation)."""
    pass


# ─── HARNESS ───────────────────────────────────────────────

class StudyConfigError(ConfigurationError):
    """Invalid Monte Carlo study configuration."""
    pass
