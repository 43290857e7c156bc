"""
CaseCohort v1.0 - Fit Results
==============================
Options and result containers shared by the Cox and additive fitters,
plus the baseline cumulative hazard representations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import norm

from src.config.settings import get_settings


# ─── OPTIONS ────────────────────────────────────────────────

class FitOptions(BaseModel):
    """Solver knobs; defaults come from Settings."""

    tol: float = Field(default_factory=lambda: get_settings().newton_tol, gt=0.0)
    max_iter: int = Field(default_factory=lambda: get_settings().newton_max_iter, ge=1)
    max_halvings: int = Field(default_factory=lambda: get_settings().newton_max_halvings, ge=0)
    divergence_bound: float = Field(default_factory=lambda: get_settings().divergence_bound, gt=0.0)
    step_tol: float = Field(default_factory=lambda: get_settings().step_tol, gt=0.0)
    information_floor: float = Field(default_factory=lambda: get_settings().information_floor, ge=0.0)
    theta_init: Optional[list[float]] = None
    skip_empty_risk_sets: bool = False
    confidence_level: float = Field(default_factory=lambda: get_settings().confidence_level, gt=0.0, lt=1.0)


# ─── BASELINES ─────────────────────────────────────────────

@dataclass(frozen=True)
class StepFunction:
    """Right-continuous cumulative step function built from jumps."""

    times: np.ndarray
    increments: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return np.cumsum(self.increments)

    def __len__(self) -> int:
        return int(self.times.size)

    def __call__(self, t: float) -> float:
        k = int(np.searchsorted(self.times, float(t), side="right"))
        return float(self.increments[:k].sum())

    def to_dict(self) -> dict[str, Any]:
        return {"times": self.times.tolist(), "increments": self.increments.tolist()}


@dataclass(frozen=True)
class JumpDriftBaseline:
    """
    Additive-model baseline: jumps at event times plus a continuous drift.

    `drift` holds the cumulative drift at the nodes of `grid`; it is linear
    between nodes. Increments may be negative.
    """

    times: np.ndarray
    jumps: np.ndarray
    grid: np.ndarray
    drift: np.ndarray

    def __call__(self, t: float) -> float:
        t = float(t)
        k = int(np.searchsorted(self.times, t, side="right"))
        jump_part = float(self.jumps[:k].sum())
        if self.grid.size == 0:
            return jump_part
        return jump_part + float(np.interp(t, self.grid, self.drift))

    def to_dict(self) -> dict[str, Any]:
        return {
            "times": self.times.tolist(),
            "jumps": self.jumps.tolist(),
            "drift_grid": self.grid.tolist(),
            "drift": self.drift.tolist(),
        }


# ─── RESULTS ───────────────────────────────────────────────

def wald_intervals(theta: np.ndarray, se: np.ndarray, level: float) -> np.ndarray:
    """(d, 2) array of theta -/+ z_{(1+level)/2} * se."""
    zq = norm.ppf(0.5 + level / 2.0)
    return np.column_stack([theta - zq * se, theta + zq * se])


def _standard_errors(cov: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))


@dataclass
class FitResult:
    model: str
    theta_hat: np.ndarray
    A: np.ndarray
    B: np.ndarray
    cov: np.ndarray
    n: int
    scheme: Optional[str] = None
    # level used by confidence_intervals() and to_dict(); None means settings
    confidence_level: Optional[float] = None
    se: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.se = _standard_errors(self.cov)

    @property
    def level(self) -> float:
        return self.confidence_level if self.confidence_level is not None else get_settings().confidence_level

    def confidence_intervals(self, level: Optional[float] = None) -> np.ndarray:
        return wald_intervals(self.theta_hat, self.se, level if level is not None else self.level)

    def _common(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "scheme": self.scheme,
            "n": self.n,
            "theta_hat": self.theta_hat.tolist(),
            "se": self.se.tolist(),
            "cov": self.cov.tolist(),
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "confidence_level": self.level,
            "ci": self.confidence_intervals().tolist(),
        }


@dataclass
class CoxFitResult(FitResult):
    iterations: int = 0
    converged: bool = False
    baseline: Optional[StepFunction] = None

    def to_dict(self) -> dict[str, Any]:
        out = self._common()
        out.update({
            "iterations": self.iterations,
            "converged": self.converged,
            "baseline": self.baseline.to_dict() if self.baseline is not None else None,
        })
        return out


@dataclass
class AdditiveFitResult(FitResult):
    baseline: Optional[JumpDriftBaseline] = None

    def to_dict(self) -> dict[str, Any]:
        out = self._common()
        out["baseline"] = self.baseline.to_dict() if self.baseline is not None else None
        return out
