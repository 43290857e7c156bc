"""
CaseCohort v1.0 - Simulation Specs
===================================
Configuration objects for synthetic cohorts: hazard model, censoring
mechanism and covariate generator. All are pydantic models so they load
straight from the `simulate` block of a study config.
"""

from __future__ import annotations

from functools import cached_property
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from src.errors import ConfigurationError, ModelViolationError
from src.survival.paths import CovariatePath


# ─── HAZARD MODEL ───────────────────────────────────────────

class ModelSpec(BaseModel):
    """
    True hazard model.

    cox:       lambda(t | z) = lambda0(t) * exp(theta0' z(t))
    additive:  lambda(t | z) = lambda0(t) + theta0' z(t)

    `baseline` is a list of (start, rate) steps; a bare number means a
    constant baseline.
    """

    family: Literal["cox", "additive"] = "cox"
    theta0: list[float] = Field(default_factory=lambda: [0.0], min_length=1)
    baseline: list[tuple[float, float]] = Field(default_factory=lambda: [(0.0, 1.0)])
    tau: float = Field(default=10.0, gt=0.0)

    @field_validator("theta0", mode="before")
    @classmethod
    def scalar_theta(cls, v):
        if isinstance(v, (int, float)):
            return [float(v)]
        return v

    @field_validator("baseline", mode="before")
    @classmethod
    def scalar_baseline(cls, v):
        if isinstance(v, (int, float)):
            return [(0.0, float(v))]
        return v

    @field_validator("baseline")
    @classmethod
    def check_baseline(cls, v: list[tuple[float, float]]) -> list[tuple[float, float]]:
        if not v:
            raise ValueError("baseline needs at least one step")
        if v[0][0] != 0.0:
            raise ValueError("baseline must start at t=0")
        starts = [t for t, _ in v]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("baseline steps must be strictly increasing in time")
        if any(not np.isfinite(r) or r < 0 for _, r in v):
            raise ValueError("baseline hazard must be finite and nonnegative")
        return v

    @property
    def d(self) -> int:
        return len(self.theta0)

    @cached_property
    def theta(self) -> np.ndarray:
        return np.asarray(self.theta0, dtype=float)

    @cached_property
    def baseline_path(self) -> CovariatePath:
        return CovariatePath.from_steps(self.baseline)


# ─── CENSORING ─────────────────────────────────────────────

class CensoringSpec(BaseModel):
    """
    Covariate-independent censoring, truncated at the horizon.

    exponential: C = -log(u) / rate  (rate 0 means no random censoring)
    uniform:     C = u * upper
    """

    kind: Literal["exponential", "uniform"] = "exponential"
    rate: float = Field(default=0.0, ge=0.0)
    upper: Optional[float] = Field(default=None, gt=0.0)
    tau: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def check_kind(self) -> CensoringSpec:
        if self.kind == "uniform":
            if self.upper is None:
                raise ValueError("uniform censoring needs 'upper'")
            # P(C >= tau) > 0
            if self.tau is not None and self.upper <= self.tau:
                raise ValueError(f"uniform upper={self.upper} must exceed tau={self.tau}")
        return self

    def with_tau(self, tau: float) -> CensoringSpec:
        """Copy with the administrative cutoff set (never later than an existing one)."""
        cutoff = tau if self.tau is None else min(self.tau, tau)
        return self.model_copy(update={"tau": cutoff})


# ─── COVARIATES ────────────────────────────────────────────

class CovariateGenerator(BaseModel):
    """
    Menu of covariate laws, d independent components each.

      fixed-binary              Bernoulli(p), constant in time
      fixed-gaussian-truncated  N(mean, sd) truncated to [lower, upper], constant
      piecewise-switch          starts at `low`, jumps to `high` at an
                                Exp(switch_rate) time (if before tau)
    """

    kind: Literal["fixed-binary", "fixed-gaussian-truncated", "piecewise-switch"] = "fixed-binary"
    d: int = Field(default=1, ge=1)
    p: float = Field(default=0.5, ge=0.0, le=1.0)
    mean: float = 0.0
    sd: float = Field(default=1.0, gt=0.0)
    lower: float = -2.0
    upper: float = 2.0
    low: float = 0.0
    high: float = 1.0
    switch_rate: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def check_bounds(self) -> CovariateGenerator:
        if self.kind == "fixed-gaussian-truncated" and not self.lower < self.upper:
            raise ValueError(f"truncation bounds reversed: lower={self.lower} >= upper={self.upper}")
        return self

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-component (min, max) of every value a path can take."""
        if self.kind == "fixed-binary":
            lo = 0.0 if self.p < 1.0 else 1.0
            hi = 1.0 if self.p > 0.0 else 0.0
        elif self.kind == "fixed-gaussian-truncated":
            lo, hi = self.lower, self.upper
        else:
            lo, hi = min(self.low, self.high), max(self.low, self.high)
        return np.full(self.d, lo), np.full(self.d, hi)


# ─── POSITIVITY ────────────────────────────────────────────

def check_positivity(model: ModelSpec, covgen: CovariateGenerator) -> None:
    """
    Reject an additive model whose intensity can go negative.

    The smallest intensity over the generator's support box is
    lambda0 + sum_k min(theta_k * lo_k, theta_k * hi_k) on every baseline
    step that starts before tau.
    """
    if model.d != covgen.d:
        raise ConfigurationError(
            f"theta0 has length {model.d} but the covariate generator produces d={covgen.d}"
        )
    if model.family != "additive":
        return

    lo, hi = covgen.support()
    theta = model.theta
    worst = float(np.minimum(theta * lo, theta * hi).sum())
    for start, rate in model.baseline:
        if start >= model.tau:
            break
        if rate + worst < 0.0:
            raise ModelViolationError(
                f"additive intensity {rate + worst:g} < 0 on baseline step starting at t={start:g}"
            )
