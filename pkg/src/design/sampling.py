"""
CaseCohort v1.0 - Subcohort Sampling
=====================================
Independent Bernoulli selection of the subcohort, simple or stratified on
the auxiliary label Z*. Each subject draws from its own substream keyed by
(seed, subject id): adding subjects never perturbs earlier draws.

Optional phase-two sampling of failures outside the subcohort (case_pi)
yields a two-phase design in which some failures stay unobserved.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Literal, Optional

import numpy as np
import structlog
from pydantic import BaseModel, Field, model_validator

from src.config.settings import get_settings
from src.errors import DesignError
from src.survival.cohort import Cohort, Subject

logger = structlog.get_logger()

# stream tags keep subcohort and phase-two draws independent
_SUBCOHORT_STREAM = 0
_CASE_STREAM = 1


class SamplingPlan(BaseModel):
    """How the subcohort is drawn."""

    kind: Literal["simple-bernoulli", "stratified-bernoulli"] = "simple-bernoulli"
    pi: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    pi_by_stratum: dict[str, float] = Field(default_factory=dict)
    case_pi: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def check_probabilities(self) -> SamplingPlan:
        floor = get_settings().sigma3_floor
        if self.kind == "simple-bernoulli":
            if self.pi is None:
                raise ValueError("simple-bernoulli plan needs 'pi'")
            probs = {"*": self.pi}
        else:
            if not self.pi_by_stratum:
                raise ValueError("stratified-bernoulli plan needs 'pi_by_stratum'")
            probs = self.pi_by_stratum
        for stratum, p in probs.items():
            if not (floor <= p <= 1.0):
                raise ValueError(
                    f"selection probability for stratum {stratum!r} is {p}; "
                    f"must lie in [{floor}, 1]"
                )
        return self

    def probability_for(self, stratum: str) -> float:
        if self.kind == "simple-bernoulli":
            return float(self.pi)
        if stratum not in self.pi_by_stratum:
            raise DesignError(
                f"Stratum {stratum!r} has no selection probability "
                f"(plan covers {sorted(self.pi_by_stratum)})"
            )
        return float(self.pi_by_stratum[stratum])

    def check_covers(self, cohort: Cohort) -> None:
        for stratum in cohort.strata():
            self.probability_for(stratum)


def subject_rng(seed: int, subject_id: int, stream: int = _SUBCOHORT_STREAM) -> np.random.Generator:
    """Deterministic per-subject generator."""
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 63) - 1), spawn_key=(int(subject_id) & 0xFFFFFFFF, stream))
    return np.random.default_rng(ss)


def _draw(seed: int, subject_id: int, p: float, stream: int) -> int:
    if p >= 1.0:
        return 1
    return int(subject_rng(seed, subject_id, stream).random() < p)


def sample_subcohort(cohort: Cohort, plan: SamplingPlan) -> Cohort:
    """
    Draw R_i ~ Bernoulli(pi_{stratum(i)}) independently.

    Fills r and pi; with plan.case_pi also fills the complete-data indicator
    r_star = R or S (S ~ Bernoulli(case_pi) for failures) and its
    probability pi_star. Input must be fully observed.
    """
    plan.check_covers(cohort)
    out: list[Subject] = []
    for s in cohort.subjects:
        if not s.observed:
            raise DesignError(f"Subject {s.id} is already masked; sample the full cohort")
        p = plan.probability_for(s.z_star)
        r = _draw(plan.seed, s.id, p, _SUBCOHORT_STREAM)

        r_star: Optional[int] = None
        pi_star: Optional[float] = None
        if plan.case_pi is not None:
            if s.delta == 1:
                extra = _draw(plan.seed, s.id, plan.case_pi, _CASE_STREAM) if plan.case_pi > 0 else 0
                r_star = int(r == 1 or extra == 1)
                pi_star = p + (1.0 - p) * plan.case_pi
            else:
                r_star, pi_star = r, p

        out.append(replace(s, r=r, pi=p, r_star=r_star, pi_star=pi_star))

    sampled = cohort.with_subjects(out)
    logger.debug(
        "design.subcohort_sampled",
        n=sampled.n,
        subcohort=sum(s.r for s in out),
        kind=plan.kind,
        seed=plan.seed,
    )
    return sampled


def stratum_from_covariate(
    cohort: Cohort,
    component: int = 0,
    threshold: float = 0.5,
    labels: tuple[str, str] = ("low", "high"),
) -> Cohort:
    """Set z_star from the baseline value of one covariate component."""
    out = []
    for s in cohort.subjects:
        baseline = s.covariates().values[0, component]
        out.append(replace(s, z_star=labels[int(baseline >= threshold)]))
    return cohort.with_subjects(out)
