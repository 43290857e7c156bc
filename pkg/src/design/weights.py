"""
CaseCohort v1.0 - Weight Schemes
=================================
Turns a sampled cohort into a case-cohort dataset: Omega and W weight
paths plus the observed flag. Subjects whose covariates would not be
collected are masked (z hidden, both weights zero).

  full-data      Omega = W = 1
  self-prentice  Omega = 1, W = R/pi (ratio-equivalent to the subcohort-only risk set)
  ipw-kl         Omega = W = Delta + (R/pi)(1 - Delta)
  two-phase      Omega = W = R*/pi*, default R* = R or Delta
  custom         cohort's own Omega(t), W(t) after checks: finite, nonnegative,
                 at most max_weight (default 1/sigma3); zeroed when unobserved
"""

from __future__ import annotations

from dataclasses import replace
from typing import Literal, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, Field

from src.config.settings import get_settings
from src.errors import DesignError
from src.survival.cohort import ONE, Cohort, Subject
from src.survival.paths import CovariatePath, path_eval

logger = structlog.get_logger()

SchemeKind = Literal["full-data", "self-prentice", "ipw-kl", "two-phase", "custom"]


class WeightScheme(BaseModel):
    """Choice of Omega and W."""

    kind: SchemeKind = "ipw-kl"
    label: Optional[str] = None
    # custom only; None means 1/sigma3_floor
    max_weight: Optional[float] = Field(default=None, gt=0.0)

    @property
    def name(self) -> str:
        return self.label or self.kind


def _check_pi(s: Subject, floor: float) -> None:
    if not (s.pi >= floor):
        raise DesignError(f"Subject {s.id}: selection probability {s.pi} below floor {floor}")


def _observe(s: Subject, omega: CovariatePath, w: CovariatePath) -> Subject:
    if s.z.masked:
        raise DesignError(f"Subject {s.id} must be observed under this scheme but has masked covariates")
    return replace(s, omega=omega, w=w, observed=True)


def _mask(s: Subject) -> Subject:
    return s.masked()


def _check_custom_path(s: Subject, name: str, path: CovariatePath, bound: float) -> None:
    if path.masked or path.dimension != 1:
        raise DesignError(f"Subject {s.id}: custom {name} weight must be a scalar path")
    if not np.all(np.isfinite(path.values)):
        raise DesignError(f"Subject {s.id}: custom {name} weight is not finite")
    if np.any(path.values < 0):
        raise DesignError(f"Subject {s.id}: custom {name} weight is negative")
    if np.any(path.values > bound):
        raise DesignError(f"Subject {s.id}: custom {name} weight exceeds bound {bound:g}")


def _weigh_subject(s: Subject, scheme: WeightScheme, floor: float) -> Subject:
    kind = scheme.kind
    if kind == "full-data":
        return _observe(s, ONE, ONE)

    _check_pi(s, floor)

    if kind == "custom":
        if not s.observed or s.z.masked:
            return s.masked()
        bound = scheme.max_weight if scheme.max_weight is not None else 1.0 / floor
        _check_custom_path(s, "omega", s.omega, bound)
        _check_custom_path(s, "w", s.w, bound)
        return s

    if kind == "self-prentice":
        if s.r == 1 or s.delta == 1:
            return _observe(s, ONE, CovariatePath.constant(s.r / s.pi))
        return _mask(s)

    if kind == "ipw-kl":
        if s.r == 1 or s.delta == 1:
            weight = s.delta + (s.r / s.pi) * (1 - s.delta)
            path = CovariatePath.constant(weight)
            return _observe(s, path, path)
        return _mask(s)

    if kind == "two-phase":
        if s.r_star is not None:
            r_star = s.r_star
            pi_star = s.pi_star if s.pi_star is not None else s.pi
        else:
            r_star = int(s.r == 1 or s.delta == 1)
            pi_star = 1.0 if s.delta == 1 else s.pi
        if not (pi_star >= floor):
            raise DesignError(f"Subject {s.id}: complete-data probability {pi_star} below floor {floor}")
        if r_star == 1:
            path = CovariatePath.constant(1.0 / pi_star)
            return _observe(s, path, path)
        return _mask(s)

    raise DesignError(f"Unknown weight scheme: {kind}")


def build_weights(cohort: Cohort, scheme: WeightScheme, sigma3_floor: Optional[float] = None) -> Cohort:
    """Fill omega, w and observed for every subject under `scheme`."""
    floor = sigma3_floor if sigma3_floor is not None else get_settings().sigma3_floor
    weighted = cohort.with_subjects(_weigh_subject(s, scheme, floor) for s in cohort.subjects)
    logger.debug(
        "design.weights_built",
        scheme=scheme.name,
        observed=sum(1 for s in weighted.subjects if s.observed),
        n=weighted.n,
    )
    return weighted


def check_weight_calibration(cohorts: Sequence[Cohort], t: float = 0.0) -> dict[int, float]:
    """
    Empirical mean of W_i(t) across replicate designs, per subject id.

    Replicates must come from the same underlying full cohort. Under a valid
    scheme every mean should approach 1.
    """
    if not cohorts:
        return {}
    ids = [s.id for s in cohorts[0].subjects]
    totals = dict.fromkeys(ids, 0.0)
    for cohort in cohorts:
        if [s.id for s in cohort.subjects] != ids:
            raise DesignError("Calibration replicates do not share the same subjects")
        for s in cohort.subjects:
            totals[s.id] += float(path_eval(s.w, t)[0])
    m = len(cohorts)
    return {sid: total / m for sid, total in totals.items()}
