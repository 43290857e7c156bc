"""
CaseCohort v1.0 - Subjects and Cohorts
=======================================
Observation X = (Y, Delta, Z(.), Z*) plus the design fields R, pi and the
weight processes Omega(t), W(t). Immutable; replace with dataclasses.replace.

validate_cohort is report-style: it never raises and returns the list of violations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

import numpy as np
import structlog
from pydantic import BaseModel

from src.config.settings import get_settings
from src.errors import MaskedCovariateError
from src.survival.paths import CovariatePath

logger = structlog.get_logger()

ONE = CovariatePath.constant(1.0)
ZERO = CovariatePath.constant(0.0)


@dataclass(frozen=True, eq=True)
class Subject:
    """One cohort member."""

    id: int
    y: float
    delta: int
    z: CovariatePath
    z_star: str = "all"
    r: int = 1
    pi: float = 1.0
    omega: CovariatePath = ONE
    w: CovariatePath = ONE
    observed: bool = True
    # complete-data indicator and its probability (two-phase designs)
    r_star: Optional[int] = None
    pi_star: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "delta", int(self.delta))
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "pi", float(self.pi))
        object.__setattr__(self, "z_star", str(self.z_star))

    @property
    def d(self) -> int:
        return self.z.dimension

    def covariates(self) -> CovariatePath:
        """Covariate path; raises for masked subjects."""
        if not self.observed or self.z.masked:
            raise MaskedCovariateError(f"Subject {self.id} has unobserved covariates")
        return self.z

    def masked(self) -> Subject:
        """Copy with covariates hidden and both weights zeroed."""
        return replace(
            self,
            z=CovariatePath.masked_path(self.d),
            omega=ZERO,
            w=ZERO,
            observed=False,
        )


@dataclass(frozen=True)
class Cohort:
    """Validated collection of subjects plus the study horizon tau."""

    subjects: tuple[Subject, ...]
    tau: float
    d: int
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "_index", {s.id: i for i, s in enumerate(self.subjects)})

    def __len__(self) -> int:
        return len(self.subjects)

    def __iter__(self) -> Iterator[Subject]:
        return iter(self.subjects)

    @property
    def n(self) -> int:
        return len(self.subjects)

    @property
    def n_events(self) -> int:
        return sum(s.delta for s in self.subjects)

    def subject(self, subject_id: int) -> Subject:
        return self.subjects[self._index[subject_id]]

    def with_subjects(self, subjects: Iterable[Subject]) -> Cohort:
        return Cohort(tuple(subjects), self.tau, self.d)

    def strata(self) -> list[str]:
        return sorted({s.z_star for s in self.subjects})

    def summary(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "tau": self.tau,
            "events": self.n_events,
            "subcohort": sum(s.r for s in self.subjects),
            "observed": sum(1 for s in self.subjects if s.observed),
            "strata": self.strata(),
        }


# ─── VALIDATION ─────────────────────────────────────────────

class Violation(BaseModel):
    """One broken invariant."""
    code: str
    message: str
    subject_id: Optional[int] = None


def _weight_problems(name: str, path: CovariatePath) -> list[str]:
    if path.masked:
        return [f"{name} weight is masked"]
    if path.dimension != 1:
        return [f"{name} weight must be scalar, got dimension {path.dimension}"]
    if not np.all(np.isfinite(path.values)):
        return [f"{name} weight not finite"]
    if np.any(path.values < 0):
        return [f"{name} weight negative"]
    return []


def validate_cohort(cohort: Cohort, sigma3_floor: Optional[float] = None) -> list[Violation]:
    """
    Check the cohort against the data-model invariants.

    Returns an empty list when the cohort is valid.
    """
    floor = sigma3_floor if sigma3_floor is not None else get_settings().sigma3_floor
    out: list[Violation] = []

    if not (np.isfinite(cohort.tau) and cohort.tau > 0):
        out.append(Violation(code="cohort.tau_invalid", message=f"study horizon tau={cohort.tau} must be positive and finite"))

    seen: set[int] = set()
    for s in cohort.subjects:
        sid = s.id

        def add(code: str, message: str) -> None:
            out.append(Violation(code=code, message=message, subject_id=sid))

        if sid in seen:
            add("subject.duplicate_id", "duplicate subject id")
        seen.add(sid)

        if s.z.dimension != cohort.d:
            add("subject.dimension_mismatch", f"covariate dimension {s.z.dimension} != cohort d={cohort.d}")
        if not (0.0 < s.y <= cohort.tau):
            add("subject.follow_up_out_of_range", f"follow-up time y={s.y} outside (0, tau={cohort.tau}]")
        if s.delta not in (0, 1):
            add("subject.bad_indicator", f"failure indicator delta={s.delta} not in {{0,1}}")
        if s.r not in (0, 1):
            add("subject.bad_indicator", f"subcohort indicator r={s.r} not in {{0,1}}")
        if not (s.pi >= floor):
            add("subject.pi_below_floor", f"selection probability below floor ({s.pi} < {floor})")
        elif s.pi > 1.0:
            add("subject.pi_above_one", f"selection probability {s.pi} exceeds 1")

        for name, path in (("omega", s.omega), ("w", s.w)):
            for problem in _weight_problems(name, path):
                add("subject.weight_invalid", problem)

        if s.observed and s.z.masked:
            add("subject.masked_inconsistent", "observed subject carries a masked covariate path")
        if not s.observed:
            if not s.z.masked:
                add("subject.masked_inconsistent", "unobserved subject exposes covariates")
            for name, path in (("omega", s.omega), ("w", s.w)):
                if not path.masked and np.any(path.values != 0):
                    add("subject.weight_on_masked", f"{name} weight must be zero on masked subjects")

    if cohort.n == 0:
        out.append(Violation(code="cohort.empty", message="cohort has no subjects"))
    elif cohort.n_events == 0:
        out.append(Violation(code="cohort.no_failures", message="no observed failures"))

    if out:
        logger.debug("cohort.validation_failed", violations=len(out))
    return out
