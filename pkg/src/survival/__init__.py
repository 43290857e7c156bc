# CaseCohort survival data model
from src.survival.cohort import Cohort, Subject, Violation, validate_cohort
from src.survival.paths import (
    CovariatePath,
    merge_breakpoints,
    path_eval,
    path_eval_many,
    path_integrate,
    path_product,
    refine,
)

__all__ = [
    "Cohort",
    "CovariatePath",
    "Subject",
    "Violation",
    "merge_breakpoints",
    "path_eval",
    "path_eval_many",
    "path_integrate",
    "path_product",
    "refine",
    "validate_cohort",
]
