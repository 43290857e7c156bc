# CaseCohort synthetic data
from src.simulate.generator import (
    cumulative_hazard,
    draw_censoring,
    draw_covariates,
    draw_event_time,
    simulate_cohort,
)
from src.simulate.specs import CensoringSpec, CovariateGenerator, ModelSpec, check_positivity

__all__ = [
    "CensoringSpec",
    "CovariateGenerator",
    "ModelSpec",
    "check_positivity",
    "cumulative_hazard",
    "draw_censoring",
    "draw_covariates",
    "draw_event_time",
    "simulate_cohort",
]
