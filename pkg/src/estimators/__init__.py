# CaseCohort estimators: weighted Cox and additive hazards fitters
from src.estimators.additive import (
    additive_baseline,
    additive_sandwich,
    additive_score,
    eta_tilde,
    fit_additive,
    solve_closed_form,
)
from src.estimators.cox import (
    RiskAggregates,
    breslow_baseline,
    eta_hat,
    fit_cox,
    newton_solve,
    sandwich_variance,
    score,
    score_jacobian,
)
from src.estimators.results import (
    AdditiveFitResult,
    CoxFitResult,
    FitOptions,
    JumpDriftBaseline,
    StepFunction,
)

__all__ = [
    "AdditiveFitResult",
    "CoxFitResult",
    "FitOptions",
    "JumpDriftBaseline",
    "RiskAggregates",
    "StepFunction",
    "additive_baseline",
    "additive_sandwich",
    "additive_score",
    "breslow_baseline",
    "eta_hat",
    "eta_tilde",
    "fit_additive",
    "fit_cox",
    "newton_solve",
    "sandwich_variance",
    "score",
    "score_jacobian",
    "solve_closed_form",
]
