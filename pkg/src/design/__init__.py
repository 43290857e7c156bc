# CaseCohort design layer: subcohort sampling and weights
from src.design.sampling import SamplingPlan, sample_subcohort, stratum_from_covariate, subject_rng
from src.design.weights import WeightScheme, build_weights, check_weight_calibration

__all__ = [
    "SamplingPlan",
    "WeightScheme",
    "build_weights",
    "check_weight_calibration",
    "sample_subcohort",
    "stratum_from_covariate",
    "subject_rng",
]
