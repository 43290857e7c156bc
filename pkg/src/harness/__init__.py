# CaseCohort Monte Carlo harness
from src.harness.report import (
    CoefficientSummary,
    ExcludedReplicate,
    StudyReport,
    emit_report,
    load_report_json,
    reports_to_frame,
)
from src.harness.runner import (
    DesignConfig,
    StudyConfig,
    compare_schemes,
    replicate_seed,
    run_study,
    summarize_estimates,
)

__all__ = [
    "CoefficientSummary",
    "DesignConfig",
    "ExcludedReplicate",
    "StudyConfig",
    "StudyReport",
    "compare_schemes",
    "emit_report",
    "load_report_json",
    "replicate_seed",
    "reports_to_frame",
    "run_study",
    "summarize_estimates",
]
