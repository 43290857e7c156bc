"""
CaseCohort v1.0 - Monte Carlo Runner
=====================================
Replicates the simulate -> sample -> weight -> fit pipeline and reduces the
fits to bias, empirical SD, mean sandwich SE and Wald coverage.

Every replicate r gets seed = replicate_seed(master, r); cohort and
subcohort draws use sub-seeds of it. Results are keyed by replicate index
and reduced in index order, so --jobs never changes a report.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, Field, model_validator
from scipy.stats import norm

from src.config.settings import get_settings
from src.design.sampling import SamplingPlan, sample_subcohort
from src.design.weights import WeightScheme, build_weights
from src.errors import (
    CaseCohortError,
    DivergenceError,
    NonConvergenceError,
    StudyConfigError,
)
from src.estimators.additive import fit_additive
from src.estimators.cox import fit_cox
from src.estimators.results import FitOptions
from src.harness.report import CoefficientSummary, ExcludedReplicate, StudyReport
from src.simulate.generator import simulate_cohort
from src.simulate.specs import CensoringSpec, CovariateGenerator, ModelSpec, check_positivity

logger = structlog.get_logger()


# ─── CONFIG ─────────────────────────────────────────────────

class DesignConfig(BaseModel):
    plan: SamplingPlan = Field(default_factory=lambda: SamplingPlan(pi=1.0))
    scheme: WeightScheme = Field(default_factory=WeightScheme)


class StudyConfig(BaseModel):
    """One Monte Carlo scenario."""

    name: str = "study"
    replications: int = Field(default=100, ge=1)
    n: int = Field(default=500, ge=1)
    seed: int = 0
    model: ModelSpec = Field(default_factory=ModelSpec)
    censoring: CensoringSpec = Field(default_factory=CensoringSpec)
    covgen: CovariateGenerator = Field(default_factory=CovariateGenerator)
    design: DesignConfig = Field(default_factory=DesignConfig)
    fit: FitOptions = Field(default_factory=FitOptions)
    confidence_level: float = Field(default_factory=lambda: get_settings().confidence_level, gt=0.0, lt=1.0)
    strata_component: Optional[int] = Field(default=None, ge=0)
    compare: list[WeightScheme] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_dimensions(self) -> StudyConfig:
        if self.model.d != self.covgen.d:
            raise ValueError(f"theta0 has length {self.model.d} but covgen.d={self.covgen.d}")
        if self.strata_component is not None and self.strata_component >= self.covgen.d:
            raise ValueError(f"strata_component={self.strata_component} out of range for d={self.covgen.d}")
        return self


# ─── SEEDS ─────────────────────────────────────────────────

def replicate_seed(master: int, index: int) -> int:
    """BLAKE2b of "master:index", first 8 bytes, top bit cleared."""
    digest = hashlib.blake2b(f"{master}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") & ((1 << 63) - 1)


# ─── REPLICATES ────────────────────────────────────────────

@dataclass
class ReplicateOutcome:
    index: int
    seed: int
    scheme: str
    theta_hat: Optional[list[float]] = None
    se: Optional[list[float]] = None
    status: str = "ok"
    reason: Optional[str] = None


def _status_for(exc: Exception) -> str:
    if isinstance(exc, DivergenceError):
        return "diverged"
    if isinstance(exc, NonConvergenceError):
        return "nonconverged"
    return "failed"


def _reason(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def _fit(config: StudyConfig, cohort, scheme: WeightScheme):
    if config.model.family == "cox":
        return fit_cox(cohort, config.fit, scheme=scheme.name)
    return fit_additive(cohort, config.fit, scheme=scheme.name)


def run_replicate(config: StudyConfig, schemes: Sequence[WeightScheme], index: int) -> list[ReplicateOutcome]:
    """
    One replicate: a single cohort and a single subcohort draw, then one fit
    per scheme. Failures are recorded, never raised.
    """
    seed = replicate_seed(config.seed, index)
    try:
        cohort = simulate_cohort(
            config.n,
            config.model,
            config.censoring,
            config.covgen,
            replicate_seed(seed, 0),
            strata_component=config.strata_component,
        )
        plan = config.design.plan.model_copy(update={"seed": replicate_seed(seed, 1)})
        sampled = sample_subcohort(cohort, plan)
    except Exception as e:
        logger.warning("harness.replicate_failed", index=index, seed=seed, stage="data", error=_reason(e))
        return [ReplicateOutcome(index, seed, s.name, status="failed", reason=_reason(e)) for s in schemes]

    outcomes = []
    for scheme in schemes:
        try:
            fit = _fit(config, build_weights(sampled, scheme), scheme)
            outcomes.append(ReplicateOutcome(
                index, seed, scheme.name,
                theta_hat=fit.theta_hat.tolist(),
                se=fit.se.tolist(),
            ))
        except Exception as e:
            logger.warning(
                "harness.replicate_failed",
                index=index, seed=seed, scheme=scheme.name, error=_reason(e),
            )
            outcomes.append(ReplicateOutcome(index, seed, scheme.name, status=_status_for(e), reason=_reason(e)))
    return outcomes


def _replicate_task(args: tuple) -> tuple[int, list[ReplicateOutcome]]:
    # module level so ProcessPoolExecutor can pickle it
    config, schemes, index = args
    return index, run_replicate(config, schemes, index)


def _collect(config: StudyConfig, schemes: Sequence[WeightScheme], jobs: int) -> list[list[ReplicateOutcome]]:
    indices = range(config.replications)
    if jobs <= 1:
        return [run_replicate(config, schemes, r) for r in indices]

    by_index: dict[int, list[ReplicateOutcome]] = {}
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        tasks = [(config, list(schemes), r) for r in indices]
        for index, outcomes in executor.map(_replicate_task, tasks, chunksize=max(1, config.replications // (jobs * 4))):
            by_index[index] = outcomes
    return [by_index[r] for r in indices]


# ─── AGGREGATION ───────────────────────────────────────────

def summarize_estimates(
    estimates: np.ndarray,
    ses: np.ndarray,
    theta0: Sequence[float],
    level: float,
) -> list[CoefficientSummary]:
    """
    Per-coefficient moments over the retained replicates.

    estimates, ses: (m, d). SD uses the m-1 denominator and is None for m < 2.
    """
    theta0 = np.asarray(theta0, dtype=float)
    d = theta0.size
    est = np.asarray(estimates, dtype=float).reshape(-1, d)
    se = np.asarray(ses, dtype=float).reshape(-1, d)
    m = est.shape[0]
    zq = norm.ppf(0.5 + level / 2.0)

    out = []
    for j in range(d):
        if m == 0:
            out.append(CoefficientSummary(index=j, theta0=float(theta0[j])))
            continue
        mean = float(est[:, j].mean())
        sd = float(est[:, j].std(ddof=1)) if m >= 2 else None
        mean_se = float(se[:, j].mean())
        covered = np.abs(est[:, j] - theta0[j]) <= zq * se[:, j]
        out.append(CoefficientSummary(
            index=j,
            theta0=float(theta0[j]),
            mean=mean,
            bias=mean - float(theta0[j]),
            sd=sd,
            mean_se=mean_se,
            se_ratio=(mean_se / sd) if sd else None,
            coverage=float(covered.mean()),
        ))
    return out


def _report(
    config: StudyConfig,
    scheme: WeightScheme,
    outcomes: list[ReplicateOutcome],
    runtime: float,
) -> StudyReport:
    ok = [o for o in outcomes if o.status == "ok"]
    excluded = [ExcludedReplicate(index=o.index, seed=o.seed, status=o.status, reason=o.reason or "") for o in outcomes if o.status != "ok"]
    est = np.array([o.theta_hat for o in ok]) if ok else np.zeros((0, config.model.d))
    se = np.array([o.se for o in ok]) if ok else np.zeros((0, config.model.d))

    unstable = len(excluded) / config.replications > get_settings().unstable_fraction
    report = StudyReport(
        name=config.name,
        scheme=scheme.name,
        family=config.model.family,
        n=config.n,
        replications=config.replications,
        seed=config.seed,
        confidence_level=config.confidence_level,
        coefficients=summarize_estimates(est, se, config.model.theta0, config.confidence_level),
        n_ok=len(ok),
        n_nonconverged=sum(1 for e in excluded if e.status == "nonconverged"),
        n_diverged=sum(1 for e in excluded if e.status == "diverged"),
        n_failed=sum(1 for e in excluded if e.status == "failed"),
        excluded=excluded,
        unstable=unstable,
        runtime_seconds=runtime,
    )
    if unstable:
        logger.warning("harness.unstable_scenario", name=config.name, scheme=scheme.name, excluded=len(excluded))
    return report


def _check_config(config: StudyConfig) -> None:
    try:
        check_positivity(config.model, config.covgen)
    except (CaseCohortError, ValueError) as e:
        raise StudyConfigError(f"Study {config.name!r}: {e}") from e
    if config.censoring.kind == "uniform" and config.censoring.upper <= config.model.tau:
        raise StudyConfigError(f"Study {config.name!r}: uniform censoring upper must exceed tau")


def compare_schemes(config: StudyConfig, schemes: Sequence[WeightScheme], jobs: Optional[int] = None) -> list[StudyReport]:
    """One report per scheme, all on the same cohorts and subcohort draws."""
    if not schemes:
        raise StudyConfigError("compare_schemes needs at least one weight scheme")
    names = [s.name for s in schemes]
    if len(set(names)) != len(names):
        raise StudyConfigError(f"Scheme labels must be unique, got {names}")
    _check_config(config)

    jobs = jobs or get_settings().default_jobs
    started = time.perf_counter()
    logger.info("harness.study_started", name=config.name, replications=config.replications, schemes=names, jobs=jobs)
    per_replicate = _collect(config, schemes, jobs)
    runtime = time.perf_counter() - started

    reports = []
    for j, scheme in enumerate(schemes):
        outcomes = [rep[j] for rep in per_replicate]
        reports.append(_report(config, scheme, outcomes, runtime))
    logger.info("harness.study_completed", name=config.name, runtime=round(runtime, 3))
    return reports


def run_study(config: StudyConfig, jobs: Optional[int] = None) -> StudyReport:
    """Single-scheme study using config.design.scheme."""
    return compare_schemes(config, [config.design.scheme], jobs=jobs)[0]


def study_exit_code(reports: Sequence[StudyReport]) -> int:
    return 2 if any(r.unstable for r in reports) else 0

