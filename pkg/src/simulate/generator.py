"""
CaseCohort v1.0 - Cohort Generator
===================================
Synthetic survival data with piecewise-constant covariates.

Event times come from exact inversion of the cumulative hazard, which is
piecewise linear on the merged breakpoints of z and the baseline: find the
segment where H crosses -log(u), then solve the linear piece. No root
search, no quadrature.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
import structlog
from scipy.stats import truncnorm

from src.design.sampling import stratum_from_covariate
from src.errors import ConfigurationError, ModelViolationError
from src.simulate.specs import CensoringSpec, CovariateGenerator, ModelSpec, check_positivity
from src.survival.cohort import Cohort, Subject
from src.survival.paths import CovariatePath, merge_breakpoints, path_eval_many, simplify

logger = structlog.get_logger()


# ─── HAZARD TABLE ───────────────────────────────────────────

def _hazard_table(z: CovariatePath, spec: ModelSpec, horizon: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Segment starts, rates and cumulative hazard at each start, on [0, horizon).
    """
    if z.dimension != spec.d:
        raise ConfigurationError(f"covariate dimension {z.dimension} != len(theta0)={spec.d}")
    grid = merge_breakpoints(z, spec.baseline_path)
    grid = grid[grid < horizon]
    if grid.size == 0:
        grid = np.zeros(1)

    base = path_eval_many(spec.baseline_path, grid)[:, 0]
    lin = path_eval_many(z, grid) @ spec.theta
    if spec.family == "cox":
        rates = base * np.exp(lin)
    else:
        rates = base + lin
        bad = np.flatnonzero(rates < 0.0)
        if bad.size:
            t_bad = grid[bad[0]]
            raise ModelViolationError(
                f"additive intensity {rates[bad[0]]:g} < 0 on segment starting at t={t_bad:g}"
            )

    ends = np.r_[grid[1:], horizon]
    h_end = np.cumsum(rates * (ends - grid))
    h_start = np.r_[0.0, h_end[:-1]]
    return grid, rates, h_start


def cumulative_hazard(z: CovariatePath, spec: ModelSpec, t: float) -> float:
    """H(t) = integral of the subject's hazard over [0, t]."""
    t = float(t)
    if not t >= 0.0:
        raise ValueError(f"cumulative hazard needs t >= 0, got {t}")
    if t == 0.0:
        return 0.0
    grid, rates, h_start = _hazard_table(z, spec, t)
    j = int(np.searchsorted(grid, t, side="right")) - 1
    return float(h_start[j] + rates[j] * (t - grid[j]))


def draw_event_time(z: CovariatePath, spec: ModelSpec, u: float) -> float:
    """
    T with H(T) = -log(u); +inf when the subject survives past tau.
    """
    if not 0.0 < u < 1.0:
        raise ValueError(f"uniform variate must lie in (0, 1), got {u}")
    target = -np.log(u)
    grid, rates, h_start = _hazard_table(z, spec, spec.tau)

    ends = np.r_[grid[1:], spec.tau]
    h_end = h_start + rates * (ends - grid)
    j = int(np.searchsorted(h_end, target, side="left"))
    if j >= grid.size:
        return float("inf")
    # h_start[j] < target <= h_end[j], so rates[j] > 0
    t = grid[j] + (target - h_start[j]) / rates[j]
    return float(min(t, ends[j]))


def draw_censoring(spec: CensoringSpec, u: float) -> float:
    """Censoring time by inversion, truncated at spec.tau."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"uniform variate must lie in (0, 1), got {u}")
    if spec.kind == "exponential":
        c = float("inf") if spec.rate == 0.0 else -np.log(u) / spec.rate
    else:
        c = u * spec.upper
    if spec.tau is not None:
        c = min(c, spec.tau)
    return float(c)


# ─── COVARIATES ────────────────────────────────────────────

def draw_covariates(covgen: CovariateGenerator, rng: np.random.Generator, tau: float) -> CovariatePath:
    """One covariate path from the generator."""
    d = covgen.d
    if covgen.kind == "fixed-binary":
        return CovariatePath.constant((rng.random(d) < covgen.p).astype(float))

    if covgen.kind == "fixed-gaussian-truncated":
        a = (covgen.lower - covgen.mean) / covgen.sd
        b = (covgen.upper - covgen.mean) / covgen.sd
        draws = truncnorm.rvs(a, b, loc=covgen.mean, scale=covgen.sd, size=d, random_state=rng)
        return CovariatePath.constant(np.atleast_1d(draws))

    # piecewise-switch: each component flips low -> high once
    switch = rng.exponential(1.0 / covgen.switch_rate, size=d)
    cuts = np.unique(switch[(switch > 0.0) & (switch < tau)])
    grid = np.r_[0.0, cuts]
    values = np.where(grid[:, None] >= switch[None, :], covgen.high, covgen.low)
    return simplify(CovariatePath(grid, values))


# ─── COHORT ────────────────────────────────────────────────

def _subject_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed) & ((1 << 63) - 1), spawn_key=(index,)))


def _open_uniform(rng: np.random.Generator) -> float:
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return float(u)


def simulate_cohort(
    n: int,
    model: ModelSpec,
    cens: CensoringSpec,
    covgen: CovariateGenerator,
    seed: int,
    strata_component: Optional[int] = None,
    strata_threshold: float = 0.5,
) -> Cohort:
    """
    n independent fully observed subjects with Y = min(T, C, tau).

    Subject i draws from its own substream keyed by i. Optionally labels
    strata from the baseline value of one covariate component.
    """
    if n < 1:
        raise ConfigurationError(f"cohort size must be >= 1, got {n}")
    check_positivity(model, covgen)
    if cens.kind == "uniform" and cens.upper <= model.tau:
        raise ConfigurationError(f"uniform censoring upper={cens.upper} must exceed tau={model.tau}")
    cens = cens.with_tau(model.tau)

    subjects = []
    for i in range(n):
        rng = _subject_stream(seed, i)
        z = draw_covariates(covgen, rng, model.tau)
        t = draw_event_time(z, model, _open_uniform(rng))
        c = draw_censoring(cens, _open_uniform(rng))
        y = min(t, c)
        subjects.append(Subject(id=i, y=y, delta=int(t <= c), z=z))

    cohort = Cohort(tuple(subjects), model.tau, model.d)
    if strata_component is not None:
        cohort = stratum_from_covariate(cohort, strata_component, strata_threshold)

    logger.debug(
        "simulate.cohort_generated",
        n=n,
        events=cohort.n_events,
        family=model.family,
        covgen=covgen.kind,
        seed=seed,
    )
    return cohort
