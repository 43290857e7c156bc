"""
CaseCohort v1.0 - Weighted Cox Fitter
======================================
Weighted estimating equation for the Cox model with time-dependent
covariates:

    Psi(theta) = (1/n) sum_i Omega_i(Y_i) {Z_i(Y_i) - eta(Y_i; theta)} Delta_i
    eta(t; theta) = D1(t) / D0(t)
    D0(t) = (1/n) sum_j W_j(t) exp(theta' Z_j(t)) 1(Y_j >= t)

D1 and D2 add Z and ZZ' factors. Full cohort, Self-Prentice and IPW
estimators differ only in the Omega / W paths of the cohort.

Solver: damped Newton with step halving on ||Psi||_2. Baseline: Breslow
increments. Variance: plug-in sandwich A^-1 B A^-T / n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import structlog

from src.errors import (
    ConfigurationError,
    DivergenceError,
    EmptyRiskSetError,
    NonConvergenceError,
    SingularMatrixError,
)
from src.estimators.results import CoxFitResult, FitOptions, StepFunction
from src.estimators.segments import (
    CohortLike,
    SegmentTable,
    as_table,
    as_theta,
    prefix,
    range_sum,
    sandwich_cov,
    subject_sum,
)
from src.survival.cohort import Cohort, validate_cohort
from src.survival.paths import path_eval

logger = structlog.get_logger()


# ─── RISK SETS ──────────────────────────────────────────────

@dataclass(frozen=True)
class RiskAggregates:
    """
    D0, D1, D2 at every distinct event time.

    Stored on a shifted scale exp(theta'Z - shift); ratios are unaffected,
    absolute values are recovered with exp(shift).
    """

    times: np.ndarray
    d0: np.ndarray           # (K,)
    d1: np.ndarray           # (K, d)
    d2: Optional[np.ndarray]  # (K, d, d)
    shift: float
    active: np.ndarray       # event times with a nonempty risk set

    @property
    def eta(self) -> np.ndarray:
        out = np.zeros_like(self.d1)
        out[self.active] = self.d1[self.active] / self.d0[self.active, None]
        return out


def risk_aggregates(
    table: SegmentTable,
    theta: np.ndarray,
    second_order: bool = True,
    skip_empty: bool = False,
) -> RiskAggregates:
    """Weighted risk-set sums at every event time (single sweep over segments)."""
    K = table.n_events
    lin = table.z @ theta
    shift = float(lin.max()) if lin.size else 0.0
    mass = table.w * np.exp(lin - shift) / table.n

    d0 = range_sum(table.lo, table.hi, mass, K)
    d1 = range_sum(table.lo, table.hi, mass[:, None] * table.z, K)
    d2 = None
    if second_order:
        outer = table.z[:, :, None] * table.z[:, None, :]
        d2 = range_sum(table.lo, table.hi, mass[:, None, None] * outer, K)

    active = d0 > 0.0
    demand = table.event_weight_sums(table.omega_y) > 0.0
    empty = np.flatnonzero(~active & demand)
    if empty.size and not skip_empty:
        raise EmptyRiskSetError(table.times[empty[0]])
    if empty.size:
        logger.debug("cox.empty_risk_sets_skipped", count=int(empty.size))

    return RiskAggregates(times=table.times, d0=d0, d1=d1, d2=d2, shift=shift, active=active)


def eta_hat(cohort: Cohort, theta: Sequence[float] | np.ndarray, t: float) -> np.ndarray:
    """D1(t)/D0(t) at an arbitrary time, directly from the subject paths."""
    th = as_theta(theta, cohort.d)
    t = float(t)
    terms = []
    for s in cohort.subjects:
        if not s.observed or s.y < t:
            continue
        w = path_eval(s.w, t)[0]
        if w == 0.0:
            continue
        z = path_eval(s.z, t)
        terms.append((w, z))
    if not terms:
        raise EmptyRiskSetError(t)

    zs = np.array([z for _, z in terms])
    lin = zs @ th
    mass = np.array([w for w, _ in terms]) * np.exp(lin - lin.max())
    total = mass.sum()
    if not total > 0.0:
        raise EmptyRiskSetError(t)
    return (mass[:, None] * zs).sum(axis=0) / total


# ─── ESTIMATING EQUATION ───────────────────────────────────

def _score_from(table: SegmentTable, agg: RiskAggregates) -> np.ndarray:
    eta = agg.eta
    mask = table.event_index >= 0
    k = table.event_index[mask]
    keep = agg.active[k]
    resid = table.z_y[mask][keep] - eta[k[keep]]
    return (table.omega_y[mask][keep, None] * resid).sum(axis=0) / table.n


def _information_scale(table: SegmentTable) -> float:
    """Upper bound on the information: max |Z|^2 times the weighted event rate."""
    if not table.z.size:
        return 0.0
    events = float((table.delta * table.omega_y).sum()) / max(table.n, 1)
    return float(np.abs(table.z).max() ** 2 * events)


def _jacobian_from(table: SegmentTable, agg: RiskAggregates) -> np.ndarray:
    c = table.event_weight_sums(table.omega_y)
    act = agg.active
    eta = agg.d1[act] / agg.d0[act, None]
    var = agg.d2[act] / agg.d0[act, None, None] - eta[:, :, None] * eta[:, None, :]
    jac = -(c[act, None, None] * var).sum(axis=0) / table.n
    return 0.5 * (jac + jac.T)


def score(cohort: CohortLike, theta: Sequence[float] | np.ndarray, skip_empty: bool = False) -> np.ndarray:
    """Psi_n(theta); eta is evaluated only at the observed event times."""
    table = as_table(cohort)
    th = as_theta(theta, table.d)
    return _score_from(table, risk_aggregates(table, th, second_order=False, skip_empty=skip_empty))


def score_jacobian(cohort: CohortLike, theta: Sequence[float] | np.ndarray, skip_empty: bool = False) -> np.ndarray:
    """
    Analytic dPsi/dtheta = -(1/n) sum_k c_k [D2/D0 - eta eta'](t_k),
    c_k the Omega-weighted number of failures at t_k. Symmetric, negative
    semidefinite.
    """
    table = as_table(cohort)
    th = as_theta(theta, table.d)
    return _jacobian_from(table, risk_aggregates(table, th, skip_empty=skip_empty))


# ─── NEWTON ────────────────────────────────────────────────

@dataclass
class NewtonResult:
    theta_hat: np.ndarray
    A: np.ndarray
    score: np.ndarray
    iterations: int
    converged: bool


def _inf(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if x.size else 0.0


def newton_solve(
    cohort: CohortLike,
    theta_init: Optional[Sequence[float]] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    options: Optional[FitOptions] = None,
) -> NewtonResult:
    """
    Root of the weighted score by damped Newton.

    Converged when ||Psi||_inf <= tol and the Newton step is below step_tol.
    An information matrix below information_floor (relative to
    max |Z|^2 times the weighted event rate) on the first iteration is a
    singular problem; later, with the score already flat, it means the
    iterates are running off to infinity.
    """
    opts = options or FitOptions()
    updates = {}
    if tol is not None:
        updates["tol"] = tol
    if max_iter is not None:
        updates["max_iter"] = max_iter
    if updates:
        opts = opts.model_copy(update=updates)
    if not opts.tol > 0:
        raise ConfigurationError(f"tol must be positive, got {opts.tol}")

    table = as_table(cohort)
    init = theta_init if theta_init is not None else opts.theta_init
    theta = np.zeros(table.d) if init is None else as_theta(init, table.d).copy()
    skip = opts.skip_empty_risk_sets

    def evaluate(th: np.ndarray) -> tuple[np.ndarray, RiskAggregates]:
        agg = risk_aggregates(table, th, skip_empty=skip)
        return _score_from(table, agg), agg

    psi, agg = evaluate(theta)
    floor = opts.information_floor * max(_information_scale(table), 1e-300)
    for it in range(1, opts.max_iter + 1):
        A = -_jacobian_from(table, agg)
        eig = np.linalg.eigvalsh(A) if np.all(np.isfinite(A)) else np.array([np.nan])
        if not np.all(np.isfinite(eig)) or eig.min() <= floor:
            if it > 1 and _inf(psi) <= opts.tol:
                raise DivergenceError(
                    f"Score is flat at theta={theta.tolist()}: iterates diverge (monotone likelihood)",
                    theta, it,
                )
            raise SingularMatrixError(
                f"Information matrix singular at iteration {it} (smallest eigenvalue {eig.min():.3g})"
            )

        step = np.linalg.solve(A, psi)
        logger.debug("cox.newton_iteration", iteration=it, score_inf=_inf(psi), step_inf=_inf(step))
        if _inf(psi) <= opts.tol and _inf(step) <= opts.step_tol:
            logger.debug("cox.converged", iterations=it, theta=theta.tolist())
            return NewtonResult(theta, A, psi, it, True)

        base = float(np.linalg.norm(psi))
        scale = 1.0
        for _ in range(opts.max_halvings + 1):
            cand = theta + scale * step
            cand_psi, cand_agg = evaluate(cand)
            if float(np.linalg.norm(cand_psi)) <= base:
                break
            scale *= 0.5
        theta, psi, agg = cand, cand_psi, cand_agg

        if _inf(theta) > opts.divergence_bound:
            raise DivergenceError(
                f"|theta| exceeded {opts.divergence_bound} at iteration {it}", theta, it
            )

    raise NonConvergenceError(
        f"Newton did not converge in {opts.max_iter} iterations (||score||={_inf(psi):.3g})",
        theta, opts.max_iter,
    )


# ─── BASELINE & VARIANCE ───────────────────────────────────

def _breslow_from(table: SegmentTable, agg: RiskAggregates) -> np.ndarray:
    c = table.event_weight_sums(table.omega_y)
    inc = np.zeros(table.n_events)
    act = agg.active
    inc[act] = c[act] / (table.n * agg.d0[act]) * np.exp(-agg.shift)
    return inc


def breslow_baseline(cohort: CohortLike, theta_hat: Sequence[float] | np.ndarray, skip_empty: bool = False) -> StepFunction:
    """dLambda0(t_k) = [sum_j Omega_j Delta_j 1(Y_j = t_k)] / [n D0(t_k)]."""
    table = as_table(cohort)
    th = as_theta(theta_hat, table.d)
    agg = risk_aggregates(table, th, second_order=False, skip_empty=skip_empty)
    return StepFunction(table.times.copy(), _breslow_from(table, agg))


def influence(table: SegmentTable, theta_hat: np.ndarray, baseline: StepFunction, skip_empty: bool = False) -> np.ndarray:
    """
    Per retained subject:
      Omega_i(Y_i){Z_i(Y_i) - eta(Y_i)}Delta_i
        - sum_k W_i(t_k){Z_i(t_k) - eta(t_k)} exp(theta'Z_i(t_k)) 1(Y_i >= t_k) dLambda0(t_k)
    """
    agg = risk_aggregates(table, theta_hat, second_order=False, skip_empty=skip_empty)
    eta = agg.eta
    dlam = np.where(agg.active, baseline.increments, 0.0)

    m = table.n_retained
    psi = np.zeros((m, table.d))
    ev = np.flatnonzero(table.event_index >= 0)
    k = table.event_index[ev]
    keep = agg.active[k]
    ev, k = ev[keep], k[keep]
    psi[ev] = table.omega_y[ev, None] * (table.z_y[ev] - eta[k])

    cum_lam = prefix(dlam)
    cum_lam_eta = prefix(dlam[:, None] * eta)
    lam_sum = cum_lam[table.hi] - cum_lam[table.lo]
    lam_eta_sum = cum_lam_eta[table.hi] - cum_lam_eta[table.lo]
    rel = table.w * np.exp(table.z @ theta_hat)
    comp = rel[:, None] * (table.z * lam_sum[:, None] - lam_eta_sum)
    psi -= subject_sum(table.owner, comp, m)
    return psi


def sandwich_variance(
    cohort: CohortLike,
    theta_hat: Sequence[float] | np.ndarray,
    baseline: Optional[StepFunction] = None,
    skip_empty: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(A, B, cov) with A = -Jacobian(theta_hat), B = mean of psi psi'."""
    table = as_table(cohort)
    th = as_theta(theta_hat, table.d)
    if baseline is None:
        baseline = breslow_baseline(table, th, skip_empty=skip_empty)
    A = -score_jacobian(table, th, skip_empty=skip_empty)
    if np.linalg.matrix_rank(A) < table.d:
        raise SingularMatrixError("Information matrix A is singular at theta_hat")
    psi = influence(table, th, baseline, skip_empty=skip_empty)
    B, cov = sandwich_cov(A, psi, table.n)
    return A, B, cov


# ─── WRAPPER ───────────────────────────────────────────────

def fit_cox(cohort: Cohort, options: Optional[FitOptions] = None, scheme: Optional[str] = None) -> CoxFitResult:
    """Validate, solve, baseline, sandwich."""
    opts = options or FitOptions()
    problems = validate_cohort(cohort)
    if problems:
        first = problems[0]
        raise ConfigurationError(f"Invalid cohort ({len(problems)} violations): {first.code}: {first.message}")

    table = as_table(cohort)
    sol = newton_solve(table, options=opts)
    baseline = breslow_baseline(table, sol.theta_hat, skip_empty=opts.skip_empty_risk_sets)
    psi = influence(table, sol.theta_hat, baseline, skip_empty=opts.skip_empty_risk_sets)
    B, cov = sandwich_cov(sol.A, psi, table.n)

    result = CoxFitResult(
        model="cox",
        theta_hat=sol.theta_hat,
        A=sol.A,
        B=B,
        cov=cov,
        n=table.n,
        scheme=scheme,
        confidence_level=opts.confidence_level,
        iterations=sol.iterations,
        converged=sol.converged,
        baseline=baseline,
    )
    logger.debug("cox.fitted", theta=result.theta_hat.tolist(), se=result.se.tolist(), iterations=sol.iterations)
    return result
