"""
CaseCohort v1.0 - Weighted Additive Hazards Fitter
===================================================
Estimating function for lambda(t | Z) = lambda0(t) + theta' Z(t):

    Psi(theta) = (1/n) sum_i [ Omega_i(Y_i){Z_i(Y_i) - eta~(Y_i)}Delta_i
                              - int_0^Y_i Omega_i(t){Z_i(t) - eta~(t)} theta'Z_i(t) dt ]

with the theta-free nuisance eta~(t) = sum W Z 1(Y >= t) / sum W 1(Y >= t).
Psi is affine in theta, Psi(theta) = U - A theta, so theta_hat = A^-1 U.

eta~ is a step function on the global grid (every segment boundary and
every Y). Its running integrals L(t) = int 1, H(t) = int eta~ and
G(t) = int eta~ eta~' are piecewise linear and known exactly at the grid
nodes, so every time integral is a difference of two node values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import structlog

from src.errors import ConfigurationError, EmptyRiskSetError, SingularMatrixError
from src.estimators.cox import risk_aggregates
from src.estimators.results import AdditiveFitResult, FitOptions, JumpDriftBaseline
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

# relative size below which the slope matrix counts as singular
_SINGULAR_RTOL = 1e-10


# ─── NUISANCE ───────────────────────────────────────────────

def eta_tilde(cohort: Cohort, t: float) -> np.ndarray:
    """sum W(t) Z(t) 1(Y >= t) / sum W(t) 1(Y >= t), straight from the paths."""
    t = float(t)
    num = np.zeros(cohort.d)
    den = 0.0
    for s in cohort.subjects:
        if not s.observed or s.y < t:
            continue
        w = path_eval(s.w, t)[0]
        if w == 0.0:
            continue
        num += w * path_eval(s.z, t)
        den += w
    if not den > 0.0:
        raise EmptyRiskSetError(t)
    return num / den


@dataclass(frozen=True)
class TimeIntegrals:
    """Running integrals of eta~ at the nodes of the global grid."""

    grid: np.ndarray
    eta: np.ndarray   # (M-1, d) value on [grid[m], grid[m+1])
    L: np.ndarray     # (M,)
    H: np.ndarray     # (M, d)
    G: np.ndarray     # (M, d, d)
    seg_a: np.ndarray  # node index of each segment start
    seg_b: np.ndarray  # node index of each segment end


def time_integrals(table: SegmentTable, skip_empty: bool = False) -> TimeIntegrals:
    grid = np.unique(np.concatenate([[0.0], table.start, table.end]))
    seg_a = np.searchsorted(grid, table.start)
    seg_b = np.searchsorted(grid, table.end)
    n_int = grid.size - 1
    widths = np.diff(grid)

    s0 = range_sum(seg_a, seg_b, table.w, n_int)
    s1 = range_sum(seg_a, seg_b, table.w[:, None] * table.z, n_int)
    demand = range_sum(seg_a, seg_b, table.omega, n_int)

    active = s0 > 0.0
    empty = np.flatnonzero(~active & (demand > 0.0) & (widths > 0.0))
    if empty.size and not skip_empty:
        raise EmptyRiskSetError(grid[empty[0]])

    eta = np.zeros((n_int, table.d))
    eta[active] = s1[active] / s0[active, None]
    live = np.where(active, widths, 0.0)

    L = prefix(live)
    H = prefix(live[:, None] * eta)
    G = prefix(live[:, None, None] * eta[:, :, None] * eta[:, None, :])
    return TimeIntegrals(grid, eta, L, H, G, seg_a, seg_b)


# ─── CLOSED FORM ───────────────────────────────────────────

@dataclass
class LinearSystem:
    """Psi(theta) = U - A theta."""

    A: np.ndarray
    U: np.ndarray
    event_eta: np.ndarray   # eta~ at each event time
    event_active: np.ndarray
    integrals: TimeIntegrals


def linear_system(table: SegmentTable, skip_empty: bool = False) -> LinearSystem:
    ti = time_integrals(table, skip_empty=skip_empty)
    dL = ti.L[ti.seg_b] - ti.L[ti.seg_a]
    dH = ti.H[ti.seg_b] - ti.H[ti.seg_a]

    om = table.omega
    zz = table.z[:, :, None] * table.z[:, None, :]
    hz = dH[:, :, None] * table.z[:, None, :]
    A = (om[:, None, None] * (zz * dL[:, None, None] - hz)).sum(axis=0) / table.n

    # eta~ at event times uses the closed risk set: the theta = 0 Cox ratio
    agg = risk_aggregates(table, np.zeros(table.d), second_order=False, skip_empty=skip_empty)
    event_eta = agg.eta
    ev = np.flatnonzero(table.event_index >= 0)
    k = table.event_index[ev]
    keep = agg.active[k]
    ev, k = ev[keep], k[keep]
    U = (table.omega_y[ev, None] * (table.z_y[ev] - event_eta[k])).sum(axis=0) / table.n

    return LinearSystem(A=A, U=U, event_eta=event_eta, event_active=agg.active, integrals=ti)


def _check_slope(table: SegmentTable, A: np.ndarray) -> None:
    scale = np.abs(table.z).max() ** 2 * np.abs(table.end - table.start).sum() / max(table.n, 1) if table.z.size else 0.0
    sv = np.linalg.svd(A, compute_uv=False) if np.all(np.isfinite(A)) else np.array([np.nan])
    if not np.all(np.isfinite(sv)) or sv.min() <= _SINGULAR_RTOL * max(scale, 1e-300):
        raise SingularMatrixError(
            f"Additive slope matrix is singular (smallest singular value {sv.min():.3g})"
        )


@dataclass
class ClosedFormResult:
    theta_hat: np.ndarray
    A: np.ndarray
    U: np.ndarray


def solve_closed_form(cohort: CohortLike, skip_empty: bool = False) -> ClosedFormResult:
    """theta_hat = A^-1 U, exact."""
    table = as_table(cohort)
    system = linear_system(table, skip_empty=skip_empty)
    _check_slope(table, system.A)
    theta = np.linalg.solve(system.A, system.U)
    logger.debug("additive.solved", theta=theta.tolist())
    return ClosedFormResult(theta_hat=theta, A=system.A, U=system.U)


def additive_score(cohort: CohortLike, theta: Sequence[float] | np.ndarray, skip_empty: bool = False) -> np.ndarray:
    """Psi_n(theta) = U - A theta."""
    table = as_table(cohort)
    th = as_theta(theta, table.d)
    system = linear_system(table, skip_empty=skip_empty)
    return system.U - system.A @ th


# ─── BASELINE ──────────────────────────────────────────────

def _baseline_from(table: SegmentTable, system: LinearSystem, theta_hat: np.ndarray) -> JumpDriftBaseline:
    agg_d0 = range_sum(table.lo, table.hi, table.w, table.n_events)
    num = table.event_weight_sums(table.w_y)
    jumps = np.zeros(table.n_events)
    pos = agg_d0 > 0.0
    jumps[pos] = num[pos] / agg_d0[pos]
    ti = system.integrals
    drift = -(ti.H @ theta_hat)
    return JumpDriftBaseline(table.times.copy(), jumps, ti.grid.copy(), drift)


def additive_baseline(cohort: CohortLike, theta_hat: Sequence[float] | np.ndarray, skip_empty: bool = False) -> JumpDriftBaseline:
    """
    Jumps sum W Delta 1(Y = t_k) / sum W 1(Y >= t_k) at event times, plus the
    drift -theta_hat' int_0^t eta~(s) ds between them.
    """
    table = as_table(cohort)
    th = as_theta(theta_hat, table.d)
    return _baseline_from(table, linear_system(table, skip_empty=skip_empty), th)


# ─── VARIANCE ──────────────────────────────────────────────

def additive_influence(
    table: SegmentTable,
    system: LinearSystem,
    theta_hat: np.ndarray,
    baseline: JumpDriftBaseline,
) -> np.ndarray:
    """
    psi_i = Omega_i(Y_i){Z_i - eta~}(Y_i) Delta_i
            - int {Omega_i theta'Z_i dt + W_i dLambda0}{Z_i - eta~} 1(Y_i >= t)

    dLambda0 splits into jumps at event times and the drift -theta'eta~ dt.
    """
    ti = system.integrals
    m = table.n_retained
    psi = np.zeros((m, table.d))

    ev = np.flatnonzero(table.event_index >= 0)
    k = table.event_index[ev]
    keep = system.event_active[k]
    ev, k = ev[keep], k[keep]
    psi[ev] = table.omega_y[ev, None] * (table.z_y[ev] - system.event_eta[k])

    dL = ti.L[ti.seg_b] - ti.L[ti.seg_a]
    dH = ti.H[ti.seg_b] - ti.H[ti.seg_a]
    dG = ti.G[ti.seg_b] - ti.G[ti.seg_a]
    z = table.z
    lin = z @ theta_hat

    # Omega theta'Z (Z - eta~) dt
    hazard_part = (table.omega * lin)[:, None] * (z * dL[:, None] - dH)

    # W (Z - eta~) at the jumps
    jumps = np.where(system.event_active, baseline.jumps, 0.0)
    cum_j = prefix(jumps)
    cum_je = prefix(jumps[:, None] * system.event_eta)
    jump_part = table.w[:, None] * (
        z * (cum_j[table.hi] - cum_j[table.lo])[:, None] - (cum_je[table.hi] - cum_je[table.lo])
    )

    # W (Z - eta~) (-theta'eta~) dt
    drift_part = -table.w[:, None] * (z * (dH @ theta_hat)[:, None] - dG @ theta_hat)

    psi -= subject_sum(table.owner, hazard_part + jump_part + drift_part, m)
    return psi


def additive_sandwich(
    cohort: CohortLike,
    theta_hat: Sequence[float] | np.ndarray,
    baseline: Optional[JumpDriftBaseline] = None,
    skip_empty: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(A, B, cov) with cov = A^-1 B A^-T / n."""
    table = as_table(cohort)
    th = as_theta(theta_hat, table.d)
    system = linear_system(table, skip_empty=skip_empty)
    _check_slope(table, system.A)
    if baseline is None:
        baseline = _baseline_from(table, system, th)
    psi = additive_influence(table, system, th, baseline)
    B, cov = sandwich_cov(system.A, psi, table.n)
    return system.A, B, cov


# ─── WRAPPER ───────────────────────────────────────────────

def fit_additive(cohort: Cohort, options: Optional[FitOptions] = None, scheme: Optional[str] = None) -> AdditiveFitResult:
    """Validate, closed form, baseline, sandwich."""
    opts = options or FitOptions()
    problems = validate_cohort(cohort)
    if problems:
        first = problems[0]
        raise ConfigurationError(f"Invalid cohort ({len(problems)} violations): {first.code}: {first.message}")

    table = as_table(cohort)
    skip = opts.skip_empty_risk_sets
    system = linear_system(table, skip_empty=skip)
    _check_slope(table, system.A)
    theta = np.linalg.solve(system.A, system.U)
    baseline = _baseline_from(table, system, theta)
    psi = additive_influence(table, system, theta, baseline)
    B, cov = sandwich_cov(system.A, psi, table.n)

    result = AdditiveFitResult(
        model="additive",
        theta_hat=theta,
        A=system.A,
        B=B,
        cov=cov,
        n=table.n,
        scheme=scheme,
        confidence_level=opts.confidence_level,
        baseline=baseline,
    )
    logger.debug("additive.fitted", theta=theta.tolist(), se=result.se.tolist())
    return result
