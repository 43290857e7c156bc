"""
CaseCohort v1.0 - Segment Table
================================
Flat representation of a weighted cohort shared by both fitters.

Every retained (observed) subject is cut into segments on the merged
breakpoints of Z, Omega and W, clipped to [0, Y]. Each segment carries its
constant Z, W and Omega values plus the half-open range [lo, hi) of event
times it keeps at risk. The last segment of a subject is closed at Y (it may
have zero length when a breakpoint sits exactly at Y); it still holds the
values used by the risk set at t = Y.

Risk-set sums over event times are range additions: a difference array per
column, then a cumulative sum. No subject x event-time matrix is formed.

Masked subjects carry zero weights and are dropped from the table, but n
keeps counting them: every average is over the whole cohort.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from src.errors import ConfigurationError, EstimationError, SingularMatrixError
from src.survival.cohort import Cohort
from src.survival.paths import merge_breakpoints, path_eval, path_eval_many


@dataclass(frozen=True)
class SegmentTable:
    n: int
    d: int

    # per retained subject
    ids: np.ndarray
    y: np.ndarray
    delta: np.ndarray
    z_y: np.ndarray        # (m, d) Z_i(Y_i)
    omega_y: np.ndarray    # Omega_i(Y_i)
    w_y: np.ndarray        # W_i(Y_i)
    event_index: np.ndarray  # position of Y_i in `times`, -1 if censored

    # distinct event times
    times: np.ndarray

    # per segment
    owner: np.ndarray      # row into the per-subject arrays
    start: np.ndarray
    end: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    z: np.ndarray          # (S, d)
    w: np.ndarray
    omega: np.ndarray

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    @property
    def n_retained(self) -> int:
        return int(self.ids.size)

    def event_weight_sums(self, weights: np.ndarray) -> np.ndarray:
        """Sum of per-subject `weights` over the failures at each event time."""
        mask = self.event_index >= 0
        return np.bincount(
            self.event_index[mask], weights=weights[mask], minlength=self.n_events
        ).astype(float)


def range_sum(lo: np.ndarray, hi: np.ndarray, values: np.ndarray, size: int) -> np.ndarray:
    """
    out[k] = sum of values[s] over segments s with lo[s] <= k < hi[s].

    `values` is (S,) or (S, ...); the trailing shape is kept.
    """
    trailing = values.shape[1:]
    flat = values.reshape(values.shape[0], int(np.prod(trailing)))
    out = np.empty((size, flat.shape[1]))
    for c in range(flat.shape[1]):
        col = flat[:, c]
        diff = np.bincount(lo, weights=col, minlength=size + 1)[: size + 1]
        diff = diff - np.bincount(hi, weights=col, minlength=size + 1)[: size + 1]
        out[:, c] = np.cumsum(diff)[:size]
    return out.reshape((size,) + trailing)


def subject_sum(owner: np.ndarray, values: np.ndarray, size: int) -> np.ndarray:
    """Accumulate segment rows into their owning subjects."""
    trailing = values.shape[1:]
    flat = values.reshape(values.shape[0], int(np.prod(trailing)))
    out = np.empty((size, flat.shape[1]))
    for c in range(flat.shape[1]):
        out[:, c] = np.bincount(owner, weights=flat[:, c], minlength=size)
    return out.reshape((size,) + trailing)


def prefix(values: np.ndarray) -> np.ndarray:
    """Cumulative sum with a leading zero row, so sums over [lo, hi) are c[hi] - c[lo]."""
    zero = np.zeros((1,) + values.shape[1:])
    return np.concatenate([zero, np.cumsum(values, axis=0)], axis=0)


def build_segment_table(cohort: Cohort) -> SegmentTable:
    """Flatten the retained subjects of a weighted cohort."""
    retained = [s for s in cohort.subjects if s.observed]
    d = cohort.d
    m = len(retained)

    ids = np.array([s.id for s in retained], dtype=int)
    y = np.array([s.y for s in retained], dtype=float)
    delta = np.array([s.delta for s in retained], dtype=int)
    z_y = np.zeros((m, d))
    omega_y = np.zeros(m)
    w_y = np.zeros(m)

    owners, starts, ends = [], [], []
    zs, ws, oms = [], [], []

    for i, s in enumerate(retained):
        if s.z.dimension != d:
            raise EstimationError(f"Subject {s.id}: covariate dimension {s.z.dimension} != {d}")
        if s.z.n_segments == 1 and s.omega.n_segments == 1 and s.w.n_segments == 1:
            grid = np.zeros(1)
            zv = s.z.values
            wv = s.w.values[:, 0]
            ov = s.omega.values[:, 0]
        else:
            grid = merge_breakpoints(s.z, s.omega, s.w)
            grid = grid[grid <= s.y]
            zv = path_eval_many(s.z, grid)
            wv = path_eval_many(s.w, grid)[:, 0]
            ov = path_eval_many(s.omega, grid)[:, 0]

        z_y[i] = path_eval(s.z, s.y)
        omega_y[i] = path_eval(s.omega, s.y)[0]
        w_y[i] = path_eval(s.w, s.y)[0]

        owners.append(np.full(grid.size, i))
        starts.append(grid)
        ends.append(np.r_[grid[1:], s.y])
        zs.append(zv)
        ws.append(wv)
        oms.append(ov)

    if m:
        owner = np.concatenate(owners)
        start = np.concatenate(starts)
        end = np.concatenate(ends)
        z = np.vstack(zs)
        w = np.concatenate(ws)
        omega = np.concatenate(oms)
    else:
        owner = np.zeros(0, dtype=int)
        start = end = w = omega = np.zeros(0)
        z = np.zeros((0, d))

    is_event = delta == 1
    times = np.unique(y[is_event])
    event_index = np.full(m, -1, dtype=int)
    event_index[is_event] = np.searchsorted(times, y[is_event])

    # last segment of each subject is closed at Y
    last = np.r_[owner[1:] != owner[:-1], True] if owner.size else np.zeros(0, dtype=bool)
    lo = np.searchsorted(times, start, side="left")
    hi = np.where(
        last,
        np.searchsorted(times, end, side="right"),
        np.searchsorted(times, end, side="left"),
    )

    return SegmentTable(
        n=cohort.n,
        d=d,
        ids=ids,
        y=y,
        delta=delta,
        z_y=z_y,
        omega_y=omega_y,
        w_y=w_y,
        event_index=event_index,
        times=times,
        owner=owner,
        start=start,
        end=end,
        lo=lo.astype(int),
        hi=hi.astype(int),
        z=z,
        w=w,
        omega=omega,
    )


CohortLike = Union[Cohort, SegmentTable]


def as_table(data: CohortLike) -> SegmentTable:
    return data if isinstance(data, SegmentTable) else build_segment_table(data)


def as_theta(theta, d: int) -> np.ndarray:
    th = np.asarray(theta, dtype=float).reshape(-1)
    if th.size != d:
        raise ConfigurationError(f"theta has length {th.size}, cohort has d={d}")
    return th


def sandwich_cov(A: np.ndarray, psi: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """B = (1/n) sum psi psi' and cov = A^-1 B A^-T / n."""
    B = psi.T @ psi / n
    try:
        a_inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"Slope matrix A is singular: {e}")
    cov = a_inv @ B @ a_inv.T / n
    return B, 0.5 * (cov + cov.T)
