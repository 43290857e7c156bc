"""
CaseCohort v1.0 - Covariate Paths
==================================
Piecewise-constant, right-continuous functions of time.
Carry time-dependent covariates Z(t) and weight processes Omega(t), W(t).

A path with breakpoints t_0=0 < t_1 < ... < t_{k-1} takes values[j] on
[t_j, t_{j+1}) and values[-1] on [t_{k-1}, inf).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from src.errors import MaskedCovariateError, PathDomainError

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class CovariatePath:
    """Step function of time with vector values (dimension d)."""

    breakpoints: np.ndarray
    values: np.ndarray
    masked: bool = False

    def __post_init__(self) -> None:
        bp = np.array(self.breakpoints, dtype=float).reshape(-1)
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 0:
            vals = vals.reshape(1, 1)
        elif vals.ndim == 1:
            # one scalar per segment
            vals = vals.reshape(-1, 1)
        if vals.ndim != 2:
            raise ValueError(f"values must be 2-D (segments x d), got shape {vals.shape}")

        if bp.size == 0:
            raise ValueError("CovariatePath needs at least one breakpoint")
        if bp[0] != 0.0:
            raise ValueError(f"First breakpoint must be 0, got {bp[0]}")
        if bp.size > 1 and np.any(np.diff(bp) <= 0):
            raise ValueError("Breakpoints must be strictly increasing")
        if not np.all(np.isfinite(bp)):
            raise ValueError("Breakpoints must be finite")
        if vals.shape[0] != bp.size:
            raise ValueError(
                f"values count ({vals.shape[0]}) != breakpoints count ({bp.size})"
            )
        if vals.shape[1] < 1:
            raise ValueError("Dimension must be a positive integer")
        if not self.masked and not np.all(np.isfinite(vals)):
            raise ValueError("Path values must be finite")

        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    # ─── CONSTRUCTORS ──────────────────────────────────────

    @classmethod
    def constant(cls, value: ArrayLike) -> CovariatePath:
        vec = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(np.zeros(1), vec.reshape(1, -1))

    @classmethod
    def from_steps(cls, steps: Iterable[tuple[float, ArrayLike]]) -> CovariatePath:
        """Build from [(t0=0, value0), (t1, value1), ...]."""
        steps = list(steps)
        times = [float(t) for t, _ in steps]
        vals = [np.atleast_1d(np.asarray(v, dtype=float)) for _, v in steps]
        return cls(np.array(times), np.vstack(vals))

    @classmethod
    def masked_path(cls, d: int) -> CovariatePath:
        """Sentinel for covariates that were never collected."""
        return cls(np.zeros(1), np.full((1, d), np.nan), masked=True)

    # ─── PROPERTIES ────────────────────────────────────────

    @property
    def dimension(self) -> int:
        return int(self.values.shape[1])

    @property
    def n_segments(self) -> int:
        return int(self.breakpoints.size)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        self._guard()
        return self.values.min(axis=0), self.values.max(axis=0)

    def total_variation(self) -> np.ndarray:
        self._guard()
        if self.n_segments == 1:
            return np.zeros(self.dimension)
        return np.abs(np.diff(self.values, axis=0)).sum(axis=0)

    def _guard(self) -> None:
        if self.masked:
            raise MaskedCovariateError("Covariates of an unobserved subject cannot be read")

    def __call__(self, t: float) -> np.ndarray:
        return path_eval(self, t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CovariatePath):
            return NotImplemented
        if self.masked or other.masked:
            return (
                self.masked == other.masked
                and self.dimension == other.dimension
            )
        return (
            np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        if self.masked:
            return f"CovariatePath(masked, d={self.dimension})"
        steps = ", ".join(
            f"[{t:g}:{v[0]:g}]" if v.size == 1 else f"[{t:g}:{v.tolist()}]"
            for t, v in zip(self.breakpoints, self.values)
        )
        return f"CovariatePath({steps})"


# ─── EVALUATION ─────────────────────────────────────────────

def path_eval(path: CovariatePath, t: float) -> np.ndarray:
    """Value of the segment containing t (right-continuous)."""
    path._guard()
    t = float(t)
    if not t >= 0.0:
        raise PathDomainError(f"Path evaluated at negative or NaN time t={t}")
    idx = int(np.searchsorted(path.breakpoints, t, side="right")) - 1
    return path.values[idx].copy()


def path_eval_many(path: CovariatePath, times: ArrayLike) -> np.ndarray:
    """Vectorized path_eval; returns (len(times), d)."""
    path._guard()
    ts = np.asarray(times, dtype=float).reshape(-1)
    if ts.size and not np.all(ts >= 0.0):
        raise PathDomainError("Path evaluated at negative or NaN time")
    idx = np.searchsorted(path.breakpoints, ts, side="right") - 1
    return path.values[idx]


def path_integrate(
    path: CovariatePath,
    a: float,
    b: float,
    weightfn: Optional[CovariatePath] = None,
) -> np.ndarray:
    """
    Exact integral of path (times weightfn, if given) over [a, b].

    Segment-by-segment on the merged breakpoint set; no quadrature.
    weightfn must have dimension 1 or the same dimension as path.
    """
    a, b = float(a), float(b)
    if a < 0.0:
        raise PathDomainError(f"Integration start must be >= 0, got {a}")
    if a > b:
        raise PathDomainError(f"Integration bounds reversed: a={a} > b={b}")
    path._guard()
    if weightfn is not None:
        weightfn._guard()
    if a == b:
        return np.zeros(path.dimension)

    cuts = [path.breakpoints]
    if weightfn is not None:
        cuts.append(weightfn.breakpoints)
    inner = np.unique(np.concatenate(cuts))
    inner = inner[(inner > a) & (inner < b)]
    grid = np.concatenate(([a], inner, [b]))

    starts = grid[:-1]
    widths = np.diff(grid)
    vals = path_eval_many(path, starts)
    if weightfn is not None:
        vals = vals * path_eval_many(weightfn, starts)
    return (vals * widths[:, None]).sum(axis=0)


# ─── COMBINATORS ────────────────────────────────────────────

def merge_breakpoints(*paths: CovariatePath) -> np.ndarray:
    """Sorted union of breakpoints of all paths."""
    return np.unique(np.concatenate([p.breakpoints for p in paths]))


def refine(path: CovariatePath, times: ArrayLike) -> CovariatePath:
    """Same function re-expressed with extra (redundant) breakpoints."""
    path._guard()
    extra = np.asarray(times, dtype=float).reshape(-1)
    if extra.size and np.any(extra < 0):
        raise PathDomainError("Refinement times must be >= 0")
    grid = np.unique(np.concatenate([path.breakpoints, extra]))
    return CovariatePath(grid, path_eval_many(path, grid))


def path_product(path: CovariatePath, other: CovariatePath) -> CovariatePath:
    """Pointwise product; `other` may have dimension 1 (broadcast)."""
    path._guard()
    other._guard()
    if other.dimension not in (1, path.dimension):
        raise ValueError(
            f"Cannot multiply paths of dimensions {path.dimension} and {other.dimension}"
        )
    grid = merge_breakpoints(path, other)
    return CovariatePath(grid, path_eval_many(path, grid) * path_eval_many(other, grid))


def simplify(path: CovariatePath) -> CovariatePath:
    """Drop breakpoints whose value equals the previous segment's."""
    if path.masked or path.n_segments == 1:
        return path
    keep = np.ones(path.n_segments, dtype=bool)
    keep[1:] = np.any(path.values[1:] != path.values[:-1], axis=1)
    return CovariatePath(path.breakpoints[keep], path.values[keep])
