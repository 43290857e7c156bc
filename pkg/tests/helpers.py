"""Cohort builders shared by the test modules."""

from __future__ import annotations

from typing import Optional

import numpy as np

from src.survival.cohort import Cohort, Subject
from src.survival.paths import CovariatePath


def make_cohort(rows, tau: Optional[float] = None) -> Cohort:
    """Full-data cohort from (y, delta, z) rows; z may be a scalar, a vector or a CovariatePath."""
    subjects = []
    d = None
    for i, (y, delta, z) in enumerate(rows):
        path = z if isinstance(z, CovariatePath) else CovariatePath.constant(z)
        d = path.dimension
        subjects.append(Subject(id=i, y=y, delta=delta, z=path))
    horizon = tau if tau is not None else max(r[0] for r in rows)
    return Cohort(tuple(subjects), horizon, d)


def random_cohort(rng: np.random.Generator, n: int, d: int = 1, switching: bool = False) -> Cohort:
    """Small continuous-time cohort with at least one event and some censoring."""
    rows = []
    for _ in range(n):
        y = float(rng.uniform(0.1, 5.0))
        delta = int(rng.random() < 0.7)
        if switching and rng.random() < 0.5:
            t = float(rng.uniform(0.05, y))
            z = CovariatePath.from_steps([(0.0, rng.normal(size=d)), (t, rng.normal(size=d))])
        else:
            z = rng.normal(size=d)
        rows.append((y, delta, z))
    if not any(r[1] for r in rows):
        y, _, z = rows[0]
        rows[0] = (y, 1, z)
    return make_cohort(rows, tau=5.0)


def bisect(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of a scalar decreasing-or-increasing function with a sign change on [lo, hi]."""
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
