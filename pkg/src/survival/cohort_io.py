"""
CaseCohort v1.0 - Cohort CSV I/O
=================================
One row per (subject, segment):
    id, y, delta, stratum, r, pi, seg_start, z1..zd, omega, w, r_star, pi_star
Segments of a subject are contiguous and sorted. A JSON sidecar
(<stem>.json) carries tau and d. Masked subjects leave z cells empty.
r_star and pi_star are optional on read.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
import structlog

from src.errors import CohortFormatError
from src.survival.cohort import Cohort, Subject
from src.survival.paths import CovariatePath, merge_breakpoints, path_eval_many, simplify

logger = structlog.get_logger()

BASE_COLUMNS = ["id", "y", "delta", "stratum", "r", "pi", "seg_start"]
WEIGHT_COLUMNS = ["omega", "w"]
# two-phase complete-data indicator; empty when the design has none
PHASE_COLUMNS = ["r_star", "pi_star"]


def sidecar_path(csv_path: Union[str, Path]) -> Path:
    return Path(csv_path).with_suffix(".json")


def z_columns(d: int) -> list[str]:
    return [f"z{k + 1}" for k in range(d)]


def cohort_to_frame(cohort: Cohort) -> pd.DataFrame:
    """Flatten a cohort into the segment-row layout."""
    zc = z_columns(cohort.d)
    rows: list[dict] = []
    for s in cohort.subjects:
        paths = [s.omega, s.w] if s.z.masked else [s.z, s.omega, s.w]
        grid = merge_breakpoints(*paths)
        grid = grid[grid <= s.y]
        om = path_eval_many(s.omega, grid)[:, 0]
        wv = path_eval_many(s.w, grid)[:, 0]
        zv = None if s.z.masked else path_eval_many(s.z, grid)
        for j, t in enumerate(grid):
            row = {
                "id": s.id,
                "y": s.y,
                "delta": s.delta,
                "stratum": s.z_star,
                "r": s.r,
                "pi": s.pi,
                "seg_start": float(t),
            }
            for k, col in enumerate(zc):
                row[col] = np.nan if zv is None else float(zv[j, k])
            row["omega"] = float(om[j])
            row["w"] = float(wv[j])
            row["r_star"] = np.nan if s.r_star is None else s.r_star
            row["pi_star"] = np.nan if s.pi_star is None else s.pi_star
            rows.append(row)
    return pd.DataFrame(rows, columns=BASE_COLUMNS + zc + WEIGHT_COLUMNS + PHASE_COLUMNS)


def write_cohort_csv(cohort: Cohort, path: Union[str, Path]) -> Path:
    """Write CSV plus sidecar. Returns the CSV path."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = cohort_to_frame(cohort)
    frame.to_csv(target, index=False, float_format="%.17g")
    with open(sidecar_path(target), "w", encoding="utf-8") as f:
        json.dump({"tau": cohort.tau, "d": cohort.d}, f, indent=2)
    logger.info("cohort_io.written", path=str(target), subjects=cohort.n, rows=len(frame))
    return target


def _optional(row: pd.Series, column: str, cast):
    if column not in row.index or pd.isna(row[column]):
        return None
    return cast(row[column])


def frame_to_cohort(frame: pd.DataFrame, tau: float, d: int) -> Cohort:
    """Inverse of cohort_to_frame."""
    zc = z_columns(d)
    missing = [c for c in BASE_COLUMNS + zc + WEIGHT_COLUMNS if c not in frame.columns]
    if missing:
        raise CohortFormatError(f"Cohort CSV missing columns: {missing}")

    ids = frame["id"].to_numpy()
    # contiguous blocks
    starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
    if len(np.unique(ids)) != len(starts):
        raise CohortFormatError("Segments of a subject must be contiguous")

    bounds = np.r_[starts, len(frame)]
    subjects: list[Subject] = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        block = frame.iloc[lo:hi]
        first = block.iloc[0]
        seg = block["seg_start"].to_numpy(dtype=float)
        if seg[0] != 0.0 or np.any(np.diff(seg) <= 0):
            raise CohortFormatError(f"Subject {first['id']}: seg_start must start at 0 and increase")

        zvals = block[zc].to_numpy(dtype=float)
        observed = bool(np.all(np.isfinite(zvals)))
        if not observed and np.any(np.isfinite(zvals)):
            raise CohortFormatError(f"Subject {first['id']}: partially missing covariates")

        z = simplify(CovariatePath(seg, zvals)) if observed else CovariatePath.masked_path(d)
        omega = simplify(CovariatePath(seg, block["omega"].to_numpy(dtype=float)))
        w = simplify(CovariatePath(seg, block["w"].to_numpy(dtype=float)))

        subjects.append(Subject(
            id=int(first["id"]),
            y=float(first["y"]),
            delta=int(first["delta"]),
            z=z,
            z_star=str(first["stratum"]),
            r=int(first["r"]),
            pi=float(first["pi"]),
            omega=omega,
            w=w,
            observed=observed,
            r_star=_optional(first, "r_star", int),
            pi_star=_optional(first, "pi_star", float),
        ))
    return Cohort(tuple(subjects), tau, d)


def read_cohort_csv(path: Union[str, Path]) -> Cohort:
    """Read CSV and its JSON sidecar."""
    source = Path(path)
    side = sidecar_path(source)
    if not source.exists():
        raise CohortFormatError(f"Cohort CSV not found: {source}")
    if not side.exists():
        raise CohortFormatError(f"Cohort sidecar not found: {side}")

    try:
        with open(side, "r", encoding="utf-8") as f:
            meta = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise CohortFormatError(f"Cannot read sidecar {side}: {e}") from e
    try:
        tau, d = float(meta["tau"]), int(meta["d"])
    except (KeyError, TypeError, ValueError) as e:
        raise CohortFormatError(f"Sidecar {side} needs numeric 'tau' and 'd': {e}") from e

    try:
        frame = pd.read_csv(source, dtype={"stratum": str})
        cohort = frame_to_cohort(frame, tau, d)
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise CohortFormatError(f"Cannot parse cohort CSV {source}: {e}") from e
    logger.info("cohort_io.read", path=str(source), subjects=cohort.n, events=cohort.n_events)
    return cohort
