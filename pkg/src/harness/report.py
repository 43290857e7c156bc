"""
CaseCohort v1.0 - Study Reports
================================
Report models and emitters (json, csv, markdown table). Floats are written
with 6 significant digits and fields keep their declared order, so a JSON
report parses back into an equal (rounded) report.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence, Union

import pandas as pd
import structlog
from pydantic import BaseModel, Field

from src.errors import ConfigurationError

logger = structlog.get_logger()

SIGNIFICANT_DIGITS = 6


class CoefficientSummary(BaseModel):
    index: int
    theta0: float
    mean: Optional[float] = None
    bias: Optional[float] = None
    sd: Optional[float] = None
    mean_se: Optional[float] = None
    se_ratio: Optional[float] = None
    coverage: Optional[float] = Field(default=None, ge=0.0, le=1.0)


class ExcludedReplicate(BaseModel):
    """A replicate left out of the moments; rerun it with its seed."""
    index: int
    seed: int
    status: str
    reason: str = ""


class StudyReport(BaseModel):
    """
    Summary of one (study, scheme) run.

    runtime_seconds is wall-clock time. It is the one field that differs
    between reruns with the same seed; comparable() and the csv/markdown
    tables leave it out.
    """

    name: str
    scheme: str
    family: str
    n: int
    replications: int
    seed: int
    confidence_level: float
    coefficients: list[CoefficientSummary]
    n_ok: int
    n_nonconverged: int = 0
    n_diverged: int = 0
    n_failed: int = 0
    excluded: list[ExcludedReplicate] = Field(default_factory=list)
    unstable: bool = False
    runtime_seconds: float = 0.0

    def comparable(self) -> dict:
        """Dump without runtime_seconds; equal for equal seeds."""
        return self.model_dump(exclude={"runtime_seconds"})


ReportLike = Union[StudyReport, Sequence[StudyReport]]

TABLE_COLUMNS = [
    "scheme",
    "family",
    "n",
    "replications",
    "coefficient",
    "theta0",
    "mean",
    "bias",
    "sd",
    "mean_se",
    "se_ratio",
    "coverage",
    "n_ok",
    "n_excluded",
    "unstable",
]


# ─── ROUNDING ───────────────────────────────────────────────

def _sig(x: Optional[float]) -> Optional[float]:
    if x is None:
        return None
    return float(f"{x:.{SIGNIFICANT_DIGITS}g}")


def round_report(report: StudyReport) -> StudyReport:
    """Copy with every float cut to the emitted precision."""
    coefs = [
        c.model_copy(update={
            name: _sig(getattr(c, name))
            for name in ("theta0", "mean", "bias", "sd", "mean_se", "se_ratio", "coverage")
        })
        for c in report.coefficients
    ]
    return report.model_copy(update={
        "coefficients": coefs,
        "confidence_level": _sig(report.confidence_level),
        "runtime_seconds": _sig(report.runtime_seconds),
    })


def _as_list(reports: ReportLike) -> list[StudyReport]:
    return [reports] if isinstance(reports, StudyReport) else list(reports)


# ─── TABLES ────────────────────────────────────────────────

def reports_to_frame(reports: ReportLike) -> pd.DataFrame:
    """One row per (scheme, coefficient)."""
    rows = []
    for report in _as_list(reports):
        r = round_report(report)
        for c in r.coefficients:
            rows.append({
                "scheme": r.scheme,
                "family": r.family,
                "n": r.n,
                "replications": r.replications,
                "coefficient": c.index,
                "theta0": c.theta0,
                "mean": c.mean,
                "bias": c.bias,
                "sd": c.sd,
                "mean_se": c.mean_se,
                "se_ratio": c.se_ratio,
                "coverage": c.coverage,
                "n_ok": r.n_ok,
                "n_excluded": len(r.excluded),
                "unstable": r.unstable,
            })
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def _md_cell(value) -> str:
    if value is None or (isinstance(value, float) and pd.isna(value)):
        return ""
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    return str(value)


def render_markdown(reports: ReportLike) -> str:
    frame = reports_to_frame(reports)
    lines = [
        "| " + " | ".join(TABLE_COLUMNS) + " |",
        "|" + "|".join("---" for _ in TABLE_COLUMNS) + "|",
    ]
    for row in frame.itertuples(index=False):
        lines.append("| " + " | ".join(_md_cell(v) for v in row) + " |")
    return "\n".join(lines) + "\n"


# ─── EMIT / LOAD ───────────────────────────────────────────

def emit_report(reports: ReportLike, path: Union[str, Path], fmt: str = "json") -> Path:
    """Write json, csv or md. A single report is written as a JSON object, several as a list."""
    target = Path(path)
    fmt = {"markdown": "md", "markdown-table": "md"}.get(fmt, fmt)
    if fmt not in ("json", "csv", "md"):
        raise ConfigurationError(f"Unknown report format: {fmt!r}")

    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            if isinstance(reports, StudyReport):
                payload = round_report(reports).model_dump(mode="json")
            else:
                payload = [round_report(r).model_dump(mode="json") for r in reports]
            target.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        elif fmt == "csv":
            reports_to_frame(reports).to_csv(target, index=False)
        else:
            target.write_text(render_markdown(reports), encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot write report to {target}: {e}") from e

    logger.info("harness.report_written", path=str(target), format=fmt)
    return target


def load_report_json(path: Union[str, Path]) -> Union[StudyReport, list[StudyReport]]:
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    if isinstance(payload, list):
        return [StudyReport.model_validate(p) for p in payload]
    return StudyReport.model_validate(payload)
