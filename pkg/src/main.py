"""
CaseCohort v1.0 - Main Entry Point
===================================
Command line: simulate, sample, validate, fit, mc.

    python -m src.main simulate --n 500 --theta0 0.7 --out data/cohort.csv
    python -m src.main sample --data data/cohort.csv --plan '{"pi": 0.3}' --scheme '{"kind": "ipw-kl"}' --out data/cc.csv
    python -m src.main fit --model cox --data data/cc.csv
    python -m src.main mc --config cox_ipw --format md --out output/cox_ipw.md --jobs 4

Exit codes: 0 success, 1 configuration or input error, 2 unstable scenario.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import structlog
from pydantic import ValidationError

from src.config.settings import get_settings

structlog.configure(
    processors=[
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.StackInfoRenderer(),
        structlog.dev.set_exc_info,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.dev.ConsoleRenderer(),
    ],
    wrapper_class=structlog.make_filtering_bound_logger(get_settings().log_level_number),
    context_class=dict,
    logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
    cache_logger_on_first_use=True,
)

from src.config.study_loader import load_study  # noqa: E402
from src.design.sampling import SamplingPlan, sample_subcohort  # noqa: E402
from src.design.weights import WeightScheme, build_weights  # noqa: E402
from src.errors import CaseCohortError, ConfigurationError  # noqa: E402
from src.estimators.additive import fit_additive  # noqa: E402
from src.estimators.cox import fit_cox  # noqa: E402
from src.estimators.results import FitOptions  # noqa: E402
from src.harness.report import emit_report, reports_to_frame  # noqa: E402
from src.harness.runner import compare_schemes, run_study, study_exit_code  # noqa: E402
from src.simulate.generator import simulate_cohort  # noqa: E402
from src.simulate.specs import CensoringSpec, CovariateGenerator, ModelSpec  # noqa: E402
from src.survival.cohort import validate_cohort  # noqa: E402
from src.survival.cohort_io import read_cohort_csv, write_cohort_csv  # noqa: E402

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNSTABLE = 2


# ─── ARGUMENT PARSING ──────────────────────────────────────

def _number(raw: str, what: str) -> float:
    try:
        return float(raw)
    except ValueError as e:
        raise ConfigurationError(f"{what}: expected a number, got {raw!r}") from e


def _floats(raw: str) -> list[float]:
    return [_number(x, "--theta0") for x in raw.split(",") if x.strip()]


def _json_block(raw: Optional[str]) -> dict[str, Any]:
    """Inline JSON object, or a path to a JSON file."""
    if raw is None:
        return {}
    text = raw.strip()
    if not text.startswith("{"):
        path = Path(text)
        if not path.exists():
            raise ConfigurationError(f"Expected a JSON object or a JSON file, got {raw!r}")
        text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Invalid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError("JSON block must be an object")
    return data


def _baseline(raw: str) -> list[tuple[float, float]]:
    """'1.0' or '0:0.5,1:1.0' (start:rate steps)."""
    if ":" not in raw:
        return [(0.0, _number(raw, "--baseline"))]
    steps = []
    for part in raw.split(","):
        start, sep, rate = part.partition(":")
        if not sep:
            raise ConfigurationError(f"--baseline: step {part!r} is not start:rate")
        steps.append((_number(start, "--baseline"), _number(rate, "--baseline")))
    return steps


def _censoring(raw: str) -> CensoringSpec:
    """JSON object, 'exponential:RATE', 'uniform:UPPER' or 'none'."""
    if raw.strip().startswith("{"):
        return CensoringSpec.model_validate(_json_block(raw))
    if raw == "none":
        return CensoringSpec(kind="exponential", rate=0.0)
    kind, _, value = raw.partition(":")
    if kind == "exponential":
        return CensoringSpec(kind="exponential", rate=_number(value or "0", "--censoring"))
    if kind == "uniform":
        return CensoringSpec(kind="uniform", upper=_number(value, "--censoring"))
    raise ConfigurationError(f"Unknown censoring {raw!r}")


def _covgen(raw: str, d: int) -> CovariateGenerator:
    if raw.strip().startswith("{"):
        data = _json_block(raw)
        data.setdefault("d", d)
        return CovariateGenerator.model_validate(data)
    return CovariateGenerator(kind=raw, d=d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="casecohort", description="Weighted Z-estimators for case-cohort designs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic full cohort")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--family", choices=["cox", "additive"], default="cox")
    p.add_argument("--theta0", default="0", help="comma separated coefficients")
    p.add_argument("--baseline", default="1.0", help="rate, or start:rate steps")
    p.add_argument("--censoring", default="none")
    p.add_argument("--covgen", default="fixed-binary")
    p.add_argument("--tau", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strata-component", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample", help="draw the subcohort and build weights")
    p.add_argument("--data", required=True)
    p.add_argument("--plan", required=True, help="SamplingPlan JSON")
    p.add_argument("--scheme", default='{"kind": "ipw-kl"}', help="WeightScheme JSON")
    p.add_argument("--out", required=True)

    p = sub.add_parser("validate", help="report cohort invariant violations")
    p.add_argument("--data", required=True)

    p = sub.add_parser("fit", help="fit the Cox or additive model")
    p.add_argument("--model", choices=["cox", "additive"], required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--scheme", default=None, help="WeightScheme JSON; default keeps the file's weights")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--skip-empty-risk-sets", action="store_true")
    p.add_argument("--confidence-level", type=float, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("mc", help="run a Monte Carlo study")
    p.add_argument("--config", required=True, help="study file or name in config/studies")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "csv", "md"], default="json")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--compare", action="store_true", help="run every scheme listed under 'compare'")
    return parser


# ─── COMMANDS ──────────────────────────────────────────────

def cmd_simulate(args: argparse.Namespace) -> int:
    model = ModelSpec(family=args.family, theta0=_floats(args.theta0), baseline=_baseline(args.baseline), tau=args.tau)
    covgen = _covgen(args.covgen, model.d)
    cohort = simulate_cohort(
        args.n, model, _censoring(args.censoring), covgen, args.seed,
        strata_component=args.strata_component,
    )
    write_cohort_csv(cohort, args.out)
    print(json.dumps(cohort.summary()))
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    cohort = read_cohort_csv(args.data)
    plan = SamplingPlan.model_validate(_json_block(args.plan))
    scheme = WeightScheme.model_validate(_json_block(args.scheme))
    weighted = build_weights(sample_subcohort(cohort, plan), scheme)
    write_cohort_csv(weighted, args.out)
    print(json.dumps(weighted.summary()))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    cohort = read_cohort_csv(args.data)
    problems = validate_cohort(cohort)
    print(json.dumps([v.model_dump() for v in problems], indent=2))
    return EXIT_OK if not problems else EXIT_CONFIG


def cmd_fit(args: argparse.Namespace) -> int:
    cohort = read_cohort_csv(args.data)
    scheme_name = "custom"
    if args.scheme is not None:
        scheme = WeightScheme.model_validate(_json_block(args.scheme))
        cohort = build_weights(cohort, scheme)
        scheme_name = scheme.name

    updates: dict[str, Any] = {"skip_empty_risk_sets": args.skip_empty_risk_sets}
    if args.tol is not None:
        updates["tol"] = args.tol
    if args.max_iter is not None:
        updates["max_iter"] = args.max_iter
    if args.confidence_level is not None:
        updates["confidence_level"] = args.confidence_level
    options = FitOptions(**updates)

    fitter = fit_cox if args.model == "cox" else fit_additive
    result = fitter(cohort, options, scheme=scheme_name)
    payload = json.dumps(result.to_dict(), indent=2)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(payload + "\n", encoding="utf-8")
        logger.info("fit.written", path=str(out), model=args.model)
    else:
        print(payload)
    return EXIT_OK


def cmd_mc(args: argparse.Namespace) -> int:
    study = load_study(args.config)
    if args.compare:
        schemes = study.compare or [study.design.scheme]
        reports = compare_schemes(study, schemes, jobs=args.jobs)
    else:
        reports = [run_study(study, jobs=args.jobs)]

    if args.out:
        emit_report(reports if len(reports) > 1 else reports[0], args.out, args.format)
    else:
        print(reports_to_frame(reports).to_string(index=False))
    return study_exit_code(reports)


COMMANDS = {
    "simulate": cmd_simulate,
    "sample": cmd_sample,
    "validate": cmd_validate,
    "fit": cmd_fit,
    "mc": cmd_mc,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; 2 is reserved for unstable studies
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    settings = get_settings()
    logger.debug("casecohort.starting", version=settings.app_version, command=args.command)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, ValidationError) as e:
        logger.error("casecohort.config_error", command=args.command, error=str(e))
        return EXIT_CONFIG
    except CaseCohortError as e:
        logger.error("casecohort.failed", command=args.command, error=str(e))
        return EXIT_CONFIG


def run() -> None:
    """Entry point for `python -m src.main`."""
    sys.exit(main())


if __name__ == "__main__":
    run()
