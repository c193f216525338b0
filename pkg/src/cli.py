"""
Univalence Checks - Command Line
Front end for the criteria, Jack's lemma, the boundary functions, the
coefficient searches and the identity checks.

Reports go to stdout as key-sorted JSON (schema 1) or as CSV; logs go to
stderr. Exit codes: 0 success, 1 usage/parse/config errors, 2 consistency
violations and theorem-consistency failures.

Usage:
    python -m cli check --criterion T1 --function poly-p:0.5 --json
    python -m cli jack --omega omega:1,0.3 --r 0.9
    python -m cli phi --t -1 --k 1
"""

import argparse
import json
import logging
import sys
import time
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config import REPORT_SCHEMA, TOOL_VERSION, get_settings
from criteria import (
    CheckReport,
    Consistency,
    CriterionSpec,
    OracleOutcome,
    Verdict,
    VerdictOptions,
    check,
    get_criterion,
    list_criteria,
)
from disk_analysis import ComplexPoint, DiskGrid, PhiArgs, jack_check, phi, phi_partial_k
from errors import (
    ConfigError,
    ConsistencyViolation,
    DomainError,
    FunctionParseError,
    InputKindError,
    UnivalenceError,
)
from function_spec import FunctionSpec, SpecKind
from search import ResultKind, SearchConfig, SearchResult, converse_probe, falsify, sharpness
from series_core import Normalization
from transforms import identity_zf, make_expr, remark_identity, schwarz_to_p

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

SHARPNESS_SLACK = 1e-9


# ============================================================================
# REPORT MODELS
# ============================================================================

class GridInfo(BaseModel):
    levels: int
    angles: int
    order: int


class HypothesisSummary(BaseModel):
    verdict: Verdict
    sup: Optional[float]
    bound: float
    strict: bool
    witness: Optional[ComplexPoint]
    certified: bool


class OracleSummary(BaseModel):
    id: str
    result: OracleOutcome
    inf_re: float
    witness: ComplexPoint


class RunReport(BaseModel):
    """Schema-1 report of one `check` run"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    schema_version: int = Field(REPORT_SCHEMA, alias="schema")
    version: str = TOOL_VERSION
    criterion: str
    function: str
    alpha: Optional[float]
    grid: GridInfo
    hypothesis: HypothesisSummary
    oracle: OracleSummary
    consistency: Consistency
    singular_samples: int
    timing: Optional[float] = None

    @classmethod
    def from_check(cls, report: CheckReport, spec: FunctionSpec, grid: DiskGrid, order: int,
                   timing: Optional[float]) -> "RunReport":
        h, o = report.hypothesis, report.oracle
        return cls(
            criterion=report.criterion,
            function=spec.format(),
            alpha=report.alpha,
            grid=GridInfo(levels=grid.levels, angles=grid.angles_per_circle, order=order),
            hypothesis=HypothesisSummary(verdict=h.verdict, sup=h.sup, bound=h.bound, strict=h.strict,
                                         witness=h.witness, certified=h.certified),
            oracle=OracleSummary(id=o.id, result=o.result, inf_re=o.inf_re, witness=o.witness),
            consistency=report.consistency,
            singular_samples=report.singular_samples,
            timing=timing,
        )

    def payload(self) -> Dict[str, Any]:
        data = self.model_dump(mode="json", by_alias=True)
        if self.timing is None:
            data.pop("timing")
        return data


# ============================================================================
# OUTPUT
# ============================================================================

def _header() -> Dict[str, Any]:
    return {"schema": REPORT_SCHEMA, "version": TOOL_VERSION}


def emit_json(payload: Dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def emit_csv(frame: pd.DataFrame) -> None:
    sys.stdout.write(frame.to_csv(index=False, lineterminator="\n", na_rep="nan"))


def _timing(args: argparse.Namespace, started: float) -> Optional[float]:
    return None if args.no_timing else round(time.perf_counter() - started, 6)


# ============================================================================
# ARGUMENT PARSING
# ============================================================================

class _ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1"""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not (0 <= value < 2 ** 64):
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _spec(text: str) -> FunctionSpec:
    try:
        return FunctionSpec.parse(text)
    except FunctionParseError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _add_grid(p: argparse.ArgumentParser, levels: Optional[int] = None) -> None:
    p.add_argument("--radii-levels", type=_positive_int, default=levels,
                   help="radius levels J, r_j = 1 - 2^-j (default from settings)")
    p.add_argument("--angles", type=_positive_int, help="angles per circle M (default from settings)")
    p.add_argument("--order", type=_positive_int, help="series order N for named families")
    p.add_argument("--workers", type=_positive_int, help="worker threads")


def _add_timing(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-timing", action="store_true", help="omit the timing field (byte-stable output)")


def _add_search(p: argparse.ArgumentParser, criterion: bool = True) -> None:
    if criterion:
        p.add_argument("--criterion", required=True, help="criterion id, e.g. T2 or C1.i")
        p.add_argument("--alpha", type=float, help="order for T3 / C3.* criteria")
    p.add_argument("--seed", type=_seed, required=True, help="64-bit search seed")
    p.add_argument("--degree", type=_positive_int, default=3)
    p.add_argument("--budget", type=int, default=5000, help="max objective evaluations")
    p.add_argument("--restarts", type=_positive_int, default=4)
    p.add_argument("--initial-step", type=float, default=0.5)
    p.add_argument("--decay", type=float, default=0.5)
    p.add_argument("--start", type=_spec, help="poly-p:... starting coefficients for restart 0")
    p.add_argument("--radii-levels", type=_positive_int, default=8)
    p.add_argument("--angles", type=_positive_int, default=512)
    p.add_argument("--workers", type=_positive_int)
    _add_timing(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="univalence-checks",
                             description="Numerical checks of univalence criteria on the unit disk")
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("check", help="evaluate a criterion and its conclusion on one function")
    p.add_argument("--criterion", required=True, help="T1, T2, T3, C1.i..C2.iv, C3.*, TZF, R1, R2")
    p.add_argument("--function", required=True, type=_spec, help="function spec, e.g. poly-p:0.5")
    p.add_argument("--alpha", type=float, help="order for T3 / C3.* criteria")
    p.add_argument("--margin-fraction", type=float, help="numerical-hold margin as a fraction of the bound")
    p.add_argument("--bound-override", type=float, help="diagnostic bound replacing the criterion's")
    p.add_argument("--refine", action="store_true", help="bounded scalar refinement of the sup")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="csv", action="store_false", help="JSON report (default)")
    fmt.add_argument("--csv", dest="csv", action="store_true", help="one-row CSV report")
    _add_grid(p)
    _add_timing(p)
    p.set_defaults(handler=cmd_check, csv=False)

    p = sub.add_parser("jack", help="empirical check of Jack's lemma on |z| = r")
    p.add_argument("--omega", required=True, type=_spec, help="omega:c1,c2,...")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--angles", type=_positive_int, default=4096)
    _add_timing(p)
    p.set_defaults(handler=cmd_jack)

    p = sub.add_parser("phi", help="boundary function phi(t, k) and its k-derivative")
    p.add_argument("--t", type=float, required=True, help="t = cos(theta) in [-1, 1)")
    p.add_argument("--k", type=float, required=True, help="k >= 1")
    p.set_defaults(handler=cmd_phi)

    p = sub.add_parser("sharpness", help="minimise the hypothesis over p violating the conclusion")
    _add_search(p)
    p.set_defaults(handler=cmd_sharpness)

    p = sub.add_parser("falsify", help="search for a counterexample to a criterion")
    _add_search(p)
    p.add_argument("--bound-override", type=float, help="diagnostic (wrong) bound for harness validation")
    p.set_defaults(handler=cmd_falsify)

    p = sub.add_parser("converse", help="search for a counterexample to the converse of T3(alpha)")
    p.add_argument("--alpha", type=float, required=True)
    _add_search(p, criterion=False)
    p.set_defaults(handler=cmd_converse)

    p = sub.add_parser("identity", help="compare the two sides of an analytic identity on a grid")
    p.add_argument("--which", choices=("zf", "remark"), required=True)
    p.add_argument("--function", required=True, type=_spec, help="CLASS_A spec: identity, koebe, poly-f:...")
    p.add_argument("--tolerance", type=float, default=1e-10, help="max absolute gap")
    _add_grid(p, levels=8)
    _add_timing(p)
    p.set_defaults(handler=cmd_identity)

    p = sub.add_parser("boundary-csv", help="per-angle values of a hypothesis expression on |z| = r")
    p.add_argument("--criterion", required=True)
    p.add_argument("--function", required=True, type=_spec)
    p.add_argument("--alpha", type=float)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--angles", type=_positive_int)
    p.add_argument("--order", type=_positive_int)
    p.set_defaults(handler=cmd_boundary_csv)

    p = sub.add_parser("list", help="list the fixed criteria")
    p.set_defaults(handler=cmd_list)
    return parser


# ============================================================================
# COMMANDS
# ============================================================================

def _criterion(criterion_id: str, alpha: Optional[float]) -> CriterionSpec:
    c = get_criterion(criterion_id, alpha)
    if alpha is not None and c.alpha is None:
        raise DomainError(f"--alpha does not apply to {c.id}", code="BAD_ALPHA")
    return c


def _order(args: argparse.Namespace) -> int:
    return args.order or get_settings().series_order


def cmd_check(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    c = _criterion(args.criterion, args.alpha)
    order = _order(args)
    grid = DiskGrid.default(args.radii_levels, args.angles)
    opts = VerdictOptions(margin_fraction=args.margin_fraction, bound_override=args.bound_override,
                          refine=args.refine, workers=args.workers)
    spec = args.function
    report = check(c, spec.to_series(order), grid, opts, descriptor=spec.format())
    for note in report.notes:
        logger.info(f"📊 {note}")

    run = RunReport.from_check(report, spec, grid, order, _timing(args, started))
    if args.csv:
        emit_csv(pd.json_normalize(run.payload(), sep="_"))
    else:
        emit_json(run.payload())
    if report.consistency is Consistency.VIOLATION:
        sys.stderr.write(report.model_dump_json(indent=2) + "\n")
        logger.error(f"❌ {c.id} hypothesis {report.hypothesis.verdict.value} but the conclusion is refuted")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_jack(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    spec = args.omega
    if spec.kind is not SpecKind.OMEGA:
        raise InputKindError("jack needs an omega:... spec")
    omega = spec.to_series()
    result = jack_check(omega, args.r, angles=args.angles)
    p_z0 = schwarz_to_p(omega)(result.z0.to_complex())

    payload = {**_header(), **result.model_dump(mode="json"),
               "omega": spec.format(), "p_at_z0": ComplexPoint.of(p_z0).model_dump()}
    timing = _timing(args, started)
    if timing is not None:
        payload["timing"] = timing
    emit_json(payload)
    if not result.contract_holds:
        return EXIT_VIOLATION
    logger.info(f"✅ Jack's lemma holds at r={args.r}: k = {result.k_est.to_complex()!r}")
    return EXIT_OK


def cmd_phi(args: argparse.Namespace) -> int:
    point = PhiArgs(t=args.t, k=args.k)
    sys.stdout.write(f"{float(phi(point)):.15g}\n{float(phi_partial_k(point)):.15g}\n")
    return EXIT_OK


def _search_config(args: argparse.Namespace, **extra) -> SearchConfig:
    start = None
    if args.start is not None:
        if args.start.kind is not SpecKind.POLY_P:
            raise ConfigError("--start must be a poly-p:... spec")
        coeffs = args.start.complex_coeffs()
        if len(coeffs) != args.degree:
            raise ConfigError(f"--start needs {args.degree} coefficients, got {len(coeffs)}")
        start = tuple(v for c in coeffs for v in (c.real, c.imag))
    return SearchConfig.create(
        degree=args.degree, budget=args.budget, restarts=args.restarts, seed=args.seed,
        initial_step=args.initial_step, decay=args.decay, radii_levels=args.radii_levels,
        angles=args.angles, start=start, workers=args.workers, **extra)


def _search_payload(result: SearchResult, cfg: SearchConfig, timing: Optional[float]) -> Dict[str, Any]:
    payload = {**_header(), **result.model_dump(mode="json", exclude={"report"})}
    payload["function"] = None if result.params is None else \
        FunctionSpec.poly_p([p.to_complex() for p in result.params]).format()
    payload["grid"] = {"levels": cfg.radii_levels, "angles": cfg.angles}
    payload["report"] = None if result.report is None else result.report.model_dump(mode="json")
    if timing is not None:
        payload["timing"] = timing
    return payload


def cmd_falsify(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = _search_config(args, criterion=args.criterion, alpha=args.alpha, bound_override=args.bound_override)
    result = falsify(cfg)
    emit_json(_search_payload(result, cfg, _timing(args, started)))
    if result.kind is ResultKind.COUNTEREXAMPLE and cfg.bound_override is None:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_sharpness(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = _search_config(args, criterion=args.criterion, alpha=args.alpha)
    result = sharpness(cfg)
    emit_json(_search_payload(result, cfg, _timing(args, started)))
    bound = get_criterion(result.target).bound
    if result.feasible and result.objective < bound - SHARPNESS_SLACK:
        logger.error(f"❌ Feasible objective {result.objective!r} below the bound {bound!r} of {result.target}")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_converse(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = _search_config(args, criterion="T3", alpha=args.alpha)
    result = converse_probe(args.alpha, cfg)
    emit_json(_search_payload(result, cfg, _timing(args, started)))
    return EXIT_OK


def cmd_identity(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    spec = args.function
    if spec.normalization is not Normalization.CLASS_A:
        raise InputKindError("identity needs a CLASS_A spec (identity, koebe or poly-f:...)")
    f = spec.to_series(_order(args))
    grid = DiskGrid.default(args.radii_levels, args.angles)
    lhs, rhs = identity_zf(f) if args.which == "zf" else remark_identity(f)

    points = grid.points()
    a, b = lhs.values(points), rhs.values(points)
    ok = np.isfinite(a) & np.isfinite(b)
    gap = np.abs(a[ok] - b[ok])
    abs_gap = float(np.max(gap)) if gap.size else 0.0
    rel_gap = float(np.max(gap / np.maximum(1.0, np.abs(a[ok])))) if gap.size else 0.0

    payload = {
        **_header(),
        "which": args.which,
        "function": spec.format(),
        "grid": {"levels": grid.levels, "angles": grid.angles_per_circle, "order": _order(args)},
        "samples": int(points.size),
        "singular_samples": int(points.size - np.count_nonzero(ok)),
        "max_abs_gap": abs_gap,
        "max_rel_gap": rel_gap,
        "tolerance": args.tolerance,
        "passed": abs_gap <= args.tolerance,
    }
    timing = _timing(args, started)
    if timing is not None:
        payload["timing"] = timing
    emit_json(payload)
    if abs_gap > args.tolerance:
        logger.error(f"❌ Identity {args.which} gap {abs_gap:.3e} exceeds {args.tolerance:.1e}")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_boundary_csv(args: argparse.Namespace) -> int:
    c = _criterion(args.criterion, args.alpha)
    angles = args.angles or get_settings().angles
    grid = DiskGrid(radii=(args.r,), angles_per_circle=angles)
    expr = make_expr(args.function.to_series(_order(args)), c.expr_id, c.alpha)
    values = expr.values(grid.circle(0))
    emit_csv(pd.DataFrame({
        "theta": grid.thetas(),
        "re": values.real,
        "im": values.imag,
        "abs": np.abs(values),
    }))
    return EXIT_OK


def cmd_list(args: argparse.Namespace) -> int:
    rows: List[Dict[str, Any]] = [
        {
            "id": c.id,
            "input_kind": c.input_kind.value,
            "bound": c.bound,
            "strict": c.strict,
            "conclusion": c.conclusion.label,
            "description": c.description,
        }
        for c in list_criteria()
    ]
    emit_csv(pd.DataFrame(rows))
    return EXIT_OK


# ============================================================================
# ENTRY POINT
# ============================================================================

def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code"""
    try:
        settings = get_settings()
    except ConfigError as e:
        sys.stderr.write(f"❌ {e}\n")
        return EXIT_USAGE
    logging.basicConfig(level=settings.log_level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except ConsistencyViolation as e:
        if e.report is not None:
            sys.stderr.write(e.report.model_dump_json(indent=2) + "\n")
        logger.error(f"❌ {e}")
        return EXIT_VIOLATION
    except UnivalenceError as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    except ValidationError as e:
        logger.error(f"❌ Invalid arguments: {e.errors()[0]['msg']}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
