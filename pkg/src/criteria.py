"""
Univalence Checks - Criteria Registry
Binds every criterion (hypothesis expression + bound) to the conclusion it
promises, runs both sides on a grid and reports whether the implication
was honoured.

Verdicts on the hypothesis are three-valued plus INCONCLUSIVE:
- CERTIFIED_FAIL: some sample of the open disk breaks the bound
- CERTIFIED_HOLD: the expression is an exact polynomial whose coefficient
  moduli sum below the bound
- NUMERICALLY_HOLDS: grid sup below bound - margin, trend settled, no
  singular samples
"""

import logging
import re
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from config import get_settings
from disk_analysis import (
    ComplexPoint,
    DiskGrid,
    coefficient_sup_bound,
    inf_real,
    sup_modulus,
)
from errors import ConsistencyViolation, DomainError, InputKindError, UnivalenceError
from function_spec import format_real
from series_core import Normalization, PowerSeries
from transforms import ExprId, Substitution, build_p, make_expr, p_from_series

logger = logging.getLogger(__name__)


class InputKind(str, Enum):
    P_FUNCTION = "P_FUNCTION"
    A_FUNCTION = "A_FUNCTION"


class OracleKind(str, Enum):
    RE_P_GT = "RE_P_GT"
    STARLIKE = "STARLIKE"
    CONVEX = "CONVEX"
    BOUNDED_TURNING = "BOUNDED_TURNING"
    RE_F_OVER_Z = "RE_F_OVER_Z"


class Verdict(str, Enum):
    CERTIFIED_HOLD = "CERTIFIED_HOLD"
    NUMERICALLY_HOLDS = "NUMERICALLY_HOLDS"
    INCONCLUSIVE = "INCONCLUSIVE"
    CERTIFIED_FAIL = "CERTIFIED_FAIL"


class OracleOutcome(str, Enum):
    HOLDS_NUMERICALLY = "HOLDS_NUMERICALLY"
    CERTIFIED_FAIL = "CERTIFIED_FAIL"


class Consistency(str, Enum):
    CONSISTENT = "CONSISTENT"
    VIOLATION = "VIOLATION"
    VACUOUS = "VACUOUS"


# ============================================================================
# DATA MODELS
# ============================================================================

class OracleId(BaseModel):
    """Conclusion test: Re of the oracle's defining expression > alpha"""
    model_config = ConfigDict(frozen=True)

    kind: OracleKind
    alpha: float = Field(0.0, ge=0.0, lt=1.0)

    @property
    def label(self) -> str:
        return f"{self.kind.value}({format_real(self.alpha)})"


class CriterionSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    input_kind: InputKind
    expr_id: ExprId
    alpha: Optional[float] = None
    bound: float
    strict: bool
    conclusion: OracleId
    description: str = ""


class VerdictOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    margin_fraction: Optional[float] = Field(None, gt=0.0, lt=1.0)
    bound_override: Optional[float] = Field(None, gt=0.0)
    abort_on_violation: bool = True
    refine: bool = False
    workers: Optional[int] = Field(None, ge=1)


class HypothesisResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    verdict: Verdict
    sup: Optional[float]
    bound: float
    strict: bool
    witness: Optional[ComplexPoint]
    certified: bool
    certificate: Optional[float] = None
    per_radius_max: List[Tuple[float, float]] = []
    singular_samples: int = 0
    error: Optional[str] = None


class OracleResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    result: OracleOutcome
    inf_re: float
    witness: ComplexPoint
    margin: float
    singular_samples: int = 0


class CheckReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    criterion: str
    input: str
    alpha: Optional[float]
    hypothesis: HypothesisResult
    oracle: OracleResult
    consistency: Consistency
    singular_samples: int
    notes: List[str] = []


# ============================================================================
# REGISTRY
# ============================================================================

_STARLIKE = OracleId(kind=OracleKind.STARLIKE)
_CONVEX = OracleId(kind=OracleKind.CONVEX)
_TURNING = OracleId(kind=OracleKind.BOUNDED_TURNING)
_F_OVER_Z = OracleId(kind=OracleKind.RE_F_OVER_Z)
_RE_P = OracleId(kind=OracleKind.RE_P_GT)

_ITEMS = (("i", _STARLIKE), ("ii", _CONVEX), ("iii", _TURNING), ("iv", _F_OVER_Z))
_ITEM_SUBSTITUTION = {
    "i": Substitution.RATIO,
    "ii": Substitution.CONVEXITY,
    "iii": Substitution.DERIV,
    "iv": Substitution.RATIO0,
}
_ITEM_ORACLE = {
    Substitution.RATIO: OracleKind.STARLIKE,
    Substitution.CONVEXITY: OracleKind.CONVEX,
    Substitution.DERIV: OracleKind.BOUNDED_TURNING,
    Substitution.RATIO0: OracleKind.RE_F_OVER_Z,
}


def _build_registry() -> Tuple[CriterionSpec, ...]:
    specs = [CriterionSpec(id="T1", input_kind=InputKind.P_FUNCTION, expr_id=ExprId.LHS_T1,
                           bound=2.5, strict=True, conclusion=_RE_P,
                           description="|zp'+p+p^2-2| < 5/2 => Re p > 0")]
    for item, oracle in _ITEMS:
        specs.append(CriterionSpec(id=f"C1.{item}", input_kind=InputKind.A_FUNCTION,
                                   expr_id=ExprId(f"LHS_C1_{item.upper()}"), bound=2.5, strict=True,
                                   conclusion=oracle, description=f"first corollary ({item})"))
    specs.append(CriterionSpec(id="T2", input_kind=InputKind.P_FUNCTION, expr_id=ExprId.LHS_T2,
                               bound=0.5, strict=True, conclusion=_RE_P,
                               description="|zp'+p-p^2| < 1/2 => Re p > 0"))
    for item, oracle in _ITEMS:
        specs.append(CriterionSpec(id=f"C2.{item}", input_kind=InputKind.A_FUNCTION,
                                   expr_id=ExprId(f"LHS_C2_{item.upper()}"), bound=0.5, strict=True,
                                   conclusion=oracle, description=f"second corollary ({item})"))
    specs.append(CriterionSpec(id="TZF", input_kind=InputKind.A_FUNCTION, expr_id=ExprId.LHS_ZF,
                               bound=0.5, strict=False, conclusion=_STARLIKE,
                               description="|f [z/f]''| <= 1/2 => starlike"))
    specs.append(CriterionSpec(id="R1", input_kind=InputKind.A_FUNCTION, expr_id=ExprId.LHS_REMARK1,
                               bound=1.0, strict=True, conclusion=_STARLIKE,
                               description="|f [z/f]'| < 1 => starlike"))
    specs.append(CriterionSpec(id="R2", input_kind=InputKind.A_FUNCTION, expr_id=ExprId.LHS_REMARK_T3_HALF,
                               bound=0.25, strict=True,
                               conclusion=OracleId(kind=OracleKind.STARLIKE, alpha=0.5),
                               description="order-1/2 remark => starlike of order 1/2"))
    return tuple(specs)


_REGISTRY: Tuple[CriterionSpec, ...] = _build_registry()
_BY_ID: Dict[str, CriterionSpec] = {c.id: c for c in _REGISTRY}


def list_criteria() -> Tuple[CriterionSpec, ...]:
    """The 13 fixed criteria in stable order (the T3 family comes from make_t3)"""
    return _REGISTRY


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha < 1.0):
        raise DomainError(f"alpha must lie in [0, 1), got {alpha!r}", code="BAD_ALPHA")
    return alpha


def make_t3(alpha: float) -> CriterionSpec:
    """Theorem 3 criterion of order alpha: bound (1 - alpha)/2, conclusion Re p > alpha"""
    alpha = _check_alpha(alpha)
    return CriterionSpec(id=f"T3:alpha={format_real(alpha)}", input_kind=InputKind.P_FUNCTION, expr_id=ExprId.LHS_T3,
                         alpha=alpha, bound=(1.0 - alpha) / 2.0, strict=True,
                         conclusion=OracleId(kind=OracleKind.RE_P_GT, alpha=alpha),
                         description=f"order-{format_real(alpha)} functional < (1-alpha)/2 => Re p > alpha")


def make_t3_corollary(alpha: float, substitution: Substitution) -> CriterionSpec:
    """Theorem 3 applied to one of the four p[f] substitutions; conclusions of order alpha"""
    alpha = _check_alpha(alpha)
    substitution = Substitution(substitution)
    item = next(k for k, v in _ITEM_SUBSTITUTION.items() if v is substitution)
    return CriterionSpec(id=f"C3.{item}:alpha={format_real(alpha)}", input_kind=InputKind.A_FUNCTION,
                         expr_id=ExprId(f"LHS_C3_{item.upper()}"), alpha=alpha,
                         bound=(1.0 - alpha) / 2.0, strict=True,
                         conclusion=OracleId(kind=_ITEM_ORACLE[substitution], alpha=alpha),
                         description=f"order-{format_real(alpha)} corollary ({item})")


_FAMILY_ID = re.compile(r"^(T3|C3\.(i|ii|iii|iv))(?::alpha=(.+))?$")


def get_criterion(criterion_id: str, alpha: Optional[float] = None) -> CriterionSpec:
    """
    Resolve a stable criterion id ("T1", "C2.iii", "T3:alpha=0.5", "C3.i:alpha=0.25", ...).

    For the alpha families the alpha may come from the id or the argument.

    Raises:
        DomainError(BAD_DOMAIN): unknown id; BAD_ALPHA for a missing or bad alpha
    """
    if criterion_id in _BY_ID:
        return _BY_ID[criterion_id]
    match = _FAMILY_ID.match(criterion_id)
    if not match:
        raise DomainError(f"unknown criterion id {criterion_id!r}", code="BAD_DOMAIN")
    family, item, alpha_text = match.group(1), match.group(2), match.group(3)
    if alpha_text is not None:
        try:
            alpha = float(alpha_text)
        except ValueError:
            raise DomainError(f"bad alpha in {criterion_id!r}", code="BAD_ALPHA")
    if alpha is None:
        raise DomainError(f"{criterion_id} needs an alpha", code="BAD_ALPHA")
    if family == "T3":
        return make_t3(alpha)
    return make_t3_corollary(alpha, _ITEM_SUBSTITUTION[item])


# ============================================================================
# ORACLES
# ============================================================================

def _oracle_function(o: OracleId, source: PowerSeries):
    if o.kind is OracleKind.RE_P_GT:
        if source.normalization is not Normalization.CLASS_P:
            raise InputKindError(f"{o.label} needs a CLASS_P input")
        return p_from_series(source)
    if source.normalization is not Normalization.CLASS_A:
        raise InputKindError(f"{o.label} needs a CLASS_A input")
    sub = next(s for s, k in _ITEM_ORACLE.items() if k is o.kind)
    return build_p(source, sub)


def run_oracle(o: OracleId, source: PowerSeries, grid: DiskGrid, workers: Optional[int] = None) -> OracleResult:
    """
    Test Re(expr) > alpha on the grid, expr being p, zf'/f, 1+zf''/f', f' or f/z.

    A sample with Re(expr) <= alpha is a certified refutation.

    Raises:
        InputKindError: input normalization does not suit the oracle
        AllSingularError: every sample singular
    """
    estimate = inf_real(_oracle_function(o, source), grid, workers=workers)
    failed = estimate.value <= o.alpha
    return OracleResult(
        id=o.label,
        result=OracleOutcome.CERTIFIED_FAIL if failed else OracleOutcome.HOLDS_NUMERICALLY,
        inf_re=estimate.value,
        witness=estimate.witness,
        margin=estimate.value - o.alpha,
        singular_samples=estimate.singular_samples,
    )


# ============================================================================
# CHECK
# ============================================================================

def _expected_normalization(kind: InputKind) -> Normalization:
    return Normalization.CLASS_P if kind is InputKind.P_FUNCTION else Normalization.CLASS_A


def _hypothesis(c: CriterionSpec, source: PowerSeries, grid: DiskGrid, opts: VerdictOptions,
                bound: float) -> HypothesisResult:
    settings = get_settings()
    margin = (opts.margin_fraction or settings.margin_fraction) * bound
    try:
        expr = make_expr(source, c.expr_id, c.alpha)
        est = sup_modulus(expr, grid, refine=opts.refine, workers=opts.workers)
    except UnivalenceError as e:
        logger.warning(f"⚠️ Hypothesis of {c.id} could not be evaluated: {e}")
        return HypothesisResult(verdict=Verdict.INCONCLUSIVE, sup=None, bound=bound, strict=c.strict,
                                witness=None, certified=False, error=str(e))

    certificate = coefficient_sup_bound(expr.series) if expr.series is not None else None
    fails = est.value >= bound if c.strict else est.value > bound
    certified_hold = certificate is not None and (certificate < bound if c.strict else certificate <= bound)
    trend = [v for _, v in est.per_radius_max]
    settled = len(trend) >= 2 and abs(trend[-1] - trend[-2]) < margin / 4.0

    if fails:
        verdict = Verdict.CERTIFIED_FAIL
    elif certified_hold:
        verdict = Verdict.CERTIFIED_HOLD
    elif est.singular_samples == 0 and est.value <= bound - margin and settled:
        verdict = Verdict.NUMERICALLY_HOLDS
    else:
        verdict = Verdict.INCONCLUSIVE

    return HypothesisResult(
        verdict=verdict,
        sup=est.value,
        bound=bound,
        strict=c.strict,
        witness=est.witness,
        certified=verdict is Verdict.CERTIFIED_HOLD,
        certificate=certificate,
        per_radius_max=est.per_radius_max,
        singular_samples=est.singular_samples,
    )


def check(c: CriterionSpec, source: PowerSeries, grid: DiskGrid,
          opts: Optional[VerdictOptions] = None, descriptor: Optional[str] = None) -> CheckReport:
    """
    Evaluate a criterion's hypothesis and its conclusion on one input.

    Args:
        c: criterion from the registry, make_t3 or make_t3_corollary
        source: CLASS_P series for p-criteria, CLASS_A series for f-criteria
        grid: sampling grid for both sides
        opts: margin, diagnostic bound override, abort rule, refinement, workers
        descriptor: input description echoed in the report

    Returns:
        CheckReport; expression errors land in the report as INCONCLUSIVE

    Raises:
        InputKindError: source normalization does not match the criterion
        ConsistencyViolation: a CERTIFIED_HOLD hypothesis with a refuted
            conclusion while opts.abort_on_violation is set
    """
    opts = opts or VerdictOptions()
    expected = _expected_normalization(c.input_kind)
    if source.normalization is not expected:
        raise InputKindError(f"{c.id} takes a {expected.value} input, got {source.normalization.value}")

    bound = opts.bound_override if opts.bound_override is not None else c.bound
    logger.debug(f"🔍 Checking {c.id} (bound {bound!r}) on {descriptor or source!r}")

    hypothesis = _hypothesis(c, source, grid, opts, bound)
    oracle = run_oracle(c.conclusion, source, grid, workers=opts.workers)

    notes = []
    if hypothesis.verdict is Verdict.CERTIFIED_FAIL:
        consistency = Consistency.VACUOUS
        if oracle.result is OracleOutcome.HOLDS_NUMERICALLY:
            notes.append("hypothesis fails while the conclusion holds: the criterion is sufficient, not necessary")
    elif hypothesis.verdict in (Verdict.CERTIFIED_HOLD, Verdict.NUMERICALLY_HOLDS) \
            and oracle.result is OracleOutcome.CERTIFIED_FAIL:
        consistency = Consistency.VIOLATION
    else:
        consistency = Consistency.CONSISTENT
    if opts.bound_override is not None:
        notes.append(f"diagnostic bound override {opts.bound_override!r} replaces {c.bound!r}")

    report = CheckReport(
        criterion=c.id,
        input=descriptor or repr(source),
        alpha=c.alpha,
        hypothesis=hypothesis,
        oracle=oracle,
        consistency=consistency,
        singular_samples=hypothesis.singular_samples + oracle.singular_samples,
        notes=notes,
    )

    if consistency is Consistency.VIOLATION:
        logger.error(f"❌ VIOLATION for {c.id}: hypothesis {hypothesis.verdict.value} "
                     f"(sup {hypothesis.sup!r}, bound {bound!r}) but {oracle.id} fails "
                     f"(inf Re {oracle.inf_re!r} at {oracle.witness.to_complex()!r})")
        if hypothesis.verdict is Verdict.CERTIFIED_HOLD and opts.abort_on_violation:
            logger.error(f"❌ Diagnostic dump: {report.model_dump_json()}")
            raise ConsistencyViolation(f"certified hypothesis of {c.id} with refuted conclusion", report)
    else:
        logger.debug(f"✅ {c.id}: {hypothesis.verdict.value} / {oracle.result.value} -> {consistency.value}")
    return report
