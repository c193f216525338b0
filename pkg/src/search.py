"""
Univalence Checks - Coefficient Search
Derivative-free search over the coefficients of p = 1 + c_1 z + ... + c_d z^d:

- falsify: look for a p whose hypothesis is coefficient-certified while
  Re p > alpha fails on the grid (must find nothing for the true bounds)
- sharpness: minimise the hypothesis sup over p violating the conclusion
- converse_probe: look for p with Re p > alpha + 0.05 whose Theorem 3
  hypothesis still fails

Each restart runs adaptive coordinate descent from its own PCG64 stream
spawned off the configured seed, so results do not depend on worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config import get_settings
from criteria import (
    CheckReport,
    Consistency,
    CriterionSpec,
    InputKind,
    VerdictOptions,
    check,
    get_criterion,
    make_t3,
)
from disk_analysis import ComplexPoint, DiskGrid, coefficient_sup_bound, inf_real, sup_modulus
from errors import ConfigError, UnivalenceError
from series_core import Normalization, PowerSeries
from transforms import ExprId, make_expr, p_from_series

logger = logging.getLogger(__name__)

CONVERSE_MARGIN = 0.05
_MIN_STEP = 1e-10


class SearchMode(str, Enum):
    FALSIFY = "FALSIFY"
    SHARPNESS = "SHARPNESS"
    CONVERSE = "CONVERSE"


class ResultKind(str, Enum):
    NO_COUNTEREXAMPLE = "NO_COUNTEREXAMPLE"
    COUNTEREXAMPLE = "COUNTEREXAMPLE"
    BEST_VALUE = "BEST_VALUE"


# ============================================================================
# CONFIGURATION AND RESULTS
# ============================================================================

class SearchConfig(BaseModel):
    """
    Search parameters. Coefficients are searched as 2*degree real numbers
    (Re c_1, Im c_1, Re c_2, ...); c_0 stays pinned to 1.
    """
    model_config = ConfigDict(frozen=True)

    criterion: str = "T2"
    alpha: Optional[float] = None
    degree: int = Field(3, ge=1)
    budget: int = Field(5000, ge=0)
    restarts: int = Field(4, ge=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    initial_step: float = Field(0.5, gt=0.0)
    decay: float = Field(0.5, gt=0.0, lt=1.0)
    expand: float = Field(2.0, ge=1.0)
    box: float = Field(3.0, gt=0.0)
    bound_override: Optional[float] = Field(None, gt=0.0)
    radii_levels: int = Field(8, ge=2)
    angles: int = Field(512, ge=16)
    start: Optional[Tuple[float, ...]] = None
    workers: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_start(self) -> "SearchConfig":
        if self.start is not None and len(self.start) != 2 * self.degree:
            raise ValueError(f"start needs {2 * self.degree} real parameters, got {len(self.start)}")
        return self

    @classmethod
    def create(cls, **kwargs) -> "SearchConfig":
        """Build a config, reporting validation failures as BAD_CONFIG"""
        try:
            return cls(**kwargs)
        except ValidationError as e:
            err = e.errors()[0]
            where = ".".join(str(x) for x in err["loc"]) or "config"
            raise ConfigError(f"invalid search config ({where}): {err['msg']}") from e

    def grid(self) -> DiskGrid:
        return DiskGrid.default(self.radii_levels, self.angles)


class SearchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ResultKind
    mode: SearchMode
    criterion: str
    target: str
    params: Optional[List[ComplexPoint]] = None
    objective: Optional[float] = None
    residual: Optional[float] = None
    feasible: Optional[bool] = None
    report: Optional[CheckReport] = None
    evaluations: int
    seed: int


# ============================================================================
# COORDINATE DESCENT
# ============================================================================

@dataclass
class Trial:
    """One objective evaluation; `hit` ends the restart early"""
    value: float
    hit: bool = False
    feasible: bool = False
    score: float = float("inf")


@dataclass
class RestartOutcome:
    index: int
    evaluations: int
    best_x: Optional[np.ndarray] = None
    best: Optional[Trial] = None
    best_feasible_x: Optional[np.ndarray] = None
    best_feasible: Optional[Trial] = None
    hit_x: Optional[np.ndarray] = None


class CoordinateDescent:
    """
    Adaptive coordinate descent with random restarts.

    Each coordinate keeps its own step: a successful move multiplies it by
    `expand`, a failed +/- probe pair by `decay`. A restart ends when its
    share of the budget is spent, every step drops below 1e-10, or the
    objective reports a hit.
    """

    def __init__(self, objective: Callable[[np.ndarray], Trial], cfg: SearchConfig):
        self.objective = objective
        self.cfg = cfg
        self.n_dim = 2 * cfg.degree

    def _budget_share(self, index: int) -> int:
        share, extra = divmod(self.cfg.budget, self.cfg.restarts)
        return share + (1 if index < extra else 0)

    def _restart(self, index: int, seed_seq: np.random.SeedSequence) -> RestartOutcome:
        cfg = self.cfg
        rng = np.random.Generator(np.random.PCG64(seed_seq))
        budget = self._budget_share(index)
        out = RestartOutcome(index=index, evaluations=0)
        if budget == 0:
            return out

        if index == 0 and cfg.start is not None:
            x = np.asarray(cfg.start, dtype=float)
        else:
            x = rng.uniform(-cfg.box, cfg.box, self.n_dim) / np.sqrt(2.0)
        step = np.full(self.n_dim, cfg.initial_step)

        def evaluate(point: np.ndarray) -> Trial:
            trial = self.objective(point)
            out.evaluations += 1
            if trial.feasible and (out.best_feasible is None or trial.score < out.best_feasible.score):
                out.best_feasible, out.best_feasible_x = trial, point.copy()
            if trial.hit and out.hit_x is None:
                out.hit_x = point.copy()
            return trial

        current = evaluate(x)
        out.best, out.best_x = current, x.copy()
        while out.evaluations < budget and out.hit_x is None and np.max(step) >= _MIN_STEP:
            for i in rng.permutation(self.n_dim):
                moved = False
                for sign in (1.0, -1.0):
                    if out.evaluations >= budget or out.hit_x is not None:
                        break
                    moved_x = x.copy()
                    moved_x[i] += sign * step[i]
                    trial = evaluate(moved_x)
                    if trial.value < current.value:
                        x, current, moved = moved_x, trial, True
                        break
                step[i] *= cfg.expand if moved else cfg.decay
                if out.evaluations >= budget or out.hit_x is not None:
                    break
        if current.value < out.best.value:
            out.best, out.best_x = current, x.copy()
        return out

    def run(self) -> List[RestartOutcome]:
        """All restarts in restart order; ThreadPoolExecutor.map keeps that order"""
        children = np.random.SeedSequence(self.cfg.seed).spawn(self.cfg.restarts)
        workers = self.cfg.workers or get_settings().workers
        jobs = list(enumerate(children))
        if workers <= 1:
            return [self._restart(i, s) for i, s in jobs]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: self._restart(*job), jobs))


# ============================================================================
# HELPERS
# ============================================================================

def _p_criterion(cfg: SearchConfig) -> Tuple[CriterionSpec, CriterionSpec]:
    """(requested criterion, P_FUNCTION criterion actually searched)"""
    try:
        requested = get_criterion(cfg.criterion, cfg.alpha)
    except UnivalenceError as e:
        raise ConfigError(f"cannot search {cfg.criterion!r}: {e.message}") from e
    if requested.input_kind is InputKind.P_FUNCTION:
        return requested, requested
    if requested.id == "R1":
        raise ConfigError("R1 has no p-composition to search")
    if requested.id.startswith("C1."):
        return requested, get_criterion("T1")
    if requested.id.startswith("C2.") or requested.id == "TZF":
        return requested, get_criterion("T2")
    if requested.id == "R2":
        return requested, make_t3(0.5)
    return requested, make_t3(requested.alpha)


def params_to_series(x: np.ndarray) -> PowerSeries:
    """Real parameter vector -> CLASS_P polynomial 1 + c_1 z + ..."""
    x = np.asarray(x, dtype=float)
    coeffs = np.concatenate(([1.0 + 0j], x[0::2] + 1j * x[1::2]))
    return PowerSeries(coeffs, normalization=Normalization.CLASS_P)


def _params(x: np.ndarray) -> List[ComplexPoint]:
    return [ComplexPoint.of(c) for c in params_to_series(x).coeffs[1:]]


def _conclusion_alpha(c: CriterionSpec) -> float:
    return c.conclusion.alpha


# ============================================================================
# SEARCH MODES
# ============================================================================

def falsify(cfg: SearchConfig) -> SearchResult:
    """
    Search for p with a coefficient-certified hypothesis and a refuted conclusion.

    The certificate sum |c_n| < bound is sound on the closed disk, so for the
    true bounds this returns NO_COUNTEREXAMPLE once the budget runs out. A
    diagnostic `bound_override` lets the harness prove it can find violations.

    Raises:
        ConfigError: unsearchable criterion or invalid config
        ConsistencyViolation: a counterexample to an unmodified bound
    """
    requested, target = _p_criterion(cfg)
    bound = cfg.bound_override if cfg.bound_override is not None else target.bound
    alpha = _conclusion_alpha(target)
    grid = cfg.grid()
    logger.info(f"🔍 Falsifying {requested.id} via {target.id} (bound {bound!r}, seed {cfg.seed})")

    def objective(x: np.ndarray) -> Trial:
        p = params_to_series(x)
        certificate = coefficient_sup_bound(make_expr(p, target.expr_id, target.alpha).series)
        inf_re = inf_real(p_from_series(p), grid, workers=1).value
        hit = certificate < bound and inf_re <= alpha
        return Trial(value=max(0.0, certificate - bound) + max(0.0, inf_re - alpha), hit=hit)

    outcomes = CoordinateDescent(objective, cfg).run()
    evaluations = sum(o.evaluations for o in outcomes)
    hit = next((o for o in outcomes if o.hit_x is not None), None)
    if hit is None:
        logger.info(f"✅ No counterexample to {target.id} after {evaluations} evaluations")
        return SearchResult(kind=ResultKind.NO_COUNTEREXAMPLE, mode=SearchMode.FALSIFY, criterion=requested.id,
                            target=target.id, evaluations=evaluations, seed=cfg.seed)

    p = params_to_series(hit.hit_x)
    opts = VerdictOptions(bound_override=cfg.bound_override, abort_on_violation=cfg.bound_override is None)
    report = check(target, p, grid, opts, descriptor=repr(p))
    if report.consistency is not Consistency.VIOLATION:
        raise UnivalenceError(f"counterexample from restart {hit.index} did not replay as a violation",
                              code="INTERNAL")
    logger.warning(f"⚠️ Counterexample for {target.id} under bound {bound!r} (restart {hit.index})")
    return SearchResult(kind=ResultKind.COUNTEREXAMPLE, mode=SearchMode.FALSIFY, criterion=requested.id,
                        target=target.id, params=_params(hit.hit_x), objective=report.hypothesis.sup,
                        residual=report.oracle.margin, feasible=True, report=report,
                        evaluations=evaluations, seed=cfg.seed)


def sharpness(cfg: SearchConfig) -> SearchResult:
    """
    Minimise the hypothesis sup over p that violate the conclusion.

    Penalised objective: sup + lambda * max(0, inf Re p - alpha)^2. The result
    is the best feasible point (inf Re p <= alpha on the grid); its objective
    is the refined sup, never below the bound by the theorems. Without a
    feasible point the best penalised point is reported with feasible=False.
    """
    requested, target = _p_criterion(cfg)
    alpha = _conclusion_alpha(target)
    grid = cfg.grid()
    penalty = get_settings().penalty_lambda
    logger.info(f"🔍 Sharpness probe for {requested.id} via {target.id} (seed {cfg.seed})")

    def objective(x: np.ndarray) -> Trial:
        p = params_to_series(x)
        sup = sup_modulus(make_expr(p, target.expr_id, target.alpha), grid, refine=True, workers=1).value
        residual = inf_real(p_from_series(p), grid, workers=1).value - alpha
        return Trial(value=sup + penalty * max(0.0, residual) ** 2, feasible=residual <= 0.0, score=sup)

    outcomes = CoordinateDescent(objective, cfg).run()
    evaluations = sum(o.evaluations for o in outcomes)
    feasible = [o for o in outcomes if o.best_feasible is not None]
    if feasible:
        best = min(feasible, key=lambda o: (o.best_feasible.score, o.index))
        x, objective_value, is_feasible = best.best_feasible_x, best.best_feasible.score, True
    else:
        started = [o for o in outcomes if o.best is not None]
        if not started:
            return SearchResult(kind=ResultKind.BEST_VALUE, mode=SearchMode.SHARPNESS, criterion=requested.id,
                                target=target.id, feasible=False, evaluations=0, seed=cfg.seed)
        best = min(started, key=lambda o: (o.best.value, o.index))
        x, objective_value, is_feasible = best.best_x, best.best.value, False

    residual = inf_real(p_from_series(params_to_series(x)), grid, workers=1).value - alpha
    logger.info(f"📊 {target.id} best {'feasible' if is_feasible else 'penalised'} objective "
                f"{objective_value:.6f} (bound {target.bound!r}) after {evaluations} evaluations")
    return SearchResult(kind=ResultKind.BEST_VALUE, mode=SearchMode.SHARPNESS, criterion=requested.id,
                        target=target.id, params=_params(x), objective=objective_value, residual=residual,
                        feasible=is_feasible, evaluations=evaluations, seed=cfg.seed)


def converse_probe(alpha: float, cfg: SearchConfig) -> SearchResult:
    """
    Look for a counterexample to the converse of the order-alpha criterion:
    Re p >= alpha + 0.05 on the grid while the hypothesis certainly fails.

    The embedded report is VACUOUS (hypothesis CERTIFIED_FAIL, oracle holds).
    """
    try:
        target = make_t3(alpha)
    except UnivalenceError as e:
        raise ConfigError(f"converse probe needs alpha in [0, 1): {e.message}") from e
    grid = cfg.grid()
    logger.info(f"🔍 Converse probe for {target.id} (seed {cfg.seed})")

    def objective(x: np.ndarray) -> Trial:
        p = params_to_series(x)
        sup = sup_modulus(make_expr(p, ExprId.LHS_T3, target.alpha), grid, workers=1).value
        margin = inf_real(p_from_series(p), grid, workers=1).value - target.alpha
        hit = sup >= target.bound and margin >= CONVERSE_MARGIN
        return Trial(value=max(0.0, target.bound - sup) + max(0.0, CONVERSE_MARGIN - margin), hit=hit)

    outcomes = CoordinateDescent(objective, cfg).run()
    evaluations = sum(o.evaluations for o in outcomes)
    hit = next((o for o in outcomes if o.hit_x is not None), None)
    if hit is None:
        logger.info(f"📊 No converse counterexample for {target.id} after {evaluations} evaluations")
        return SearchResult(kind=ResultKind.NO_COUNTEREXAMPLE, mode=SearchMode.CONVERSE, criterion=target.id,
                            target=target.id, evaluations=evaluations, seed=cfg.seed)

    p = params_to_series(hit.hit_x)
    report = check(target, p, grid, VerdictOptions(), descriptor=repr(p))
    logger.info(f"✅ Converse of {target.id} refuted by {p!r}")
    return SearchResult(kind=ResultKind.COUNTEREXAMPLE, mode=SearchMode.CONVERSE, criterion=target.id,
                        target=target.id, params=_params(hit.hit_x), objective=report.hypothesis.sup,
                        residual=report.oracle.margin, feasible=True, report=report,
                        evaluations=evaluations, seed=cfg.seed)
