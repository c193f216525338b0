"""
Univalence Checks - Differential Expressions
Builds the hypothesis expressions of every criterion as vectorised
pointwise functions on the disk, plus the two algebraic identities.

Conventions:
- A pointwise function accepts a complex scalar or numpy array. Array
  evaluation returns NaN at singular samples (a denominator below the
  singular tolerance); scalar evaluation raises SingularSampleError.
- Derivatives of rational substitutions use exact quotient-rule formulas on
  the evaluated f, f', f'', f'''. Finite differences are test-only.
- When the expression is an exact polynomial in z its coefficient series is
  attached as `.series` for coefficient certificates.
"""

import logging
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

from config import get_settings
from errors import DomainError, InputKindError, SingularSampleError
from series_core import (
    ArrayLike,
    Normalization,
    PowerSeries,
    class_a_polynomial,
    derivative,
    divide_by_z,
    evaluate_function,
    multiply,
    times_z,
)

logger = logging.getLogger(__name__)

VectorFn = Callable[[np.ndarray], np.ndarray]


class Substitution(str, Enum):
    RATIO = "RATIO"              # p = z f'/f
    CONVEXITY = "CONVEXITY"      # p = 1 + z f''/f'
    DERIV = "DERIV"              # p = f'
    RATIO0 = "RATIO0"            # p = f/z


class ExprId(str, Enum):
    LHS_T1 = "LHS_T1"
    LHS_T2 = "LHS_T2"
    LHS_T3 = "LHS_T3"
    LHS_C1_I = "LHS_C1_I"
    LHS_C1_II = "LHS_C1_II"
    LHS_C1_III = "LHS_C1_III"
    LHS_C1_IV = "LHS_C1_IV"
    LHS_C2_I = "LHS_C2_I"
    LHS_C2_II = "LHS_C2_II"
    LHS_C2_III = "LHS_C2_III"
    LHS_C2_IV = "LHS_C2_IV"
    LHS_ZF = "LHS_ZF"
    LHS_REMARK1 = "LHS_REMARK1"
    LHS_REMARK_T3_HALF = "LHS_REMARK_T3_HALF"
    LHS_C3_I = "LHS_C3_I"
    LHS_C3_II = "LHS_C3_II"
    LHS_C3_III = "LHS_C3_III"
    LHS_C3_IV = "LHS_C3_IV"


# Corollary item -> the p[f] substitution it composes with Theorem 1, 2 or 3
COROLLARY_SUBSTITUTION = {
    ExprId.LHS_C1_I: Substitution.RATIO,
    ExprId.LHS_C1_II: Substitution.CONVEXITY,
    ExprId.LHS_C1_III: Substitution.DERIV,
    ExprId.LHS_C1_IV: Substitution.RATIO0,
    ExprId.LHS_C2_I: Substitution.RATIO,
    ExprId.LHS_C2_II: Substitution.CONVEXITY,
    ExprId.LHS_C2_III: Substitution.DERIV,
    ExprId.LHS_C2_IV: Substitution.RATIO0,
    ExprId.LHS_C3_I: Substitution.RATIO,
    ExprId.LHS_C3_II: Substitution.CONVEXITY,
    ExprId.LHS_C3_III: Substitution.DERIV,
    ExprId.LHS_C3_IV: Substitution.RATIO0,
}

ALPHA_EXPRS = {ExprId.LHS_T3, ExprId.LHS_C3_I, ExprId.LHS_C3_II, ExprId.LHS_C3_III, ExprId.LHS_C3_IV}
P_EXPRS = {ExprId.LHS_T1, ExprId.LHS_T2, ExprId.LHS_T3}


# ============================================================================
# POINTWISE FUNCTIONS
# ============================================================================

class PointwiseFunction:
    """
    Complex function on the disk evaluated on scalars or numpy arrays.

    Attributes:
        label: human-readable name used in logs and reports
        series: exact polynomial coefficient series of the function, if any
    """

    def __init__(self, func: VectorFn, label: str, series: Optional[PowerSeries] = None):
        self._func = func
        self.label = label
        self.series = series if series is not None and series.exact else None

    def values(self, z: ArrayLike) -> np.ndarray:
        """Vectorised values; NaN marks a singular sample"""
        zz = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.asarray(self._func(zz), dtype=complex)

    def __call__(self, z: ArrayLike) -> ArrayLike:
        vals = self.values(z)
        if vals.ndim == 0:
            if np.isnan(vals):
                raise SingularSampleError(complex(z), f"{self.label} is singular at z={complex(z)!r}")
            return complex(vals)
        return vals

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label})"


class PFunction(PointwiseFunction):
    """A p with p(0) = 1, together with z*p'(z)"""

    def __init__(self, func: VectorFn, zdp: VectorFn, label: str,
                 series: Optional[PowerSeries] = None):
        super().__init__(func, label, series)
        self._zdp = zdp

    def z_derivative(self, z: ArrayLike) -> np.ndarray:
        """z * p'(z), vectorised"""
        zz = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.asarray(self._zdp(zz), dtype=complex)


class ExprHandle(PointwiseFunction):
    """A named hypothesis expression built from a source f or p"""

    def __init__(self, func: VectorFn, source: PowerSeries, expr_id: ExprId,
                 alpha: Optional[float] = None, series: Optional[PowerSeries] = None):
        if (alpha is not None) != (expr_id in ALPHA_EXPRS):
            raise DomainError(f"alpha must be given exactly for the alpha-dependent expressions, not {expr_id.value}",
                              code="BAD_ALPHA")
        label = expr_id.value if alpha is None else f"{expr_id.value}(alpha={alpha!r})"
        super().__init__(func, label, series)
        self.source = source
        self.expr_id = expr_id
        self.alpha = alpha


def _tolerance() -> float:
    return get_settings().singular_tolerance


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num/den with NaN wherever |den| falls below the singular tolerance"""
    out = num / den
    return np.where(np.abs(den) < _tolerance(), np.nan + 0j, out)


def _derivative_values(f: PowerSeries, z: np.ndarray, count: int) -> List[np.ndarray]:
    """[f(z), f'(z), ..., f^(count)(z)] from the series (closed form when known)"""
    values = []
    s = f
    for _ in range(count + 1):
        values.append(np.asarray(evaluate_function(s, z), dtype=complex))
        s = derivative(s)
    return values


def _require(f: PowerSeries, normalization: Normalization, what: str) -> None:
    if f.normalization is not normalization:
        raise InputKindError(f"{what} needs a {normalization.value} series, got {f.normalization.value}")


def _ratio(f: PowerSeries, z: np.ndarray) -> np.ndarray:
    """z f'(z)/f(z) computed as f'(z) / (f(z)/z); exactly 1 at the origin"""
    g = np.asarray(evaluate_function(divide_by_z(f), z), dtype=complex)
    df = np.asarray(evaluate_function(derivative(f), z), dtype=complex)
    p = _safe_div(df, g)
    return np.where(z == 0, 1.0 + 0j, p)


# ============================================================================
# SUBSTITUTIONS p = p[f]
# ============================================================================

def p_from_series(p: PowerSeries, label: Optional[str] = None) -> PFunction:
    """Series-backed p: values from the series, z p' from the series derivative"""
    dp = derivative(p)

    def func(z):
        return np.asarray(evaluate_function(p, z), dtype=complex)

    def zdp(z):
        return z * np.asarray(evaluate_function(dp, z), dtype=complex)

    return PFunction(func, zdp, label or "p", series=p)


def build_p(f: PowerSeries, sub: Substitution) -> PFunction:
    """
    One of the four p-choices with p(0) = 1 built from f in class A.

    RATIO: z f'/f; CONVEXITY: 1 + z f''/f'; DERIV: f'; RATIO0: f/z.

    Raises:
        InputKindError: if f is not CLASS_A
    """
    _require(f, Normalization.CLASS_A, "build_p")
    sub = Substitution(sub)

    if sub is Substitution.RATIO:
        g = divide_by_z(f)

        def func(z):
            return _ratio(f, z)

        def zdp(z):
            # z p' = p - p^2 + z^2 f''/f, with f = z g
            p = _ratio(f, z)
            _, _, d2f = _derivative_values(f, z, 2)
            gz = np.asarray(evaluate_function(g, z), dtype=complex)
            return p - p * p + z * _safe_div(d2f, gz)

        return PFunction(func, zdp, "zf'/f")

    if sub is Substitution.CONVEXITY:
        def func(z):
            _, d1, d2 = _derivative_values(f, z, 2)
            return 1.0 + z * _safe_div(d2, d1)

        def zdp(z):
            # with u = z f''/f': z p' = u + z^2 f'''/f' - u^2
            _, d1, d2, d3 = _derivative_values(f, z, 3)
            u = z * _safe_div(d2, d1)
            return u + z * z * _safe_div(d3, d1) - u * u

        return PFunction(func, zdp, "1+zf''/f'")

    if sub is Substitution.DERIV:
        p = derivative(f).with_normalization(Normalization.CLASS_P)
        return p_from_series(p, "f'")

    return p_from_series(divide_by_z(f), "f/z")


def schwarz_to_p(omega: PowerSeries, alpha: float = 0.0) -> PFunction:
    """
    p = (1-alpha)(1+omega)/(1-omega) + alpha for a Schwarz-type omega.

    alpha = 0 gives the plain Caratheodory correspondence.
    """
    _check_alpha(alpha)
    if omega.coeffs[0] != 0:
        raise InputKindError("a Schwarz-type function needs omega(0) = 0")
    domega = derivative(omega)

    def func(z):
        w = np.asarray(evaluate_function(omega, z), dtype=complex)
        return (1.0 - alpha) * _safe_div(1.0 + w, 1.0 - w) + alpha

    def zdp(z):
        w = np.asarray(evaluate_function(omega, z), dtype=complex)
        dw = np.asarray(evaluate_function(domega, z), dtype=complex)
        return (1.0 - alpha) * 2.0 * _safe_div(z * dw, (1.0 - w) ** 2)

    return PFunction(func, zdp, f"shifted_schwarz(alpha={alpha!r})")


def shifted_schwarz(omega: PowerSeries, alpha: float) -> PFunction:
    return schwarz_to_p(omega, alpha)


# ============================================================================
# THEOREM EXPRESSIONS
# ============================================================================

def _check_alpha(alpha: float) -> None:
    if not (0.0 <= alpha < 1.0) or not np.isfinite(alpha):
        raise DomainError(f"alpha must lie in [0, 1), got {alpha!r}", code="BAD_ALPHA")


def _series_expr(p: PFunction, combine: Callable[[PowerSeries, PowerSeries, PowerSeries], PowerSeries]
                 ) -> Optional[PowerSeries]:
    """Exact coefficient series of an expression in z p', p, p^2 when p is a polynomial"""
    s = p.series
    if s is None:
        return None
    return combine(times_z(derivative(s)), s, multiply(s, s))


def lhs_theorem1(p: PFunction) -> PointwiseFunction:
    """z p' + p + p^2 - 2"""
    def func(z):
        v = p.values(z)
        return p.z_derivative(z) + v + v * v - 2.0

    series = _series_expr(p, lambda zdp, s, s2: zdp + s + s2 - 2)
    return PointwiseFunction(func, f"T1[{p.label}]", series)


def lhs_theorem2(p: PFunction) -> PointwiseFunction:
    """z p' + p - p^2"""
    def func(z):
        v = p.values(z)
        return p.z_derivative(z) + v - v * v

    series = _series_expr(p, lambda zdp, s, s2: zdp + s - s2)
    return PointwiseFunction(func, f"T2[{p.label}]", series)


def lhs_theorem3(p: PFunction, alpha: float) -> PointwiseFunction:
    """
    z p' + (1+a)/(1-a) p - 1/(1-a) p^2 - a/(1-a).

    At alpha = 0 every operation reduces to those of lhs_theorem2, so the
    two agree bit for bit.

    Raises:
        DomainError(BAD_ALPHA): alpha outside [0, 1)
    """
    _check_alpha(alpha)
    a1 = (1.0 + alpha) / (1.0 - alpha)
    a2 = 1.0 / (1.0 - alpha)
    a0 = alpha / (1.0 - alpha)

    def func(z):
        v = p.values(z)
        return p.z_derivative(z) + a1 * v - a2 * (v * v) - a0

    series = _series_expr(p, lambda zdp, s, s2: zdp + a1 * s - a2 * s2 - a0)
    return PointwiseFunction(func, f"T3(alpha={alpha!r})[{p.label}]", series)


# ============================================================================
# COROLLARY EXPRESSIONS (evaluated directly from f)
# ============================================================================

def _corollary_values(f: PowerSeries, which: ExprId, z: np.ndarray) -> np.ndarray:
    f0, d1, d2, d3 = _derivative_values(f, z, 3)
    g = np.asarray(evaluate_function(divide_by_z(f), z), dtype=complex)

    if which in (ExprId.LHS_C1_I, ExprId.LHS_C2_I):
        ratio = _ratio(f, z)
        u = z * _safe_div(d2, d1)
        if which is ExprId.LHS_C1_I:
            return ratio * (2.0 + u) - 2.0
        return ratio * (2.0 - 2.0 * ratio + u)

    if which in (ExprId.LHS_C1_II, ExprId.LHS_C2_II):
        u = z * _safe_div(d2, d1)
        z2d3 = z * z * _safe_div(d3, d1)
        if which is ExprId.LHS_C1_II:
            return z2d3 + 4.0 * u
        return z2d3 - 2.0 * u * u

    if which is ExprId.LHS_C1_III:
        return z * d2 + d1 + d1 * d1 - 2.0
    if which is ExprId.LHS_C2_III:
        return z * d2 + d1 - d1 * d1
    if which is ExprId.LHS_C1_IV:
        return d1 + g * g - 2.0
    return d1 - g * g


def _corollary_series(f: PowerSeries, which: ExprId) -> Optional[PowerSeries]:
    """Polynomial expressions (items iii and iv) for polynomial f"""
    if not f.exact:
        return None
    d1 = derivative(f)
    if which in (ExprId.LHS_C1_III, ExprId.LHS_C2_III):
        zd2 = times_z(derivative(d1))
        sq = multiply(d1, d1)
        return zd2 + d1 + sq - 2 if which is ExprId.LHS_C1_III else zd2 + d1 - sq
    if which in (ExprId.LHS_C1_IV, ExprId.LHS_C2_IV):
        g = divide_by_z(f)
        sq = multiply(g, g)
        return d1 + sq - 2 if which is ExprId.LHS_C1_IV else d1 - sq
    return None


def lhs_corollary(f: PowerSeries, which: ExprId) -> PointwiseFunction:
    """
    The displayed corollary expression, evaluated directly from f and its
    derivatives (the cross-check counterpart of build_p + lhs_theorem1/2).

    Args:
        f: CLASS_A series
        which: one of LHS_C1_I..LHS_C1_IV, LHS_C2_I..LHS_C2_IV

    Returns:
        PointwiseFunction (NaN at singular samples)
    """
    which = ExprId(which)
    if which not in COROLLARY_SUBSTITUTION or which.value.startswith("LHS_C3"):
        raise DomainError(f"{which.value} is not a corollary item", code="BAD_DOMAIN")
    _require(f, Normalization.CLASS_A, "lhs_corollary")

    def func(z):
        return _corollary_values(f, which, z)

    return PointwiseFunction(func, which.value, _corollary_series(f, which))


def lhs_zf(f: PowerSeries) -> PointwiseFunction:
    """
    z f(z) [z/f(z)]'', the [z/f]'' criterion expression.

    With g = f/z, [z/f]'' = (2 g'^2 - g g'')/g^3. The extra factor z leaves
    the supremum over the disk equal to that of f [z/f]'' and makes the
    modulus agree pointwise with the starlike corollary expression.
    """
    _require(f, Normalization.CLASS_A, "lhs_zf")
    g = divide_by_z(f)

    def func(z):
        g0, g1, g2 = _derivative_values(g, z, 2)
        fz = np.asarray(evaluate_function(f, z), dtype=complex)
        second = _safe_div(2.0 * g1 * g1 - g0 * g2, g0 ** 3)
        return z * fz * second

    return PointwiseFunction(func, "z f [z/f]''")


def lhs_remark1(f: PowerSeries) -> PointwiseFunction:
    """f(z) [z/f(z)]' = -z g'(z)/g(z) with g = f/z"""
    _require(f, Normalization.CLASS_A, "lhs_remark1")
    g = divide_by_z(f)

    def func(z):
        g0, g1 = _derivative_values(g, z, 1)
        return -z * _safe_div(g1, g0)

    return PointwiseFunction(func, "f [z/f]'")


def lhs_remark_t3_half(f: PowerSeries) -> PointwiseFunction:
    """z f'/f [4 - 3 z f'/f + z f''/f'] - 1, the order-1/2 starlike test"""
    _require(f, Normalization.CLASS_A, "lhs_remark_t3_half")

    def func(z):
        _, d1, d2 = _derivative_values(f, z, 2)
        ratio = _ratio(f, z)
        return ratio * (4.0 - 3.0 * ratio + z * _safe_div(d2, d1)) - 1.0

    return PointwiseFunction(func, "zf'/f[4-3zf'/f+zf''/f']-1")


# ============================================================================
# IDENTITIES
# ============================================================================

def identity_zf(f: PowerSeries) -> Tuple[PointwiseFunction, PointwiseFunction]:
    """
    (z p' + p - p^2 for p = z f'/f,  -z f(z) [z/f(z)]'').

    The two sides agree analytically; evaluating both on a grid checks the
    implementation of the starlike corollary against the [z/f]'' form.
    """
    lhs_a = lhs_theorem2(build_p(f, Substitution.RATIO))
    g = divide_by_z(f)

    def func(z):
        g0, g1, g2 = _derivative_values(g, z, 2)
        fz = np.asarray(evaluate_function(f, z), dtype=complex)
        # (1/g)'' = (2 g'^2 - g g'')/g^3
        second = _safe_div(2.0 * g1 * g1 - g0 * g2, g0 ** 3)
        return -z * fz * second

    return lhs_a, PointwiseFunction(func, "-z f [z/f]''")


def remark_identity(f: PowerSeries) -> Tuple[PointwiseFunction, PointwiseFunction]:
    """(f(z) [z/f(z)]',  1 - z f'(z)/f(z))"""
    lhs_a = lhs_remark1(f)

    def func(z):
        return 1.0 - _ratio(f, z)

    return lhs_a, PointwiseFunction(func, "1 - zf'/f")


# ============================================================================
# EXPRESSION FACTORY
# ============================================================================

def make_expr(source: PowerSeries, expr_id: ExprId, alpha: Optional[float] = None) -> ExprHandle:
    """
    Build the named hypothesis expression for a source function.

    Args:
        source: CLASS_P series for LHS_T1/T2/T3, CLASS_A series otherwise
        expr_id: which expression
        alpha: order parameter, required exactly for LHS_T3 and LHS_C3_*

    Returns:
        ExprHandle evaluable on scalars or arrays
    """
    expr_id = ExprId(expr_id)
    if expr_id in ALPHA_EXPRS:
        if alpha is None:
            raise DomainError(f"{expr_id.value} needs alpha", code="BAD_ALPHA")
        _check_alpha(alpha)

    if expr_id in P_EXPRS:
        _require(source, Normalization.CLASS_P, expr_id.value)
        p = p_from_series(source)
        if expr_id is ExprId.LHS_T1:
            inner = lhs_theorem1(p)
        elif expr_id is ExprId.LHS_T2:
            inner = lhs_theorem2(p)
        else:
            inner = lhs_theorem3(p, alpha)
    elif expr_id in (ExprId.LHS_C3_I, ExprId.LHS_C3_II, ExprId.LHS_C3_III, ExprId.LHS_C3_IV):
        inner = lhs_theorem3(build_p(source, COROLLARY_SUBSTITUTION[expr_id]), alpha)
    elif expr_id in COROLLARY_SUBSTITUTION:
        inner = lhs_corollary(source, expr_id)
    elif expr_id is ExprId.LHS_ZF:
        inner = lhs_zf(source)
    elif expr_id is ExprId.LHS_REMARK1:
        inner = lhs_remark1(source)
    else:
        inner = lhs_remark_t3_half(source)

    return ExprHandle(inner.values, source, expr_id, alpha, inner.series)


def zero_scan(f: PowerSeries, points: np.ndarray, tolerance: Optional[float] = None) -> bool:
    """
    Pre-scan a random test function for near-zeros of f or f'.

    Returns:
        True when |f| and |f'| stay above the tolerance at every point;
        False (and a logged warning) otherwise
    """
    tol = get_settings().zero_scan_tolerance if tolerance is None else tolerance
    pts = np.asarray(points, dtype=complex)
    pts = pts[pts != 0]
    fz, d1 = _derivative_values(f, pts, 1)
    worst = float(min(np.min(np.abs(fz)), np.min(np.abs(d1)))) if pts.size else np.inf
    if worst < tol:
        logger.warning(f"⚠️ Rejected ill-conditioned test function (min |f|,|f'| = {worst:.3e}): {f!r}")
        return False
    return True


def scan_points(radius: float = 1.0 - 2.0 ** -8, levels: int = 8, angles: int = 256) -> np.ndarray:
    """Concentric circles 1 - 2^-j (j = 1..levels, capped at radius) used by the zero pre-scan"""
    radii = np.minimum(1.0 - 2.0 ** -np.arange(1, levels + 1), radius)
    thetas = 2.0 * np.pi * np.arange(angles) / angles
    return (radii[:, None] * np.exp(1j * thetas)[None, :]).ravel()


def sample_class_a(rng: np.random.Generator, draw_tail: Callable[[np.random.Generator], np.ndarray],
                   points: Optional[np.ndarray] = None, max_tries: int = 100) -> PowerSeries:
    """
    Draw a random polynomial z + a_2 z^2 + ... that passes the zero pre-scan.

    Args:
        rng: generator handed to draw_tail
        draw_tail: returns the coefficients a_2, a_3, ... of one candidate
        points: pre-scan sample points (default: scan_points())
        max_tries: candidates drawn before giving up

    Raises:
        DomainError(ZERO_SCAN_EXHAUSTED): every candidate was rejected
    """
    pts = scan_points() if points is None else points
    for attempt in range(max_tries):
        f = class_a_polynomial(draw_tail(rng))
        if zero_scan(f, pts):
            if attempt:
                logger.info(f"🔍 Accepted random test function after {attempt} rejection(s)")
            return f
    raise DomainError(f"no random test function passed the zero pre-scan in {max_tries} draws",
                      code="ZERO_SCAN_EXHAUSTED", tries=max_tries)
