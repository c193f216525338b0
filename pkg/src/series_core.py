"""
Univalence Checks - Power Series Core
Truncated complex Taylor series for the functions f, p and omega, plus the
catalogue of named test functions.

A PowerSeries carries its coefficients c_0..c_N and, for the named
families, an exact closed form P(z)/(1-z)^m. Coefficient arithmetic is
used for certificates; the closed form is used for pointwise values near
the boundary where a truncated tail would dominate.
"""

import logging
import math
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from config import get_settings
from errors import SeriesError

logger = logging.getLogger(__name__)

ArrayLike = Union[complex, float, np.ndarray]

# Points this close beyond the cap are rounding from r*exp(i*theta)
_CAP_SLACK = 1e-12


class Normalization(str, Enum):
    RAW = "RAW"
    CLASS_A = "CLASS_A"      # f(z) = z + a_2 z^2 + ...
    CLASS_P = "CLASS_P"      # p(0) = 1


class FamilyId(str, Enum):
    IDENTITY = "IDENTITY"
    KOEBE = "KOEBE"
    HALFPLANE_P = "HALFPLANE_P"
    POLY = "POLY"
    SCHWARZ_POLY = "SCHWARZ_POLY"


# ============================================================================
# CLOSED FORMS: P(z) / (1 - z)^m
# ============================================================================

class PoleRational:
    """
    Rational function P(z)/(1-z)^m with a single pole at z = 1.

    Closed under differentiation, multiplication, shifting by z and
    division by z (when P(0) = 0), which covers every named family and
    every operation the transforms apply to them.
    """

    __slots__ = ("numerator", "pole_order")

    def __init__(self, numerator: Sequence[complex], pole_order: int):
        num = np.trim_zeros(np.asarray(numerator, dtype=complex), "b")
        if num.size == 0:
            num = np.zeros(1, dtype=complex)
        num.setflags(write=False)
        self.numerator = num
        self.pole_order = int(pole_order)

    def __call__(self, z: ArrayLike) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        value = np.polyval(self.numerator[::-1], z)
        if self.pole_order:
            value = value / (1.0 - z) ** self.pole_order
        return value

    def derivative(self) -> "PoleRational":
        # d/dz P/(1-z)^m = [P'(1-z) + m P] / (1-z)^(m+1)
        p = self.numerator
        dp = p[1:] * np.arange(1, p.size) if p.size > 1 else np.zeros(1, dtype=complex)
        if self.pole_order == 0:
            return PoleRational(dp, 0)
        dp_times_one_minus_z = np.zeros(p.size + 1, dtype=complex)
        dp_times_one_minus_z[:dp.size] += dp
        dp_times_one_minus_z[1:dp.size + 1] -= dp
        numerator = dp_times_one_minus_z
        numerator[:p.size] += self.pole_order * p
        return PoleRational(numerator, self.pole_order + 1)

    def times(self, other: "PoleRational") -> "PoleRational":
        return PoleRational(np.convolve(self.numerator, other.numerator),
                            self.pole_order + other.pole_order)

    def times_z(self) -> "PoleRational":
        return PoleRational(np.concatenate(([0j], self.numerator)), self.pole_order)

    def divide_by_z(self) -> "PoleRational":
        if self.numerator[0] != 0:
            raise SeriesError("closed form does not vanish at the origin", code="NONZERO_CONSTANT_TERM")
        return PoleRational(self.numerator[1:], self.pole_order)

    def scaled(self, a: complex) -> "PoleRational":
        return PoleRational(self.numerator * a, self.pole_order)

    def __repr__(self) -> str:
        return f"PoleRational(numerator={self.numerator.tolist()}, pole_order={self.pole_order})"


# ============================================================================
# POWER SERIES
# ============================================================================

class PowerSeries:
    """
    Immutable truncated power series c_0 + c_1 z + ... + c_N z^N.

    Attributes:
        coeffs: read-only complex numpy array of length N+1
        normalization: RAW, CLASS_A or CLASS_P
        exact: True when the coefficients are the whole function (a polynomial)
        closed_form: optional PoleRational giving exact pointwise values
    """

    __slots__ = ("_coeffs", "_normalization", "_exact", "_closed_form")

    def __init__(
        self,
        coeffs: Iterable[complex],
        normalization: Normalization = Normalization.RAW,
        exact: bool = True,
        closed_form: Optional[PoleRational] = None,
    ):
        arr = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs, dtype=complex)
        if arr.ndim != 1 or arr.size == 0:
            raise SeriesError("a power series needs at least one coefficient", code="BAD_ORDER")
        if not np.all(np.isfinite(arr)):
            raise SeriesError("power series coefficients must be finite", code="NONFINITE_COEFFICIENT")

        normalization = Normalization(normalization)
        if normalization is Normalization.CLASS_A:
            if arr.size < 2 or arr[0] != 0 or arr[1] != 1:
                raise SeriesError("class A series needs c_0 = 0 and c_1 = 1", code="BAD_NORMALIZATION")
        elif normalization is Normalization.CLASS_P:
            if arr[0] != 1:
                raise SeriesError("class P series needs c_0 = 1", code="BAD_NORMALIZATION")

        arr.setflags(write=False)
        self._coeffs = arr
        self._normalization = normalization
        self._exact = bool(exact)
        self._closed_form = closed_form

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def order(self) -> int:
        return self._coeffs.size - 1

    @property
    def normalization(self) -> Normalization:
        return self._normalization

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def closed_form(self) -> Optional[PoleRational]:
        return self._closed_form

    def function_form(self) -> Optional[PoleRational]:
        """Exact representation of the whole function, if one is known"""
        if self._closed_form is not None:
            return self._closed_form
        if self._exact:
            return PoleRational(self._coeffs, 0)
        return None

    def with_normalization(self, normalization: Normalization) -> "PowerSeries":
        return PowerSeries(self._coeffs, normalization, self._exact, self._closed_form)

    def padded(self, order: int) -> "PowerSeries":
        """Same function with zero coefficients appended up to `order`"""
        if order <= self.order:
            return self
        arr = np.zeros(order + 1, dtype=complex)
        arr[:self._coeffs.size] = self._coeffs
        return PowerSeries(arr, self._normalization, self._exact, self._closed_form)

    def __call__(self, z: ArrayLike) -> ArrayLike:
        return evaluate(self, z)

    # Linear arithmetic (coefficientwise, padded to the longer order)

    def __add__(self, other: Union["PowerSeries", complex]) -> "PowerSeries":
        if not isinstance(other, PowerSeries):
            other = constant(other)
        order = max(self.order, other.order)
        a, b = self.padded(order), other.padded(order)
        form = None
        fa, fb = self.function_form(), other.function_form()
        if self._closed_form is not None or other.closed_form is not None:
            if fa is not None and fb is not None and fa.pole_order == fb.pole_order:
                size = max(fa.numerator.size, fb.numerator.size)
                num = np.zeros(size, dtype=complex)
                num[:fa.numerator.size] += fa.numerator
                num[:fb.numerator.size] += fb.numerator
                form = PoleRational(num, fa.pole_order)
        return PowerSeries(a.coeffs + b.coeffs, Normalization.RAW, self._exact and other.exact, form)

    __radd__ = __add__

    def __neg__(self) -> "PowerSeries":
        form = self._closed_form.scaled(-1) if self._closed_form is not None else None
        return PowerSeries(-self._coeffs, Normalization.RAW, self._exact, form)

    def __sub__(self, other: Union["PowerSeries", complex]) -> "PowerSeries":
        if not isinstance(other, PowerSeries):
            other = constant(other)
        return self + (-other)

    def __rsub__(self, other: complex) -> "PowerSeries":
        return constant(other) + (-self)

    def __mul__(self, a: complex) -> "PowerSeries":
        if isinstance(a, PowerSeries):
            return NotImplemented
        form = self._closed_form.scaled(a) if self._closed_form is not None else None
        return PowerSeries(self._coeffs * a, Normalization.RAW, self._exact, form)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return self.order == other.order and bool(np.array_equal(self._coeffs, other.coeffs))

    def __hash__(self) -> int:
        return hash((self.order, self._coeffs.tobytes()))

    def __repr__(self) -> str:
        shown = ", ".join(f"{c:g}" for c in self._coeffs[:6])
        more = ", ..." if self.order >= 6 else ""
        return f"PowerSeries([{shown}{more}], order={self.order}, {self._normalization.value})"


def constant(c: complex, order: int = 0) -> PowerSeries:
    arr = np.zeros(order + 1, dtype=complex)
    arr[0] = c
    return PowerSeries(arr)


def _check_radius(z: np.ndarray, r_max: Optional[float]) -> None:
    cap = get_settings().eval_radius_cap if r_max is None else r_max
    if z.size and np.max(np.abs(z)) > cap * (1.0 + _CAP_SLACK):
        raise SeriesError(f"evaluation point outside |z| <= {cap}", code="EVAL_OUT_OF_DISK",
                          max_modulus=float(np.max(np.abs(z))))


# ============================================================================
# OPERATIONS
# ============================================================================

def evaluate(s: PowerSeries, z: ArrayLike, r_max: Optional[float] = None) -> ArrayLike:
    """
    Horner evaluation of the truncated polynomial.

    Args:
        s: series to evaluate
        z: complex point or numpy array of points
        r_max: evaluation cap (defaults to the configured cap, 1 - 2^-12)

    Returns:
        complex value, or an array of the same shape as z

    Raises:
        SeriesError(EVAL_OUT_OF_DISK): if some |z| exceeds r_max
    """
    zz = np.asarray(z, dtype=complex)
    _check_radius(zz, r_max)
    value = np.polyval(s.coeffs[::-1], zz)
    return complex(value) if value.ndim == 0 else value


def evaluate_function(s: PowerSeries, z: ArrayLike, r_max: Optional[float] = None) -> ArrayLike:
    """Value of the function the series represents: closed form when known, else Horner"""
    form = s.closed_form
    if form is None:
        return evaluate(s, z, r_max)
    zz = np.asarray(z, dtype=complex)
    _check_radius(zz, r_max)
    value = form(zz)
    return complex(value) if value.ndim == 0 else value


def derivative(s: PowerSeries) -> PowerSeries:
    """Term-by-term derivative; order drops by one (a constant differentiates to 0)"""
    if s.order == 0:
        return PowerSeries([0j], Normalization.RAW, s.exact,
                           PoleRational([0j], 0) if s.closed_form is not None else None)
    coeffs = s.coeffs[1:] * np.arange(1, s.order + 1)
    form = s.closed_form.derivative() if s.closed_form is not None else None
    return PowerSeries(coeffs, Normalization.RAW, s.exact, form)


def multiply(a: PowerSeries, b: PowerSeries, order: Optional[int] = None) -> PowerSeries:
    """
    Cauchy product truncated at `order` (default: the exact product order).

    The product stays exact when both factors are exact and nothing was
    truncated.
    """
    full = np.convolve(a.coeffs, b.coeffs)
    if order is None:
        order = a.order + b.order
    coeffs = np.zeros(order + 1, dtype=complex)
    keep = min(order + 1, full.size)
    coeffs[:keep] = full[:keep]

    exact = a.exact and b.exact and order >= a.order + b.order
    fa, fb = a.function_form(), b.function_form()
    form = None
    if (a.closed_form is not None or b.closed_form is not None) and fa is not None and fb is not None:
        form = fa.times(fb)

    normalization = Normalization.RAW
    if a.normalization is Normalization.CLASS_P and b.normalization is Normalization.CLASS_P:
        normalization = Normalization.CLASS_P
    return PowerSeries(coeffs, normalization, exact, form)


def reciprocal(s: PowerSeries, order: Optional[int] = None) -> PowerSeries:
    """
    Series r with s*r = 1 + O(z^(order+1)).

    Raises:
        SeriesError(ZERO_CONSTANT_TERM): if |c_0| < 1e-300
    """
    order = s.order if order is None else order
    c = s.padded(order).coeffs
    c0 = c[0]
    if abs(c0) < 1e-300:
        raise SeriesError("reciprocal needs a nonzero constant term", code="ZERO_CONSTANT_TERM")

    r = np.zeros(order + 1, dtype=complex)
    r[0] = 1.0 / c0
    for n in range(1, order + 1):
        r[n] = -np.dot(c[1:n + 1], r[n - 1::-1]) / c0

    # Exact only when the inverse is itself a polynomial that fits (constants)
    exact = s.exact and s.order == 0
    normalization = Normalization.CLASS_P if s.normalization is Normalization.CLASS_P else Normalization.RAW
    return PowerSeries(r, normalization, exact)


def divide_by_z(s: PowerSeries) -> PowerSeries:
    """
    Shift coefficients down by one (f(z)/z).

    Raises:
        SeriesError(NONZERO_CONSTANT_TERM): if c_0 != 0
    """
    if s.coeffs[0] != 0:
        raise SeriesError("divide_by_z needs c_0 = 0", code="NONZERO_CONSTANT_TERM")
    coeffs = s.coeffs[1:] if s.order > 0 else np.zeros(1, dtype=complex)
    form = s.closed_form.divide_by_z() if s.closed_form is not None else None
    normalization = Normalization.CLASS_P if s.normalization is Normalization.CLASS_A else Normalization.RAW
    return PowerSeries(coeffs, normalization, s.exact, form)


def times_z(s: PowerSeries) -> PowerSeries:
    """Multiply by the monomial z (coefficients shifted up by one)"""
    coeffs = np.concatenate(([0j], s.coeffs))
    form = s.closed_form.times_z() if s.closed_form is not None else None
    return PowerSeries(coeffs, Normalization.RAW, s.exact, form)


# ============================================================================
# NAMED FAMILIES
# ============================================================================

def named_family(family: FamilyId, order: Optional[int] = None,
                 coeffs: Sequence[complex] = ()) -> PowerSeries:
    """
    Build a catalogue test function.

    Args:
        family: IDENTITY (f=z), KOEBE (z/(1-z)^2), HALFPLANE_P ((1+z)/(1-z)),
            POLY (p = 1 + c_1 z + ...), SCHWARZ_POLY (omega = c_1 z + ...)
        order: truncation order for the infinite families (default: configured N)
        coeffs: c_1, c_2, ... for POLY and SCHWARZ_POLY (c_0 is forced)

    Returns:
        PowerSeries with integer-formula coefficients
    """
    family = FamilyId(family)
    n = get_settings().series_order if order is None else order
    if n < 1 and family in (FamilyId.IDENTITY, FamilyId.KOEBE, FamilyId.HALFPLANE_P):
        raise SeriesError("named families need order >= 1", code="BAD_ORDER")

    if family is FamilyId.IDENTITY:
        arr = np.zeros(n + 1, dtype=complex)
        arr[1] = 1
        return PowerSeries(arr, Normalization.CLASS_A, exact=True)

    if family is FamilyId.KOEBE:
        arr = np.arange(n + 1, dtype=float).astype(complex)
        return PowerSeries(arr, Normalization.CLASS_A, exact=False,
                           closed_form=PoleRational([0, 1], 2))

    if family is FamilyId.HALFPLANE_P:
        arr = np.full(n + 1, 2, dtype=complex)
        arr[0] = 1
        return PowerSeries(arr, Normalization.CLASS_P, exact=False,
                           closed_form=PoleRational([1, 1], 1))

    tail = [complex(c) for c in coeffs]
    if family is FamilyId.POLY:
        return PowerSeries([1 + 0j] + tail, Normalization.CLASS_P, exact=True)

    return PowerSeries([0j] + (tail or [0j]), Normalization.RAW, exact=True)


def class_a_polynomial(coeffs: Sequence[complex]) -> PowerSeries:
    """f(z) = z + a_2 z^2 + a_3 z^3 + ... from [a_2, a_3, ...]"""
    return PowerSeries([0j, 1 + 0j] + [complex(c) for c in coeffs], Normalization.CLASS_A, exact=True)


def coefficient_l1(s: PowerSeries) -> float:
    """Sum of coefficient moduli, accumulated without cancellation"""
    return math.fsum(np.abs(s.coeffs).tolist())
