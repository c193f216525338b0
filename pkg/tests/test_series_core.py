"""
Test Script for the Power Series Core
Validates evaluation, coefficient arithmetic and the named families
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from errors import SeriesError
from series_core import (
    FamilyId,
    Normalization,
    PowerSeries,
    class_a_polynomial,
    coefficient_l1,
    constant,
    derivative,
    divide_by_z,
    evaluate,
    evaluate_function,
    multiply,
    named_family,
    reciprocal,
    times_z,
)


def _poly(*coeffs):
    return PowerSeries(list(coeffs))


# ============================================================================
# EVALUATION
# ============================================================================

def test_evaluate_identity():
    f = named_family(FamilyId.IDENTITY, 64)
    assert evaluate(f, 0.5) == pytest.approx(0.5, abs=1e-15)


def test_evaluate_named_families_match_closed_forms():
    """Truncated Koebe and halfplane series at moderate |z|"""
    koebe = named_family(FamilyId.KOEBE, 64)
    halfplane = named_family(FamilyId.HALFPLANE_P, 64)

    assert abs(evaluate(koebe, 0.5) - 2.0) < 1e-12
    assert abs(evaluate(halfplane, 0.5j) - (0.6 + 0.8j)) < 1e-12


def test_evaluate_function_uses_closed_form_near_boundary():
    koebe = named_family(FamilyId.KOEBE, 64)
    z = 0.999
    exact = z / (1 - z) ** 2
    assert abs(evaluate_function(koebe, z) - exact) < 1e-9 * abs(exact)
    # The truncated polynomial is far off this close to the pole
    assert abs(evaluate(koebe, z) - exact) > 1.0


def test_evaluate_vectorised_shape():
    s = _poly(1, 2, 3)
    z = np.array([[0.0, 0.5], [0.25j, -0.5]])
    values = evaluate(s, z)
    assert values.shape == z.shape
    assert values[0, 1] == pytest.approx(1 + 1 + 0.75)


def test_evaluate_out_of_disk():
    with pytest.raises(SeriesError) as exc:
        evaluate(_poly(0, 1), 0.9999)
    assert exc.value.code == "EVAL_OUT_OF_DISK"


def test_evaluate_custom_radius_cap():
    assert evaluate(_poly(0, 1), 0.9999, r_max=0.99995) == pytest.approx(0.9999)


# ============================================================================
# ARITHMETIC
# ============================================================================

def test_derivative_examples():
    d = derivative(named_family(FamilyId.IDENTITY, 8))
    assert d.coeffs[0] == 1 and not np.any(d.coeffs[1:])

    d = derivative(PowerSeries([1, 0.5], Normalization.CLASS_P))
    assert list(d.coeffs) == [0.5]

    d = derivative(named_family(FamilyId.KOEBE, 8))
    expected = np.array([n * n for n in range(1, 9)], dtype=complex)
    assert np.array_equal(d.coeffs, expected), f"got {d.coeffs}"


def test_derivative_of_constant_is_zero():
    assert list(derivative(constant(3.0)).coeffs) == [0]


def test_derivative_is_linear():
    # Integer coefficients keep every product exact in floating point
    rng = np.random.default_rng(11)
    s = PowerSeries(rng.integers(-50, 50, 9) + 1j * rng.integers(-50, 50, 9))
    t = PowerSeries(rng.integers(-50, 50, 9) + 1j * rng.integers(-50, 50, 9))
    lhs = derivative(2.0 * s + t)
    rhs = 2.0 * derivative(s) + derivative(t)
    assert np.array_equal(lhs.coeffs, rhs.coeffs)


def test_multiply_examples():
    assert np.array_equal(multiply(constant(1), _poly(1, 1), 4).coeffs, [1, 1, 0, 0, 0])
    assert np.array_equal(multiply(_poly(1, 1), _poly(1, -1), 4).coeffs, [1, 0, -1, 0, 0])

    h = named_family(FamilyId.HALFPLANE_P, 8)
    square = multiply(h, h, 4)
    assert np.array_equal(square.coeffs, [1, 4, 8, 12, 16])
    assert square.normalization is Normalization.CLASS_P


def test_multiply_agrees_with_pointwise_product():
    rng = np.random.default_rng(5)
    z = 0.5 * np.exp(2j * np.pi * rng.random(64)) * rng.random(64)
    for _ in range(20):
        a = PowerSeries(rng.uniform(-1, 1, 11) + 1j * rng.uniform(-1, 1, 11))
        b = PowerSeries(rng.uniform(-1, 1, 8) + 1j * rng.uniform(-1, 1, 8))
        product = multiply(a, b, 64)
        assert np.max(np.abs(evaluate(product, z) - evaluate(a, z) * evaluate(b, z))) < 1e-9


def test_multiply_exactness():
    a, b = _poly(1, 1), _poly(1, 1, 1)
    assert multiply(a, b).exact
    assert not multiply(a, b, 2).exact


def test_reciprocal_examples():
    assert list(reciprocal(constant(1)).coeffs) == [1]
    assert np.array_equal(reciprocal(_poly(1, -1), 4).coeffs, np.ones(5))

    g = divide_by_z(named_family(FamilyId.KOEBE, 8))
    inv = reciprocal(g, 4)
    assert np.max(np.abs(inv.coeffs - np.array([1, -2, 1, 0, 0]))) < 1e-12


def test_reciprocal_zero_constant_term():
    with pytest.raises(SeriesError) as exc:
        reciprocal(_poly(0, 1))
    assert exc.value.code == "ZERO_CONSTANT_TERM"


def test_reciprocal_inverts_class_p_series():
    """s * (1/s) is the unit series for small-coefficient CLASS_P inputs"""
    rng = np.random.default_rng(2024)
    for _ in range(25):
        n = int(rng.integers(1, 65))
        tail = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
        # l1 norm 0.5 keeps s zero-free on the closed disk
        tail *= 0.5 / np.sum(np.abs(tail))
        s = PowerSeries(np.concatenate(([1.0], tail)), Normalization.CLASS_P)
        unit = multiply(s, reciprocal(s, n), n)
        expected = np.zeros(n + 1)
        expected[0] = 1
        assert np.max(np.abs(unit.coeffs - expected)) <= 1e-12


def test_divide_by_z_examples():
    assert list(divide_by_z(named_family(FamilyId.IDENTITY, 1)).coeffs) == [1]
    assert np.array_equal(divide_by_z(_poly(0, 1, 1)).coeffs, [1, 1])

    g = divide_by_z(named_family(FamilyId.KOEBE, 10))
    assert np.array_equal(g.coeffs, np.arange(1, 11))
    assert g.normalization is Normalization.CLASS_P


def test_divide_by_z_rejects_constant_term():
    with pytest.raises(SeriesError) as exc:
        divide_by_z(_poly(1, 1))
    assert exc.value.code == "NONZERO_CONSTANT_TERM"


def test_times_z_shifts():
    assert np.array_equal(times_z(_poly(1, 2)).coeffs, [0, 1, 2])


# ============================================================================
# VALUE OBJECT & NORMALIZATION
# ============================================================================

def test_coefficients_are_read_only():
    s = _poly(1, 2)
    with pytest.raises(ValueError):
        s.coeffs[0] = 5


def test_class_a_normalization_is_checked():
    with pytest.raises(SeriesError) as exc:
        PowerSeries([0, 2, 1], Normalization.CLASS_A)
    assert exc.value.code == "BAD_NORMALIZATION"

    f = class_a_polynomial([0.3j])
    assert f.normalization is Normalization.CLASS_A
    assert f.coeffs[2] == 0.3j


def test_class_p_normalization_is_checked():
    with pytest.raises(SeriesError):
        PowerSeries([2, 1], Normalization.CLASS_P)


def test_nonfinite_coefficients_rejected():
    with pytest.raises(SeriesError):
        PowerSeries([1, np.nan])


def test_named_families():
    koebe = named_family(FamilyId.KOEBE, 5)
    assert np.array_equal(koebe.coeffs, np.arange(6))
    assert not koebe.exact and koebe.closed_form is not None

    poly = named_family(FamilyId.POLY, coeffs=[0.5, 0.25j])
    assert poly.exact and poly.normalization is Normalization.CLASS_P
    assert list(poly.coeffs) == [1, 0.5, 0.25j]

    omega = named_family(FamilyId.SCHWARZ_POLY, coeffs=[1, 0.3])
    assert list(omega.coeffs) == [0, 1, 0.3]


def test_named_family_order_must_be_positive():
    with pytest.raises(SeriesError) as exc:
        named_family(FamilyId.KOEBE, 0)
    assert exc.value.code == "BAD_ORDER"


def test_coefficient_l1():
    assert coefficient_l1(_poly(0, 2, 0.25)) == 2.25
    assert coefficient_l1(named_family(FamilyId.HALFPLANE_P, 64)) == 129


def test_series_equality_and_hash():
    a, b = _poly(1, 2), _poly(1, 2)
    assert a == b and hash(a) == hash(b)
    assert a != _poly(1, 3)
