"""
Test Script for Differential Expressions
Validates the p[f] substitutions, the theorem and corollary expressions and
the two analytic identities
"""

import logging
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from errors import DomainError, InputKindError, SingularSampleError
from series_core import FamilyId, Normalization, PowerSeries, class_a_polynomial, named_family
from transforms import (
    COROLLARY_SUBSTITUTION,
    ExprId,
    Substitution,
    build_p,
    identity_zf,
    lhs_corollary,
    lhs_remark1,
    lhs_remark_t3_half,
    lhs_theorem1,
    lhs_theorem2,
    lhs_theorem3,
    lhs_zf,
    make_expr,
    p_from_series,
    remark_identity,
    sample_class_a,
    scan_points,
    schwarz_to_p,
    shifted_schwarz,
    zero_scan,
)


def _disk_points(radius=0.9, count=400, seed=0):
    rng = np.random.default_rng(seed)
    return radius * np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))


def _p(*coeffs):
    return p_from_series(PowerSeries([1, *coeffs], Normalization.CLASS_P))


def _random_class_a(rng, scale=0.1, max_degree=6):
    def tail(g):
        degree = int(g.integers(2, max_degree + 1))
        return g.uniform(-scale, scale, degree - 1) + 1j * g.uniform(-scale, scale, degree - 1)

    return sample_class_a(rng, tail)


KOEBE = named_family(FamilyId.KOEBE, 64)
Z = _disk_points()


# ============================================================================
# SUBSTITUTIONS
# ============================================================================

def test_build_p_identity_ratio_is_one():
    p = build_p(named_family(FamilyId.IDENTITY, 8), Substitution.RATIO)
    assert np.allclose(p.values(Z), 1.0, atol=1e-15)
    assert p(0) == 1


def test_build_p_koebe_ratio():
    p = build_p(KOEBE, Substitution.RATIO)
    assert abs(p(0.5) - 3.0) < 1e-12


def test_build_p_deriv():
    p = build_p(class_a_polynomial([0.5]), Substitution.DERIV)
    assert np.max(np.abs(p.values(Z) - (1 + Z))) < 1e-15
    assert p.series is not None and list(p.series.coeffs) == [1, 1]


def test_build_p_z_derivative_matches_finite_difference():
    """z p'(z) of the rational substitutions against a central difference"""
    f = class_a_polynomial([0.2, -0.1j, 0.05])
    z = _disk_points(0.7, 50, seed=3)
    h = 1e-6
    for sub in Substitution:
        p = build_p(f, sub)
        fd = z * (p.values(z + h) - p.values(z - h)) / (2 * h)
        assert np.max(np.abs(p.z_derivative(z) - fd)) < 1e-6, sub


def test_build_p_requires_class_a():
    with pytest.raises(InputKindError):
        build_p(PowerSeries([1, 0.5], Normalization.CLASS_P), Substitution.RATIO)


def test_singular_sample_scalar_and_array():
    # f' = 1 - 2z vanishes at z = 1/2
    p = build_p(class_a_polynomial([-1.0]), Substitution.CONVEXITY)
    with pytest.raises(SingularSampleError) as exc:
        p(0.5)
    assert exc.value.z == 0.5
    values = p.values(np.array([0.5, 0.25]))
    assert np.isnan(values[0]) and not np.isnan(values[1])


# ============================================================================
# THEOREM EXPRESSIONS
# ============================================================================

def test_theorem1_examples():
    assert np.max(np.abs(lhs_theorem1(_p()).values(Z))) == 0

    expr = lhs_theorem1(_p(0.5))
    assert np.max(np.abs(expr.values(Z) - (2 * Z + Z ** 2 / 4))) < 1e-14
    assert np.allclose(expr.series.coeffs, [0, 2, 0.25])

    halfplane = p_from_series(named_family(FamilyId.HALFPLANE_P, 64))
    assert abs(lhs_theorem1(halfplane)(0)) == 0


def test_theorem2_examples():
    assert np.max(np.abs(lhs_theorem2(_p()).values(Z))) == 0
    assert np.max(np.abs(lhs_theorem2(_p(1.0)).values(Z) + Z ** 2)) < 1e-14

    # (1 - z)/(1 + z) from omega = -z
    p = schwarz_to_p(PowerSeries([0, -1]))
    expected = -2 * Z ** 2 / (1 + Z) ** 2
    assert np.max(np.abs(lhs_theorem2(p).values(Z) - expected)) < 1e-12


def test_theorem3_reduces_to_theorem2_at_zero():
    rng = np.random.default_rng(8)
    for _ in range(10):
        p = _p(*(rng.uniform(-0.5, 0.5, 4) + 1j * rng.uniform(-0.5, 0.5, 4)))
        assert np.array_equal(lhs_theorem3(p, 0.0).values(Z), lhs_theorem2(p).values(Z))


def test_theorem3_examples():
    assert np.max(np.abs(lhs_theorem3(_p(), 0.5).values(Z))) < 1e-15

    expr = lhs_theorem3(_p(0.25), 0.5)
    assert np.max(np.abs(expr.values(Z) + Z ** 2 / 8)) < 1e-14
    assert np.allclose(expr.series.coeffs, [0, 0, -0.125])


def test_theorem3_bad_alpha():
    for alpha in (-0.1, 1.0, float("nan")):
        with pytest.raises(DomainError) as exc:
            lhs_theorem3(_p(), alpha)
        assert exc.value.code == "BAD_ALPHA"


def test_theorem3_scales_theorem2_of_schwarz_quotient():
    """p = (1-a)(1+w)/(1-w) + a turns the order-a functional into (1-a) * T2 of (1+w)/(1-w)"""
    omega = PowerSeries([0, 0.5, 0.2])
    for alpha in (0.25, 0.5, 0.75):
        lhs = lhs_theorem3(shifted_schwarz(omega, alpha), alpha).values(Z)
        rhs = (1 - alpha) * lhs_theorem2(schwarz_to_p(omega)).values(Z)
        assert np.max(np.abs(lhs - rhs)) < 1e-9


# ============================================================================
# COROLLARY EXPRESSIONS
# ============================================================================

def test_corollary_examples():
    identity = named_family(FamilyId.IDENTITY, 8)
    assert np.max(np.abs(lhs_corollary(identity, ExprId.LHS_C1_III).values(Z))) == 0
    assert abs(lhs_corollary(KOEBE, ExprId.LHS_C1_I)(0)) < 1e-15

    f = class_a_polynomial([1.0])
    assert np.max(np.abs(lhs_corollary(f, ExprId.LHS_C2_IV).values(Z) + Z ** 2)) < 1e-14


def test_corollaries_match_composed_theorems():
    rng = np.random.default_rng(42)
    for _ in range(25):
        f = _random_class_a(rng)
        for which, sub in COROLLARY_SUBSTITUTION.items():
            if which.value.startswith("LHS_C3"):
                continue
            theorem = lhs_theorem1 if which.value.startswith("LHS_C1") else lhs_theorem2
            direct = lhs_corollary(f, which).values(Z)
            composed = theorem(build_p(f, sub)).values(Z)
            assert np.max(np.abs(direct - composed)) < 1e-9, which


def test_polynomial_corollaries_carry_series():
    f = class_a_polynomial([0.1, 0.05])
    for which in (ExprId.LHS_C1_III, ExprId.LHS_C1_IV, ExprId.LHS_C2_III, ExprId.LHS_C2_IV):
        expr = lhs_corollary(f, which)
        assert expr.series is not None
        assert np.max(np.abs(expr.series(Z) - expr.values(Z))) < 1e-13
    assert lhs_corollary(f, ExprId.LHS_C1_I).series is None


def test_remark_t3_half_matches_theorem3():
    rng = np.random.default_rng(17)
    for _ in range(10):
        f = _random_class_a(rng)
        direct = lhs_remark_t3_half(f).values(Z)
        composed = lhs_theorem3(build_p(f, Substitution.RATIO), 0.5).values(Z)
        assert np.max(np.abs(direct - composed)) < 1e-9


def test_zf_expression_matches_starlike_corollary_modulus():
    rng = np.random.default_rng(23)
    for _ in range(10):
        f = _random_class_a(rng)
        zf = lhs_zf(f).values(Z)
        c2 = lhs_corollary(f, ExprId.LHS_C2_I).values(Z)
        assert np.max(np.abs(np.abs(zf) - np.abs(c2))) < 1e-9


# ============================================================================
# IDENTITIES
# ============================================================================

def test_identity_zf_examples():
    a, b = identity_zf(named_family(FamilyId.IDENTITY, 8))
    assert np.max(np.abs(a.values(Z))) < 1e-15 and np.max(np.abs(b.values(Z))) < 1e-15

    a, b = identity_zf(KOEBE)
    expected = -2 * Z ** 2 / (1 - Z) ** 2
    assert np.max(np.abs(a.values(Z) - expected)) < 1e-10
    assert np.max(np.abs(b.values(Z) - expected)) < 1e-10

    a, b = identity_zf(class_a_polynomial([0.3]))
    assert np.max(np.abs(a.values(Z) - b.values(Z))) < 1e-10


def test_remark_identity_examples():
    a, b = remark_identity(named_family(FamilyId.IDENTITY, 8))
    assert np.max(np.abs(a.values(Z))) < 1e-15 and np.max(np.abs(b.values(Z))) < 1e-15

    a, b = remark_identity(KOEBE)
    expected = -2 * Z / (1 - Z)
    assert np.max(np.abs(a.values(Z) - expected)) < 1e-10
    assert np.max(np.abs(b.values(Z) - expected)) < 1e-10

    # f = z + z^2 has f(-1) = 0 on the boundary only
    a, b = remark_identity(class_a_polynomial([1.0]))
    assert np.max(np.abs(a.values(Z) - b.values(Z))) < 1e-10


def test_remark1_is_first_identity_side():
    f = class_a_polynomial([0.2j, 0.1])
    assert np.array_equal(lhs_remark1(f).values(Z), remark_identity(f)[0].values(Z))


def test_identities_on_random_functions_near_boundary():
    """500 pre-scanned polynomials of degree <= 6, sampled out to |z| = 1 - 2^-8"""
    rng = np.random.default_rng(500)
    pts = scan_points()
    for _ in range(500):
        f = _random_class_a(rng)
        for pair in (identity_zf(f), remark_identity(f)):
            a, b = pair[0].values(pts), pair[1].values(pts)
            ok = ~(np.isnan(a) | np.isnan(b))
            assert np.count_nonzero(ok) > 0
            gap = float(np.max(np.abs(a[ok] - b[ok])))
            assert gap < 1e-10, f"{pair[0].label} vs {pair[1].label}: {gap:.3e} for {f!r}"


# ============================================================================
# EXPRESSION FACTORY
# ============================================================================

def test_make_expr_dispatch():
    p = PowerSeries([1, 0.5], Normalization.CLASS_P)
    handle = make_expr(p, ExprId.LHS_T1)
    assert handle.expr_id is ExprId.LHS_T1 and handle.alpha is None
    assert np.allclose(handle.series.coeffs, [0, 2, 0.25])

    t3 = make_expr(p, ExprId.LHS_T3, 0.5)
    assert t3.label == "LHS_T3(alpha=0.5)"


def test_make_expr_alpha_rules():
    p = PowerSeries([1, 0.5], Normalization.CLASS_P)
    with pytest.raises(DomainError) as exc:
        make_expr(p, ExprId.LHS_T3)
    assert exc.value.code == "BAD_ALPHA"
    with pytest.raises(DomainError):
        make_expr(p, ExprId.LHS_T2, 0.3)


def test_make_expr_input_kind():
    with pytest.raises(InputKindError):
        make_expr(named_family(FamilyId.IDENTITY, 8), ExprId.LHS_T1)
    with pytest.raises(InputKindError):
        make_expr(PowerSeries([1, 0.5], Normalization.CLASS_P), ExprId.LHS_C1_I)


def test_make_expr_c3_uses_theorem3():
    f = class_a_polynomial([0.1])
    handle = make_expr(f, ExprId.LHS_C3_III, 0.25)
    composed = lhs_theorem3(build_p(f, Substitution.DERIV), 0.25).values(Z)
    assert np.array_equal(handle.values(Z), composed)
    assert handle.series is not None


def test_zero_scan():
    points = _disk_points(0.95, 500, seed=4)
    assert zero_scan(class_a_polynomial([0.2]), points)
    # f'(z) = 1 - 2z vanishes at z = 0.5
    assert not zero_scan(class_a_polynomial([-1.0]), np.append(points, 0.5))


def test_scan_points_reach_outer_circle():
    pts = scan_points()
    assert np.max(np.abs(pts)) == pytest.approx(1 - 2 ** -8, abs=1e-15)
    assert 0.5 + 0j in pts


def test_sample_class_a_rejects_near_zero(caplog):
    draws = iter([[-1.0], [0.2]])
    with caplog.at_level(logging.INFO, logger="transforms"):
        f = sample_class_a(np.random.default_rng(0), lambda g: next(draws))
    assert list(f.coeffs) == [0, 1, 0.2]
    assert "Rejected ill-conditioned test function" in caplog.text
    assert "after 1 rejection" in caplog.text


def test_sample_class_a_gives_up():
    with pytest.raises(DomainError) as exc:
        sample_class_a(np.random.default_rng(0), lambda g: [-1.0], max_tries=3)
    assert exc.value.code == "ZERO_SCAN_EXHAUSTED"
