import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from falforge.geometry import (
    INFINITY,
    GeneralizedCircle,
    GeometryError,
    MobiusMap,
    Point,
    TangencyError,
    dual_circle,
    inversive_product,
    mobius_apply,
    normalize_to_infinity,
    tangency_point,
)

unit = GeneralizedCircle.from_center_radius
SQ3 = math.sqrt(3.0)


def close_circle(C, center, radius, tol=1e-12):
    assert abs(C.center - center) < tol
    assert abs(C.radius - radius) < tol


# -- circles ----------------------------------------------------------------------

def test_normalization_of_constructors():
    for C in (unit(0, 1), unit(3 - 2j, 0.01), unit(1e5, 1e4), GeneralizedCircle.line(1j, 2)):
        assert C.norm_residual < 1e-12


def test_from_coefficients_rescales_huge_circles():
    C = GeneralizedCircle.from_coefficients(1e-300, 1e-150, -1e-300)
    assert C.norm_residual < 1e-12


def test_point_at_infinity_is_exclusive():
    with pytest.raises(GeometryError):
        Point(1 + 0j, True)


# -- inversive product ------------------------------------------------------------

def test_external_tangency_is_minus_one():
    # <C1, C2> = Re(b1 conj b2) - (a1 c2 + a2 c1) / 2 with C1 = (1, 0, -1), C2 = (1, -2, 3)
    assert inversive_product(unit(0, 1), unit(2, 1)) == pytest.approx(-1.0, abs=1e-15)


def test_internal_tangency_is_plus_one():
    assert inversive_product(unit(0, 2), unit(1, 1)) == pytest.approx(1.0, abs=1e-15)


def test_diameter_line_is_orthogonal():
    assert inversive_product(unit(0, 1), GeneralizedCircle.line(0, 1j)) == pytest.approx(0.0, abs=1e-15)


def test_concentric_circles_neither_tangent_nor_orthogonal():
    B = inversive_product(unit(0, 1), unit(0, 2))
    assert abs(B) > 1e-3 and abs(abs(B) - 1) > 1e-3
    # cosh of the inversive distance log 2 between concentric circles of radii 1 and 2
    assert B == pytest.approx(1.25)


def test_unnormalized_input_rejected():
    with pytest.raises(GeometryError):
        inversive_product(GeneralizedCircle(1.0, 0j, -4.0), unit(0, 1))


# -- tangency points --------------------------------------------------------------

@pytest.mark.parametrize("C1,C2,expected", [
    (unit(0, 1), unit(2, 1), 1 + 0j),
    (unit(0, 1), GeneralizedCircle.line(1j, -1), 1j),
    (unit(0, 1), unit(3, 2), 1 + 0j),
])
def test_tangency_point_examples(C1, C2, expected):
    p = tangency_point(C1, C2)
    assert abs(p.z - expected) < 1e-12
    assert C1.distance_to(p) < 1e-10 and C2.distance_to(p) < 1e-10


def test_tangency_point_of_parallel_lines_is_infinity():
    assert tangency_point(GeneralizedCircle.line(0, 1), GeneralizedCircle.line(1j, -1)) == INFINITY


def test_non_tangent_circles_report_residual():
    with pytest.raises(TangencyError) as info:
        tangency_point(unit(0, 1), unit(3, 1))
    assert info.value.residual == pytest.approx(2.5)


# -- dual circles -----------------------------------------------------------------

def test_dual_circle_of_three_unit_circles():
    D = dual_circle(unit(0, 1), unit(2, 1), unit(1 + SQ3 * 1j, 1))
    close_circle(D, 1 + 1j * SQ3 / 3, SQ3 / 3)


def test_degenerate_triple_rejected():
    with pytest.raises(GeometryError):
        dual_circle(unit(0, 1), unit(2, 1), unit(2, 1))


def random_map(rng, size=10.0):
    while True:
        m = (rng.uniform(-1, 1, 4) + 1j * rng.uniform(-1, 1, 4)) * size / math.sqrt(2)
        if abs(m[0] * m[3] - m[1] * m[2]) > 1e-2:
            return MobiusMap.from_matrix(*m)


def tangent_triple(r1, r2, r3):
    """Three mutually externally tangent circles with the given radii, counter-clockwise."""
    a, b = r1 + r2, r1 + r3
    c = r2 + r3
    angle = math.acos((a * a + b * b - c * c) / (2 * a * b))
    return unit(0, r1), unit(a, r2), unit(b * complex(math.cos(angle), math.sin(angle)), r3)


radii = st.floats(0.05, 20.0)


def same_direction(C1, C2, tol):
    u, v = C1.vector(), C2.vector()
    return np.linalg.norm(u / np.linalg.norm(u) - v / np.linalg.norm(v)) < tol


@given(radii, radii, radii)
def test_dual_circle_is_orthogonal(r1, r2, r3):
    trio = tangent_triple(r1, r2, r3)
    D = dual_circle(*trio)
    assert max(abs(inversive_product(D, C)) for C in trio) < 1e-9


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.integers(0, 2**32 - 1))
def test_dual_circle_is_mobius_equivariant(r1, r2, r3, seed):
    trio = tangent_triple(r1, r2, r3)
    M = random_map(np.random.default_rng(seed), size=3.0)
    DM = dual_circle(*(mobius_apply(M, C) for C in trio), tol=1e-7)
    assert same_direction(DM, mobius_apply(M, dual_circle(*trio)), 1e-7)


# -- Moebius maps -----------------------------------------------------------------

inversion = MobiusMap.from_matrix(0, 1, 1, 0)


def test_identity_returns_input():
    C = unit(0.3 - 1j, 2.5)
    assert mobius_apply(MobiusMap.identity(), C) == C


def test_inversion_fixes_unit_circle():
    assert mobius_apply(inversion, unit(0, 1)).same_locus(unit(0, 1), oriented=False)


def test_inversion_of_offset_circle():
    close_circle(mobius_apply(inversion, unit(2, 1)), 2 / 3, 1 / 3)


@given(st.integers(0, 2**32 - 1))
def test_inversive_product_is_mobius_invariant(seed):
    rng = np.random.default_rng(seed)
    C1 = unit(complex(*rng.normal(size=2)), rng.uniform(0.1, 3))
    C2 = unit(complex(*rng.normal(size=2)), rng.uniform(0.1, 3))
    M = random_map(rng)
    B = inversive_product(C1, C2)
    BM = inversive_product(mobius_apply(M, C1), mobius_apply(M, C2))
    assert abs(B - BM) < 1e-9 * max(1.0, abs(B))


@given(st.integers(0, 2**32 - 1))
def test_composition_and_inverse(seed):
    rng = np.random.default_rng(seed)
    A, B, C = random_map(rng), random_map(rng), random_map(rng)
    assert ((A @ B) @ C).array() == pytest.approx((A @ (B @ C)).array(), rel=1e-9, abs=1e-9)
    assert (A @ A.inverse()).distance_from_identity() < 1e-9
    assert abs(A.det - 1) < 1e-12


# -- normalization to infinity ----------------------------------------------------

def test_normalize_at_origin_makes_lines():
    phi = normalize_to_infinity(Point.at(0))
    assert phi(Point.at(0)) == INFINITY
    assert abs(mobius_apply(phi, unit(1, 1)).a) < 1e-15


def test_normalize_infinity_is_identity():
    assert normalize_to_infinity(INFINITY) == MobiusMap.identity()


def test_tangent_pair_becomes_parallel_lines_and_orthogonal_pair_crosses():
    # unit circles at 0 and 2 touch at 1; the circle orthogonal to both at 1 is the
    # real axis
    p = Point.at(1)
    phi = normalize_to_infinity(p)
    W1, W2 = mobius_apply(phi, unit(0, 1)), mobius_apply(phi, unit(2, 1))
    B1 = mobius_apply(phi, GeneralizedCircle.line(1, 1))
    assert abs(W1.a) < 1e-15 and abs(W2.a) < 1e-15 and abs(B1.a) < 1e-15
    assert abs((W1.b * W2.b.conjugate()).imag) < 1e-12
    assert abs((W1.b * B1.b.conjugate()).real) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_normalize_then_inverse_is_identity_on_circles(seed):
    rng = np.random.default_rng(seed)
    p = Point.at(complex(*rng.normal(size=2)))
    C = unit(complex(*rng.normal(size=2)), rng.uniform(0.1, 3))
    phi = normalize_to_infinity(p)
    assert mobius_apply(phi.inverse(), mobius_apply(phi, C)).same_locus(C, tol=1e-9)
