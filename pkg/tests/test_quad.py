import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from periodic_peg.quad import (DegenerateQuadError, QuadSimilarityType, TrapezoidType, classify_quad,
                               is_isosceles_trapezoid, trapezoid_to_reference, vertices_from_zw, zw_from_diagonal)

cs = st.floats(0.01, 0.5)
thetas = st.floats(0.05, math.pi - 0.05)
cplx = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


def test_type_validation():
    for c, th in [(0.0, 1.0), (0.6, 1.0), (0.3, 0.0), (0.3, math.pi)]:
        with pytest.raises(ValueError):
            TrapezoidType(c, th)


def test_degenerate_w_gives_one_point():
    assert set(vertices_from_zw(0.3 + 2j, 0, TrapezoidType(0.3, 1.0))) == {0.3 + 2j}


def test_vertical_line_configuration():
    p1, p2, p3, p4 = vertices_from_zw(0.5, -1 + 1j, TrapezoidType(0.5, math.pi / 2))
    assert p1 == pytest.approx(0.5j)
    assert (p1.real, p2.real, p3.real, p4.real) == pytest.approx((0, 0, 1, 1), abs=1e-15)


def test_figure_one_coordinates():
    p3, p4, p1, p2 = 0j, 4 + 0j, 3 + 3j, 1 + 3j
    cl = classify_quad(p1, p2, p3, p4)
    assert cl and cl.c == pytest.approx(1 / 3) and cl.theta == pytest.approx(math.pi / 2) and cl.balanced
    # and the same four points arise from (c, theta) = (1/3, pi/2)
    z, w = zw_from_diagonal(p1, p3, TrapezoidType(1 / 3, math.pi / 2))
    assert np.allclose(vertices_from_zw(z, w, TrapezoidType(1 / 3, math.pi / 2)), (p1, p2, p3, p4))


def test_unit_square():
    cl = classify_quad(0j, 1 + 0j, 1 + 1j, 1j)
    assert cl == pytest.approx((0.5, math.pi / 2, True))


def test_generic_quadrilateral_rejected():
    cl = classify_quad(0j, 1 + 0.2j, 1.3 + 1j, -0.1 + 0.9j)
    assert not cl and "isosceles" in cl.reason


@pytest.mark.parametrize("pts, word", [
    ((0j, 1 + 0j, 2 + 0j, 3 + 0j), "parallel"),
    ((0j, 2 + 1j, 2 + 0j, 0.5 + 1.5j), "cross"),
    ((0j, 0j, 1 + 0j, 1j), "coincide"),
])
def test_degenerate_labelings(pts, word):
    cl = classify_quad(*pts)
    assert not cl and word in cl.reason


def test_zw_round_trip_examples():
    T = TrapezoidType(0.3, 1.1)
    assert zw_from_diagonal(0j, 0j, T) == (0, 0)
    w0 = 0.4 - 1.2j
    z, w = zw_from_diagonal(T.c * w0, (T.c - 1) * w0, T)
    assert abs(z) < 1e-15 and abs(w - w0) < 1e-15


@settings(max_examples=100, deadline=None)
@given(cplx, cplx, cs, thetas)
def test_zw_round_trip(p1, p3, c, th):
    T = TrapezoidType(c, th)
    q = vertices_from_zw(*zw_from_diagonal(p1, p3, T), T)
    assert abs(q[0] - p1) <= 1e-15 * max(1, abs(p1), abs(p3)) * 4
    assert abs(q[2] - p3) <= 1e-15 * max(1, abs(p1), abs(p3)) * 4


@settings(max_examples=200, deadline=None)
@given(cplx, cplx.filter(lambda w: abs(w) > 1e-2), cs, thetas)
def test_classify_recovers_type(z, w, c, th):
    cl = classify_quad(*vertices_from_zw(z, w, TrapezoidType(c, th)))
    assert cl and cl.balanced
    assert abs(cl.c - c) < 1e-10 and abs(cl.theta - th) < 1e-10


@settings(max_examples=50, deadline=None)
@given(cplx, cplx.filter(lambda w: abs(w) > 1e-2), cs, thetas, cplx, st.floats(0.1, 10), st.floats(-4, 4))
def test_classify_similarity_invariant(z, w, c, th, shift, scale, angle):
    pts = vertices_from_zw(z, w, TrapezoidType(c, th))
    moved = [shift + scale * cmath.exp(1j * angle) * p for p in pts]
    a, b = classify_quad(*pts), classify_quad(*moved)
    assert abs(a.c - b.c) < 1e-10 and abs(a.theta - b.theta) < 1e-10


def test_translation_equivariance():
    T = TrapezoidType(0.25, 2.0)
    base = np.array(vertices_from_zw(0.1 + 0.2j, 0.7 - 0.4j, T))
    for d in (1j, 0.3 - 2j):
        assert np.allclose(vertices_from_zw(0.1 + 0.2j + d, 0.7 - 0.4j, T), base + d, atol=1e-15)


def test_long_side_first_is_relabeled():
    p1, p2, p3, p4 = vertices_from_zw(0j, 1 + 0j, TrapezoidType(0.3, 1.2))
    cl = classify_quad(p3, p4, p1, p2)
    assert cl and not cl.balanced and cl.c == pytest.approx(0.3) and cl.theta == pytest.approx(1.2)


def test_square_reference():
    q = trapezoid_to_reference(TrapezoidType(0.5, math.pi / 2))
    assert q.q1 == 0 and q.q3 == 1
    assert abs(abs(q.q2 - q.q1) - abs(q.q4 - q.q3)) < 1e-15
    assert abs(q.q2 - q.q3) == pytest.approx(abs(q.q1 - q.q2))


def test_reference_round_trip_random():
    rng = np.random.default_rng(5)
    for _ in range(100):
        T = TrapezoidType(rng.uniform(0.01, 0.5), rng.uniform(0.05, math.pi - 0.05))
        cl = classify_quad(*trapezoid_to_reference(T).vertices)
        assert cl.c == pytest.approx(T.c, abs=1e-10) and cl.theta == pytest.approx(T.theta, abs=1e-10)


def test_tiny_c_reference_rejected():
    with pytest.raises(DegenerateQuadError, match="coincide"):
        trapezoid_to_reference(TrapezoidType(1e-7, 1.0))
    trapezoid_to_reference(TrapezoidType(1e-5, 1.0))


def test_similarity_type_validation():
    with pytest.raises(DegenerateQuadError):
        QuadSimilarityType(0j, 0.5 + 0j, 1 + 0j, 0.5 + 1j)  # q2 on the diagonal, not strictly convex
    with pytest.raises(DegenerateQuadError):
        QuadSimilarityType(0j, 1 + 1j, 1 + 0j, 1 + 1j)
    with pytest.raises(DegenerateQuadError):
        QuadSimilarityType(0.1 + 0j, 1j, 1 + 0j, -1j)
    q = QuadSimilarityType.normalized(2 + 0j, 3 + 0j, 3 + 1j, 2 + 1j)
    assert q.q1 == 0 and q.q3 == 1


def test_isosceles_detection():
    assert is_isosceles_trapezoid(QuadSimilarityType.normalized(0j, 1 + 0j, 1 + 1j, 1j))
    assert is_isosceles_trapezoid(trapezoid_to_reference(TrapezoidType(0.2, 2.5)))
    assert not is_isosceles_trapezoid(QuadSimilarityType.normalized(0j, 1 + 0.2j, 1.3 + 1j, -0.1 + 0.9j))
    # unequal diagonals rule out every isosceles labeling
    rhombus = QuadSimilarityType.normalized(0j, 1 + 0j, 1.5 + 0.8j, 0.5 + 0.8j)
    assert not is_isosceles_trapezoid(rhombus)


def test_relabelings_distinct_and_same_shape():
    q = QuadSimilarityType.normalized(0j, 1 + 0.2j, 1.3 + 1j, -0.1 + 0.9j)
    labs = q.relabelings()
    assert len(labs) == 16
    sq = QuadSimilarityType.normalized(0j, 1 + 0j, 1 + 1j, 1j)
    assert len(sq.relabelings()) == 2
