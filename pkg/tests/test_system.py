import math

import numpy as np
import pytest

from periodic_peg.curve import FourierCurve, Polyline, VerticalLine
from periodic_peg.quad import QuadSimilarityType, TrapezoidType, classify_quad, trapezoid_to_reference
from periodic_peg.solver import vertical_line_solutions
from periodic_peg.system import (InscriptionParams, general_residual, jacobian, residual, translate, vertices)


def _fd_jacobian(g1, g2, shape, x, h=1e-6):
    f = residual if isinstance(shape, TrapezoidType) else general_residual
    J = np.empty((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        J[:, j] = (f(g1, g2, shape, InscriptionParams(*(x + e))).r
                   - f(g1, g2, shape, InscriptionParams(*(x - e))).r) / (2 * h)
    return J


def _random_fourier(rng, center, modes=3, amp=0.08):
    m = {k: amp / modes * complex(*rng.uniform(-1, 1, 2)) for k in range(-modes, modes + 1) if k}
    m[0] = center
    return FourierCurve.from_modes(m)


def test_zero_at_closed_form_solution(square):
    ins = vertical_line_solutions(0.0, 1.0, square, 0.0)
    assert residual(VerticalLine(0.0), VerticalLine(1.0), square, ins.params).norm < 1e-15


def test_residual_is_order_amplitude_near_lines(square):
    ins = vertical_line_solutions(0.0, 1.0, square, 0.0)
    g1 = FourierCurve.from_modes({1: 1e-3, -2: 0.5e-3j})
    g2 = FourierCurve.from_modes({0: 1.0, 1: -0.7e-3, 3: 0.3e-3})
    r = residual(g1, g2, square, ins.params).norm
    assert 1e-5 < r < 1e-2


def test_translation_invariance():
    rng = np.random.default_rng(1)
    g1, g2 = _random_fourier(rng, 0.0), _random_fourier(rng, 1.0)
    T = TrapezoidType(0.3, 1.3)
    for _ in range(100):
        p = InscriptionParams(*rng.uniform(-2, 2, 4))
        assert translate(p, 0) == p
        base = residual(g1, g2, T, p).r
        for k in range(-3, 4):
            q = translate(p, k)
            assert np.max(np.abs(residual(g1, g2, T, q).r - base)) < 1e-12
            assert np.allclose(vertices(g1, g2, q), np.array(vertices(g1, g2, p)) + 1j * k, atol=1e-12)


def test_general_residual_reduces_to_trapezoid_residual():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        T = TrapezoidType(rng.uniform(0.01, 0.5), rng.uniform(0.05, math.pi - 0.05))
        q = trapezoid_to_reference(T)
        g1, g2 = VerticalLine(rng.uniform(-1, 0)), FourierCurve.from_modes({0: 1.0, 1: 0.05, -1: 0.02j})
        p = InscriptionParams(*rng.uniform(-1, 1, 4))
        worst = max(worst, np.max(np.abs(general_residual(g1, g2, q, p).r - residual(g1, g2, T, p).r)))
    assert worst < 1e-14


def test_square_type_on_lines_has_closed_form_zeros(square):
    q = QuadSimilarityType.normalized(0j, 1 + 0j, 1 + 1j, 1j)
    for s in (-0.4, 0.0, 0.77):
        ins = vertical_line_solutions(0.0, 1.0, square, s)
        assert general_residual(VerticalLine(0.0), VerticalLine(1.0), q, ins.params).norm < 1e-15


def test_jacobian_tangent_columns():
    rng = np.random.default_rng(3)
    g1, g2 = _random_fourier(rng, 0.0), _random_fourier(rng, 1.0)
    T = TrapezoidType(0.4, 2.0)
    p = InscriptionParams(0.1, 0.3, -0.2, 0.5)
    J = jacobian(g1, g2, T, p)
    d2, d4 = g1.deriv(p.t2), g2.deriv(p.t4)
    assert np.allclose(J[:, 1], [d2.real, d2.imag, 0, 0], atol=1e-15)
    assert np.allclose(J[:, 3], [0, 0, d4.real, d4.imag], atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_jacobian_matches_central_differences(seed):
    rng = np.random.default_rng(100 + seed)
    g1, g2 = _random_fourier(rng, -0.5), _random_fourier(rng, 0.5)
    T = TrapezoidType(rng.uniform(0.05, 0.5), rng.uniform(0.2, 3.0))
    Q = QuadSimilarityType.normalized(0j, 1 + 0.2j, 1.3 + 1j, -0.1 + 0.9j)
    for shape in (T, Q):
        for _ in range(20):
            x = rng.uniform(-1.5, 1.5, 4)
            J = jacobian(g1, g2, shape, InscriptionParams(*x))
            assert np.max(np.abs(J - _fd_jacobian(g1, g2, shape, x))) < 1e-5


def test_vertical_line_jacobian_rank_three(square):
    for s in (0.0, 0.3):
        ins = vertical_line_solutions(0.0, 1.0, square, s)
        S = np.linalg.svd(jacobian(VerticalLine(0.0), VerticalLine(1.0), square, ins.params), compute_uv=False)
        assert S[2] > 0.1 and S[3] < 1e-12


def test_jacobian_rejects_polylines(square):
    p = Polyline(np.array([0.0, 0.1 + 0.5j]))
    with pytest.raises(ValueError, match="mollify"):
        jacobian(p, VerticalLine(1.0), square, InscriptionParams(0, 0, 0, 0))


def test_zero_certifies_balanced_inscription():
    T = TrapezoidType(0.35, 1.9)
    ins = vertical_line_solutions(-0.2, 0.9, T, 0.4)
    g1, g2 = VerticalLine(-0.2), VerticalLine(0.9)
    assert residual(g1, g2, T, ins.params).norm < 1e-9
    cl = classify_quad(*vertices(g1, g2, ins.params))
    assert cl.balanced and abs(cl.c - T.c) < 1e-6 and abs(cl.theta - T.theta) < 1e-6
    assert abs(ins.w) >= 1.1 - 1e-12
