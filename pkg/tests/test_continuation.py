import math

import numpy as np
import pytest

from periodic_peg.continuation import continue_family, flux_homotopy, linear_homotopy
from periodic_peg.curve import FourierCurve, VerticalLine, flux
from periodic_peg.experiments import random_pair
from periodic_peg.quad import TrapezoidType
from periodic_peg.solver import param_distance, solve_all


def _scaled(g: FourierCurve, a: float) -> FourierCurve:
    coeffs = a * g.coeffs
    coeffs[-g.kmin] = g.coeffs[-g.kmin]
    return FourierCurve(coeffs, g.kmin)


def test_constant_homotopy_keeps_points(pair42, square):
    sols = solve_all(*pair42, square).inscriptions
    paths = continue_family(lambda s: pair42, square, sols, steps=10)
    for p, s in zip(paths, sols):
        assert p.status == "complete" and p.last_s == 1.0
        assert np.max(np.abs(np.array(p.points) - s.params.as_array())) < 1e-9


@pytest.mark.parametrize("c", [0.5, 0.3])
def test_flux_homotopy_ends_on_closed_form_circle(c):
    T = TrapezoidType(c, math.pi / 2)
    g1, g2 = random_pair(3, modes=2)
    a1, a2 = flux(g1), flux(g2)
    paths = continue_family(flux_homotopy(g1, g2), T, solve_all(g1, g2, T).inscriptions, steps=40)
    done = [p for p in paths if p.status == "complete"]
    assert done
    for p in done:
        assert p.end.z.real == pytest.approx((1 - c) * a1 + c * a2, abs=1e-8)
        assert p.end.w == pytest.approx((a1 - a2) * complex(1, -math.tan(T.theta / 2)), abs=1e-8)
    for p in paths:
        assert p.status in ("complete", "fold")
        if p.status == "fold":
            assert p.folds


def test_linear_homotopy_to_lines_ends_on_circle(square):
    g1, g2 = random_pair(6, modes=2, amplitude=0.05)
    lines = (VerticalLine(g1.coeff(0).real), VerticalLine(g2.coeff(0).real))
    paths = continue_family(linear_homotopy((g1, g2), lines), square, solve_all(g1, g2, square).inscriptions,
                            steps=40)
    done = [p for p in paths if p.status == "complete"]
    assert done
    for p in done:
        assert p.end.z.real == pytest.approx(0.0, abs=1e-8)
        assert p.end.w == pytest.approx(-1 + 1j, abs=1e-8)


def test_growing_amplitude_stays_inside_bound(square):
    g1, g2 = random_pair(12, modes=3, amplitude=0.1)
    start = (_scaled(g1, 0.2), _scaled(g2, 0.2))
    end = (_scaled(g1, 3.0), _scaled(g2, 3.0))  # perturbation amplitude 0.02 -> 0.3
    paths = continue_family(linear_homotopy(start, end), square, solve_all(*start, square).inscriptions, steps=30)
    assert paths
    for p in paths:
        assert not p.bound_alarm and p.max_w_ratio < 1.0


def test_endpoint_matches_solve_on_end_pair(square):
    start, end = random_pair(3, modes=2), random_pair(4, modes=2)
    paths = continue_family(linear_homotopy(start, end), square, solve_all(*start, square).inscriptions, steps=40)
    target = np.array([s.params.as_array() for s in solve_all(*end, square).inscriptions])
    clean = [p for p in paths if p.status == "complete" and not p.folds]
    assert clean
    for p in clean:
        assert np.min(param_distance(p.end.params.as_array(), target)) < 1e-6


def test_alarm_fires_when_bound_is_tiny(pair42, square):
    sols = solve_all(*pair42, square).inscriptions
    paths = continue_family(lambda s: pair42, square, sols, steps=2, alarm_fraction=1e-3)
    assert all(p.bound_alarm for p in paths)
