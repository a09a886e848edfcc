import json
import math

import numpy as np
import pytest

from periodic_peg.curve import FourierCurve, Polyline, mollify, resample, strip_halfwidth
from periodic_peg.experiments import (EvidenceReport, IsoscelesInputError, THREADS_ENV, canonical_by_height,
                                      conjecture_search, converge, default_schedule, random_pair, sweep,
                                      vertex_distance)
from periodic_peg.quad import QuadSimilarityType, TrapezoidType
from periodic_peg.solver import SolveConfig, newton_batch, param_distance, solve_all
from periodic_peg.system import residual
from oracles import GraphSide

SKEWED = QuadSimilarityType.normalized(0j, 1 + 0.2j, 1.3 + 1j, -0.1 + 0.9j)


def zigzag(center: float, m: int, amp: float, phase: int = 0) -> Polyline:
    j = np.arange(m)
    return Polyline(center + amp * (-1.0) ** (j + phase) + 1j * j / m)


# ------------------------------------------------------------ random pairs


def test_zero_amplitude_gives_lines():
    g1, g2 = random_pair(5, modes=3, amplitude=0.0, separation=1.4)
    for g, x in ((g1, -0.7), (g2, 0.7)):
        assert g.coeff(0) == x
        assert np.all(g.coeffs[g.ks != 0] == 0)


def test_random_pair_is_deterministic():
    a, b = random_pair(77), random_pair(77)
    assert all(np.array_equal(x.coeffs, y.coeffs) for x, y in zip(a, b))
    assert not np.array_equal(random_pair(78)[0].coeffs, a[0].coeffs)


def test_random_pair_preconditions():
    with pytest.raises(ValueError):
        random_pair(1, modes=0)
    with pytest.raises(ValueError):
        random_pair(1, amplitude=0.5, separation=1.0)


def test_random_pairs_pass_independent_validation():
    for seed in range(1, 1001):
        modes = 1 + seed % 6
        g1, g2 = random_pair(seed, modes=modes)
        for g in (g1, g2):
            t = np.linspace(0, 1, 2001)
            assert np.min(g.deriv(t).imag) > 0  # a graph over the y-axis is embedded
            assert strip_halfwidth(g) <= 0.5 + 0.1 * modes
        # graphs x = X1(y), X2(y) are disjoint iff X1 < X2 everywhere
        p1 = g1.eval(np.linspace(0, 1, 4001))
        assert np.max(GraphSide(g2, per_unit=4096).side(p1, exact=False)) < -0.5


# ------------------------------------------------------------------- sweep


def test_lines_sweep_reports_families():
    lines = random_pair(1, amplitude=0.0)
    rep = sweep(lines, [0.2, 0.5], [math.pi / 3, math.pi / 2])
    assert len(rep.cells) == 4
    for cell in rep.cells:
        assert cell.n_families == 1 and cell.n_isolated == 0 and cell.ok


def test_sweep_counts_and_rectangle_slice(pair42):
    cs, ths = [0.2, 0.5], [math.pi / 6, math.pi / 2]
    rep = sweep(pair42, cs, ths)
    assert rep.all_found and all(x.count >= 1 for x in rep.cells)
    rect = rep.rectangle_slice()
    assert [x.theta for x in rect] == sorted(ths)
    rerun = sweep(pair42, [0.5], ths)
    assert [x.count for x in rerun.cells] == [x.count for x in rect]
    for x in rep.cells:
        assert x.max_w < x.w_bound
        assert x.max_residual < 1e-10


def test_sweep_is_order_invariant_and_deterministic(pair42):
    a = sweep(pair42, [0.5, 0.25], [2.0, 1.0])
    b = sweep(pair42, [0.25, 0.5], [1.0, 2.0])
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    header = a.to_csv().splitlines()[0].split(",")
    assert header[:3] == ["c", "theta", "count"]
    assert len(a.to_csv().splitlines()) == 5
    assert len(json.loads(a.to_json())["cells"]) == 4


def test_sweep_records_cell_failures(pair42):
    rep = sweep(pair42, [0.5, 0.7], [1.0])
    bad = rep.cell(0.7, 1.0)
    assert bad.error and "c must" in bad.error
    assert rep.cell(0.5, 1.0).ok


def test_sweep_rejects_polylines():
    p = Polyline(np.array([0.0, 0.1 + 0.5j]))
    with pytest.raises(ValueError):
        sweep((p, resample(FourierCurve.from_modes({0: 1.0}), 4)), [0.5], [1.0])


def test_worker_processes_give_same_report(pair42, monkeypatch):
    serial = sweep(pair42, [0.3, 0.5], [1.2])
    monkeypatch.setenv(THREADS_ENV, "2")
    assert sweep(pair42, [0.3, 0.5], [1.2]).to_json() == serial.to_json()


# ------------------------------------------------------------- convergence


def test_default_schedule():
    sched = default_schedule(3, first=2)
    assert sched == [(0.25, 32), (0.125, 32), (0.0625, 32)]
    assert default_schedule(12)[-1] == (2.0 ** -15, math.ceil(1.25 * 2 ** 15))
    with pytest.raises(ValueError):
        default_schedule(0)


def test_one_stage_is_a_plain_solve(square):
    g1, g2 = random_pair(2, modes=2)
    p1, p2 = resample(g1, 64), resample(g2, 64)
    rep = converge(p1, p2, square, [(1 / 32, 64)])
    direct = solve_all(mollify(p1, 1 / 32, 64), mollify(p2, 1 / 32, 64), square).inscriptions
    assert len(rep.limits) == len(direct)
    X = np.array([s.params.as_array() for s in rep.limits])
    Y = np.array([s.params.as_array() for s in direct])
    assert np.all(np.min(param_distance(X, Y), axis=1) < 1e-9)


def test_stage_inscriptions_are_height_canonical(square):
    rep = converge(zigzag(-0.5, 16, 0.05), zigzag(0.5, 18, 0.035), square, default_schedule(4))
    for st in rep.stages:
        assert st.inscriptions
        assert all(0 <= s.z.imag < 1 for s in st.inscriptions)


@pytest.mark.parametrize("c", [0.5, 0.3])
def test_zigzag_sequences_are_cauchy(c):
    T = TrapezoidType(c, math.pi / 2)
    rep = converge(zigzag(-0.5, 12, 0.08), zigzag(0.5, 14, 0.056, 1), T)
    assert not rep.diagnostics
    done = [k for k in rep.candidates if k.status == "complete"]
    assert len(done) >= 2
    for k in done:
        assert k.cauchy(1e-5) and k.final_drift < 1e-5
        assert k.monotone
        assert k.nondegenerate
        cl = k.classification
        assert abs(cl.c - c) < 1e-6 and abs(cl.theta - T.theta) < 1e-6


def test_limit_is_the_inscription_of_the_polyline(square):
    # Newton directly on the piecewise-linear pair (one-sided slopes) is an independent route to the limit
    g1, g2 = random_pair(4, modes=2)
    p1, p2 = resample(g1, 64), resample(g2, 64)
    rep = converge(p1, p2, square)
    X = np.array([s.params.as_array() for s in rep.limits])
    res = newton_batch(p1, p2, square, X, SolveConfig())
    assert res.converged.all()
    assert np.max(np.abs(res.x - X)) < 1e-8
    for s in rep.limits:
        assert residual(p1, p2, square, s.params).norm < 1e-8


def test_converge_report_serialization(square):
    args = (zigzag(-0.5, 10, 0.1), zigzag(0.5, 12, 0.07, 1), square, default_schedule(5))
    a, b = converge(*args), converge(*args)
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()
    d = json.loads(a.to_json())
    assert len(d["schedule"]) == 5 and d["candidates"]


def test_converge_rejects_crossing_polylines(square):
    with pytest.raises(ValueError, match="not disjoint"):
        converge(zigzag(0.0, 8, 0.1), zigzag(0.05, 8, 0.1, 1), square, default_schedule(2))


def test_canonical_by_height(pair42, square):
    s = solve_all(*pair42, square).inscriptions[0]
    from periodic_peg.experiments import _shift
    for k in (-3, 0, 2):
        c = canonical_by_height(_shift(s, k))
        assert 0 <= c.z.imag < 1
        assert vertex_distance(c, canonical_by_height(s)) < 1e-12


# -------------------------------------------------------------- conjecture


def test_isosceles_input_redirected():
    square = QuadSimilarityType.normalized(0j, 1 + 0j, 1 + 1j, 1j)
    with pytest.raises(IsoscelesInputError, match="sweep"):
        conjecture_search(square, 3)


def test_square_general_path_matches_trapezoid_path(pair42, square):
    q = QuadSimilarityType.normalized(0j, 1 + 0j, 1 + 1j, 1j)
    a = np.array([s.params.as_array() for s in solve_all(*pair42, square).inscriptions])
    b = np.array([s.params.as_array() for s in solve_all(*pair42, q).inscriptions])
    assert a.shape == b.shape
    assert np.all(np.min(param_distance(a, b), axis=1) < 1e-6)


def test_general_solutions_are_similar_to_the_type(pair42):
    res = solve_all(*pair42, SKEWED)
    for s in res.inscriptions:
        got = QuadSimilarityType.normalized(*s.vertices)
        assert np.allclose(got.vertices, SKEWED.vertices, atol=1e-8)


def test_conjecture_report(monkeypatch):
    rep = conjecture_search(SKEWED, 3)
    assert isinstance(rep, EvidenceReport)
    assert len(rep.trials) == 3 and len(rep.labelings) == 16
    assert all(len(t.counts) == 16 for t in rep.trials)
    assert len(rep.zero_trials) + len(rep.inscribed_trials) == 3
    again = conjecture_search(SKEWED, 3)
    assert rep.to_json() == again.to_json() and rep.to_csv() == again.to_csv()
    assert len(rep.to_csv().splitlines()) == 4
