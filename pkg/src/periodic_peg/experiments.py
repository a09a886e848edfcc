"""Experiment harness: random instances, (c, theta) sweeps, the continuous-curve
convergence pipeline and the non-trapezoid explorer."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .curve import (CurveValidationError, FourierCurve, Polyline, is_disjoint, is_embedded, mollify,
                    strip_halfwidth)
from .quad import QuadSimilarityType, TrapezoidType, classify_quad, is_isosceles_trapezoid
from .rng import SplitMix64
from .solver import Inscription, SolveConfig, _make_inscriptions, newton_batch, solve_all, w_bound
from .system import translate

log = logging.getLogger(__name__)

THREADS_ENV = "PERIODIC_PEG_THREADS"


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------- instances


def _random_modes(rng: SplitMix64, modes: int, amplitude: float) -> dict[int, complex]:
    # weights ~ 1/k^2 normalized so the whole perturbation has sup-norm <= amplitude
    weights = {k: 1.0 / k ** 2 for k in range(1, modes + 1)}
    total = 2.0 * sum(weights.values())
    out = {}
    for k in range(1, modes + 1):
        for sign in (1, -1):
            mag = amplitude * rng.uniform() * weights[k] / total
            phase = 2.0 * math.pi * rng.uniform()
            out[sign * k] = mag * complex(math.cos(phase), math.sin(phase))
    return out


def random_pair(seed: int, modes: int = 3, amplitude: float = 0.1,
                separation: float = 1.0) -> tuple[FourierCurve, FourierCurve]:
    """Two Fourier curves around the lines x = -separation/2 and x = +separation/2.

    Each curve gets 2 * modes random coefficients; the sum of their
    magnitudes is at most ``amplitude``.  Drawn from SplitMix64(seed).  A
    candidate that fails the embedded/disjoint check is redrawn with the
    amplitude halved.
    """
    if modes < 1:
        raise ValueError("modes must be at least 1")
    if not amplitude < separation / 2.0:
        raise ValueError("amplitude must be below separation / 2")
    rng = SplitMix64(seed)
    amp = amplitude
    for _ in range(100):
        curves = []
        for center in (-0.5 * separation, 0.5 * separation):
            m = _random_modes(rng, modes, amp)
            m[0] = complex(center, 0.0)
            curves.append(FourierCurve.from_modes(m))
        g1, g2 = curves
        if is_embedded(g1) and is_embedded(g2) and is_disjoint(g1, g2)[0]:
            return g1, g2
        amp *= 0.5
    raise RuntimeError(f"random_pair(seed={seed}) exhausted 100 retries")


def _pool_map(fn, items: list) -> list:
    """Map in worker processes when PERIODIC_PEG_THREADS > 1; results keep input order."""
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _unpack(pair) -> tuple:
    g1, g2 = pair
    if not (g1.smooth and g2.smooth):
        raise ValueError("sweeps need smooth curves; use converge for polylines")
    return g1, g2


def _write_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(x: float) -> str:
    return repr(float(x))


# ------------------------------------------------------------------- sweep


@dataclass
class SweepCell:
    c: float
    theta: float
    count: int = 0
    n_isolated: int = 0
    n_families: int = 0
    min_residual: float = math.nan
    max_residual: float = math.nan
    min_singular_value: float = math.nan
    all_transverse: bool = False
    max_w: float = math.nan
    w_bound: float = math.nan
    error: Optional[str] = None
    inscriptions: list[Inscription] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None and self.count >= 1

    def to_dict(self, full: bool = True) -> dict:
        d = {k: getattr(self, k) for k in ("c", "theta", "count", "n_isolated", "n_families", "min_residual",
                                           "max_residual", "min_singular_value", "all_transverse", "max_w",
                                           "w_bound", "error")}
        if full:
            d["inscriptions"] = [s.to_dict() for s in self.inscriptions]
        return d


CELL_COLUMNS = ["c", "theta", "count", "n_isolated", "n_families", "min_residual", "max_residual",
                "min_singular_value", "all_transverse", "max_w", "w_bound", "error"]


@dataclass
class SweepReport:
    cells: list[SweepCell]
    meta: dict = field(default_factory=dict)

    def cell(self, c: float, theta: float) -> SweepCell:
        for x in self.cells:
            if math.isclose(x.c, c, abs_tol=1e-12) and math.isclose(x.theta, theta, abs_tol=1e-12):
                return x
        raise KeyError((c, theta))

    def rectangle_slice(self) -> list[SweepCell]:
        """Cells with c = 1/2, i.e. inscribed rectangles."""
        return [x for x in self.cells if math.isclose(x.c, 0.5, abs_tol=1e-12)]

    @property
    def all_found(self) -> bool:
        return all(x.ok for x in self.cells)

    def to_dict(self) -> dict:
        return {"meta": self.meta, "cells": [x.to_dict() for x in self.cells]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        rows = []
        for x in self.cells:
            d = x.to_dict(full=False)
            rows.append([_num(d[k]) if isinstance(d[k], float) else ("" if d[k] is None else d[k])
                         for k in CELL_COLUMNS])
        return _write_csv(CELL_COLUMNS, rows)


def _sweep_cell(args) -> SweepCell:
    g1, g2, c, theta, config, N = args
    cell = SweepCell(c, theta)
    try:
        shape = TrapezoidType(c, theta)
        res = solve_all(g1, g2, shape, config)
    except Exception as exc:  # recorded per cell; a sweep never aborts
        cell.error = f"{type(exc).__name__}: {exc}"
        return cell
    sols = res.all_inscriptions()
    cell.count, cell.n_isolated, cell.n_families = res.count, len(res.inscriptions), len(res.families)
    cell.inscriptions = sols
    cell.all_transverse = res.all_transverse and res.found
    cell.w_bound = w_bound(N, c, theta)
    if sols:
        res_norms = [s.residual_norm for s in sols]
        cell.min_residual, cell.max_residual = min(res_norms), max(res_norms)
        cell.min_singular_value = min(s.jac_min_singular_value for s in sols)
        cell.max_w = max(abs(s.w) for s in sols)
    if res.diagnostic:
        cell.error = res.diagnostic
    return cell


def sweep(pair, c_values: Sequence[float], theta_values: Sequence[float],
          config: SolveConfig | None = None, meta: dict | None = None) -> SweepReport:
    """solve_all on every (c, theta) cell; cells are ordered by (c, theta) whatever the input order."""
    g1, g2 = _unpack(pair)
    config = config or SolveConfig()
    N = max(strip_halfwidth(g1), strip_halfwidth(g2))
    grid = sorted({(float(c), float(th)) for c in c_values for th in theta_values})
    cells = _pool_map(_sweep_cell, [(g1, g2, c, th, config, N) for c, th in grid])
    info = {"N": N}
    info.update(meta or {})
    return SweepReport(cells, info)


# ------------------------------------------------------------- convergence


def default_schedule(stages: int = 12, first: int = 4, K_min: int = 32) -> list[tuple[float, int]]:
    """sigma_n = 2^-n for n = first .. first + stages - 1, with K_n large enough that
    the Gaussian factor at |k| = K_n is below 1e-13."""
    if stages < 1:
        raise ValueError("need at least one stage")
    out = []
    for n in range(first, first + stages):
        sigma = 2.0 ** -n
        out.append((sigma, max(K_min, math.ceil(1.25 / sigma))))
    return out


def _shift(ins: Inscription, k: int) -> Inscription:
    if k == 0:
        return ins
    d = 1j * k
    return Inscription(translate(ins.params, k), ins.z + d, ins.w, tuple(v + d for v in ins.vertices),
                       ins.residual_norm, ins.jac_min_singular_value, ins.iterations)


def canonical_by_height(ins: Inscription) -> Inscription:
    """Translate so the diagonal intersection has imaginary part in [0, 1)."""
    return _shift(ins, -math.floor(ins.z.imag))


def vertex_distance(a: Inscription, b: Inscription) -> float:
    return max(abs(p - q) for p, q in zip(a.vertices, b.vertices))


def _nearest(target: Inscription, pool: list[Inscription]) -> tuple[int, float]:
    """Index and vertex distance of the closest pool member, allowing translation by +-i."""
    best, best_d = -1, math.inf
    for j, cand in enumerate(pool):
        for k in (-1, 0, 1):
            d = vertex_distance(target, _shift(cand, k))
            if d < best_d:
                best, best_d = j, d
    return best, best_d


@dataclass
class ConvergenceStage:
    sigma: float
    K: int
    inscriptions: list[Inscription]
    fresh_solve: bool
    diagnostic: Optional[str] = None


@dataclass
class LimitCandidate:
    """One inscription followed through the stages."""

    born: int
    history: list[Inscription]
    drifts: list[float] = field(default_factory=list)
    status: str = "active"
    classification: object = None

    @property
    def limit(self) -> Inscription:
        return self.history[-1]

    @property
    def final_drift(self) -> float:
        return self.drifts[-1] if self.drifts else math.nan

    def cauchy(self, tol: float) -> bool:
        return self.status == "complete" and bool(self.drifts) and self.final_drift < tol

    @property
    def monotone(self) -> bool:
        """Drifts never grow after their peak (values below 1e-12 count as roundoff)."""
        if not self.drifts:
            return True
        d = np.maximum(np.asarray(self.drifts), 1e-12)
        tail = d[int(np.argmax(d)):]
        return bool(np.all(np.diff(tail) <= 0.0))

    @property
    def nondegenerate(self) -> bool:
        return bool(self.classification) and abs(self.limit.w) > 0


@dataclass
class ConvergenceReport:
    schedule: list[tuple[float, int]]
    shape: object
    stages: list[ConvergenceStage]
    candidates: list[LimitCandidate]
    cauchy_tol: float
    diagnostics: list[str] = field(default_factory=list)

    @property
    def limits(self) -> list[Inscription]:
        return [c.limit for c in self.candidates if c.status == "complete"]

    @property
    def cauchy_limits(self) -> list[Inscription]:
        return [c.limit for c in self.candidates if c.cauchy(self.cauchy_tol)]

    def to_dict(self) -> dict:
        def cand(c: LimitCandidate) -> dict:
            cl = c.classification
            return {"born": c.born, "status": c.status, "drifts": c.drifts, "monotone": c.monotone,
                    "cauchy": c.cauchy(self.cauchy_tol), "nondegenerate": c.nondegenerate,
                    "classification": (cl._asdict() if cl else {"failure": getattr(cl, "reason", None)}),
                    "limit": c.limit.to_dict()}

        return {
            "shape": {"c": getattr(self.shape, "c", None), "theta": getattr(self.shape, "theta", None)},
            "schedule": [{"sigma": s, "K": K} for s, K in self.schedule],
            "stages": [{"sigma": st.sigma, "K": st.K, "fresh_solve": st.fresh_solve,
                        "diagnostic": st.diagnostic,
                        "inscriptions": [s.to_dict() for s in st.inscriptions]} for st in self.stages],
            "candidates": [cand(c) for c in self.candidates],
            "cauchy_tol": self.cauchy_tol,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        header = ["candidate", "stage", "sigma", "K", "drift", "t1", "t2", "t3", "t4", "z_re", "z_im",
                  "w_re", "w_im", "residual_norm"]
        rows = []
        for i, c in enumerate(self.candidates):
            for j, ins in enumerate(c.history):
                n = c.born + j
                sigma, K = self.schedule[n]
                drift = c.drifts[j - 1] if j else math.nan
                rows.append([i, n, _num(sigma), K, _num(drift)]
                            + [_num(v) for v in ins.params.as_array()]
                            + [_num(ins.z.real), _num(ins.z.imag), _num(ins.w.real), _num(ins.w.imag),
                               _num(ins.residual_norm)])
        return _write_csv(header, rows)


def _warm_start(g1, g2, shape, prev: list[Inscription], config: SolveConfig) -> list[Optional[Inscription]]:
    if not prev:
        return []
    X0 = np.array([s.params.as_array() for s in prev])
    res = newton_batch(g1, g2, shape, X0, config)
    out = []
    for i in range(len(prev)):
        if not res.converged[i]:
            out.append(None)
            continue
        ins = _make_inscriptions(g1, g2, shape, res.x[i:i + 1], res.residual_norm[i:i + 1],
                                 res.iterations[i:i + 1])[0]
        out.append(canonical_by_height(ins))
    return out


def converge(p1: Polyline, p2: Polyline, shape, schedule: Sequence[tuple[float, int]] | None = None,
             config: SolveConfig | None = None, cauchy_tol: float = 1e-5,
             fresh_every_stage: bool = False) -> ConvergenceReport:
    """Mollify the pair along ``schedule``, solve each stage and follow each
    inscription from stage to stage.

    Stage 0 is a full solve.  Later stages warm-start Newton from the previous
    stage and accept a continuation only within 10 sigma_n (vertex distance);
    if any candidate is lost, or when ``fresh_every_stage`` is set, the stage
    is also solved from scratch and lost candidates are matched against it.
    Every inscription is translated so its diagonal intersection has height
    in [0, 1).
    """
    config = config or SolveConfig()
    schedule = list(schedule or default_schedule())
    for c in (p1, p2):
        if not is_embedded(c):
            raise CurveValidationError("embedded", "curve not embedded")
    ok, witness = is_disjoint(p1, p2)
    if not ok:
        raise CurveValidationError("disjoint", f"curves not disjoint (distance {witness.distance:.3g})")

    stages: list[ConvergenceStage] = []
    candidates: list[LimitCandidate] = []
    diagnostics: list[str] = []
    for n, (sigma, K) in enumerate(schedule):
        g1 = mollify(p1, sigma, K) if isinstance(p1, Polyline) else p1
        g2 = mollify(p2, sigma, K) if isinstance(p2, Polyline) else p2
        threshold = 10.0 * sigma
        active = [c for c in candidates if c.status == "active"]
        warm = _warm_start(g1, g2, shape, [c.limit for c in active], config)
        matched: list[Optional[Inscription]] = []
        for c, ins in zip(active, warm):
            if ins is not None:
                _, d = _nearest(c.limit, [ins])
                if d >= threshold:
                    ins = None
            matched.append(ins)
        fresh = n == 0 or fresh_every_stage or any(m is None for m in matched)
        found: list[Inscription] = []
        diag = None
        if fresh:
            res = solve_all(g1, g2, shape, config)
            found = [canonical_by_height(s) for s in res.all_inscriptions()]
            diag = res.diagnostic
            for i, c in enumerate(active):
                if matched[i] is None and found:
                    j, d = _nearest(c.limit, found)
                    if d < threshold:
                        matched[i] = found[j]
        stage_sols: list[Inscription] = []
        for c, ins in zip(active, matched):
            if ins is None:
                c.status = "lost"
                continue
            shifted = min((_shift(ins, s) for s in (-1, 0, 1)), key=lambda x: vertex_distance(c.limit, x))
            if stage_sols and _nearest(shifted, stage_sols)[1] < config.dedup_tol:
                c.status = "merged"
                continue
            c.drifts.append(vertex_distance(c.limit, shifted))
            c.history.append(canonical_by_height(shifted))
            stage_sols.append(c.history[-1])
        for s in found:
            if not stage_sols or _nearest(s, stage_sols)[1] >= config.dedup_tol:
                candidates.append(LimitCandidate(n, [s]))
                stage_sols.append(s)
        if not stage_sols:
            diag = diag or f"theorem violation: no inscription at stage {n} (sigma={sigma:g})"
        if diag:
            diagnostics.append(diag)
            log.warning(diag)
        stages.append(ConvergenceStage(sigma, K, stage_sols, fresh, diag))

    for c in candidates:
        if c.status == "active":
            c.status = "complete"
        c.classification = classify_quad(*c.limit.vertices)
    return ConvergenceReport(schedule, shape, stages, candidates, cauchy_tol, diagnostics)


# ---------------------------------------------------------------- conjecture


class IsoscelesInputError(ValueError):
    """conjecture_search was handed an isosceles trapezoid; those belong to sweep."""


@dataclass
class TrialRecord:
    trial: int
    seed: int
    N: float
    counts: list[int]
    min_residual: float
    error: Optional[str] = None

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def zero(self) -> bool:
        return self.error is None and self.total == 0


@dataclass
class EvidenceReport:
    qtype: QuadSimilarityType
    labelings: list[QuadSimilarityType]
    trials: list[TrialRecord]
    params: dict = field(default_factory=dict)

    @property
    def zero_trials(self) -> list[TrialRecord]:
        return [t for t in self.trials if t.zero]

    @property
    def inscribed_trials(self) -> list[TrialRecord]:
        return [t for t in self.trials if t.error is None and t.total > 0]

    def to_dict(self) -> dict:
        pair = lambda v: [float(v.real), float(v.imag)]
        return {
            "qtype": [pair(v) for v in self.qtype.vertices],
            "labelings": [[pair(v) for v in q.vertices] for q in self.labelings],
            "params": self.params,
            "n_trials": len(self.trials),
            "n_zero": len(self.zero_trials),
            "n_inscribed": len(self.inscribed_trials),
            "trials": [{"trial": t.trial, "seed": t.seed, "N": t.N, "counts": t.counts, "total": t.total,
                        "zero": t.zero, "min_residual": t.min_residual, "error": t.error}
                       for t in self.trials],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        header = ["trial", "seed", "N", "total", "zero", "min_residual", "error"] + [
            f"labeling_{i}" for i in range(len(self.labelings))]
        rows = [[t.trial, t.seed, _num(t.N), t.total, t.zero, _num(t.min_residual), t.error or ""] + t.counts
                for t in self.trials]
        return _write_csv(header, rows)


def _conjecture_trial(args) -> TrialRecord:
    trial, seed, labelings, config, modes, amplitude, separation = args
    try:
        g1, g2 = random_pair(seed, modes, amplitude, separation)
    except RuntimeError as exc:
        return TrialRecord(trial, seed, math.nan, [], math.nan, str(exc))
    N = max(strip_halfwidth(g1), strip_halfwidth(g2))
    counts, best = [], math.inf
    for q in labelings:
        res = solve_all(g1, g2, q, config)
        counts.append(res.count)
        for s in res.all_inscriptions():
            best = min(best, s.residual_norm)
    return TrialRecord(trial, seed, N, counts, best if math.isfinite(best) else math.nan)


def conjecture_search(qtype: QuadSimilarityType, trials: int, config: SolveConfig | None = None,
                      first_seed: int = 1, modes: int = 3, amplitude: float = 0.1,
                      separation: float = 1.0) -> EvidenceReport:
    """Search random pairs for a quadrilateral type that is not an isosceles trapezoid.

    Each pair is solved for every distinct labeling of the quadrilateral's
    vertices (cyclic order and mirror image), since any of them counts as an
    inscription.  The report is an evidence table; a pair with zero
    inscriptions shows the type is not inscribed in every pair.
    """
    if is_isosceles_trapezoid(qtype):
        raise IsoscelesInputError(
            "quadrilateral is an isosceles trapezoid, which every pair inscribes; use sweep with its (c, theta)")
    if trials < 1:
        raise ValueError("trials must be positive")
    config = config or SolveConfig()
    labelings = qtype.relabelings()
    jobs = [(i, first_seed + i, labelings, config, modes, amplitude, separation) for i in range(trials)]
    records = _pool_map(_conjecture_trial, jobs)
    params = {"first_seed": first_seed, "modes": modes, "amplitude": amplitude, "separation": separation}
    return EvidenceReport(qtype, labelings, records, params)
