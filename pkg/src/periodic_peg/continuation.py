"""Predictor-corrector tracking of inscriptions through a deformation of the curve pair."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .curve import FourierCurve, PeriodicCurve, VerticalLine, flux, strip_halfwidth
from .quad import TrapezoidType
from .solver import Inscription, SolveConfig, _make_inscriptions, _pinv_step, search_bound, w_bound
from .system import batch_jacobian, batch_residual

CurveHomotopy = Callable[[float], tuple[PeriodicCurve, PeriodicCurve]]


def as_fourier(curve: PeriodicCurve) -> FourierCurve:
    if isinstance(curve, FourierCurve):
        return curve
    if isinstance(curve, VerticalLine):
        return FourierCurve.from_modes({0: complex(curve.alpha)})
    raise TypeError("homotopies are defined between smooth curves")


def _blend(a: FourierCurve, b: FourierCurve, s: float) -> FourierCurve:
    kmin = min(a.kmin, b.kmin)
    kmax = max(a.ks[-1], b.ks[-1])
    coeffs = np.zeros(kmax - kmin + 1, dtype=complex)
    coeffs[a.kmin - kmin:a.kmin - kmin + a.coeffs.size] += (1.0 - s) * a.coeffs
    coeffs[b.kmin - kmin:b.kmin - kmin + b.coeffs.size] += s * b.coeffs
    return FourierCurve(coeffs, kmin)


def linear_homotopy(start: tuple[PeriodicCurve, PeriodicCurve],
                    end: tuple[PeriodicCurve, PeriodicCurve]) -> CurveHomotopy:
    """Straight-line interpolation of Fourier coefficients."""
    a1, a2 = (as_fourier(c) for c in start)
    b1, b2 = (as_fourier(c) for c in end)
    return lambda s: (_blend(a1, b1, s), _blend(a2, b2, s))


def flux_homotopy(g1: PeriodicCurve, g2: PeriodicCurve) -> CurveHomotopy:
    """Shrink the perturbations to zero while holding each curve's flux fixed.

    The end point is the pair of vertical lines x = flux(g_i).  Since
    flux = Re a_0 + pi sum k |a_k|^2, scaling the non-constant modes by (1 - s)
    is compensated by moving Re a_0.
    """
    curves = [as_fourier(g) for g in (g1, g2)]
    targets = [flux(g) for g in curves]

    def at(s: float):
        out = []
        for g, alpha in zip(curves, targets):
            coeffs = (1.0 - s) * g.coeffs
            j0 = -g.kmin
            quad = math.pi * float(np.sum(g.ks * np.abs(coeffs) ** 2))
            coeffs[j0] = complex(alpha - quad, (1.0 - s) * g.coeffs[j0].imag)
            out.append(FourierCurve(coeffs, g.kmin))
        return tuple(out)

    return at


@dataclass
class TrackedPath:
    s: list[float]
    points: list[np.ndarray]
    status: str = "complete"
    folds: list[float] = field(default_factory=list)
    bound_alarm: bool = False
    max_w_ratio: float = 0.0
    end: Inscription | None = None

    @property
    def last_s(self) -> float:
        return self.s[-1]

    @property
    def start_point(self) -> np.ndarray:
        return self.points[0]

    @property
    def end_point(self) -> np.ndarray:
        return self.points[-1]


def _bound_for(g1, g2, shape) -> float:
    if isinstance(shape, TrapezoidType):
        N = max(strip_halfwidth(g1), strip_halfwidth(g2))
        return w_bound(N, shape.c, shape.theta)
    return search_bound(g1, g2, shape)


def _correct(g1, g2, pred, x, tol, max_iter=12):
    x = x.copy()
    for _ in range(max_iter):
        r = batch_residual(g1, g2, pred, x[None, :])
        if np.linalg.norm(r) < tol:
            return x, True
        J = batch_jacobian(g1, g2, pred, x[None, :])
        x = x + _pinv_step(J, r)[0]
    r = batch_residual(g1, g2, pred, x[None, :])
    return x, bool(np.linalg.norm(r) < tol)


def continue_family(homotopy: CurveHomotopy, shape, start: Sequence[Inscription], steps: int = 50,
                    config: SolveConfig | None = None, fold_tol: float = 1e-8,
                    alarm_fraction: float = 1.0, min_step: float = 1e-7,
                    near_fold: float = 1e-4) -> list[TrackedPath]:
    """Track each start inscription from s = 0 to s = 1.

    Euler predictor along dx/ds = -J^+ dF/ds (dF/ds by central differences in
    s), Newton corrector at fixed s, step halving on corrector failure.  A
    path whose |w| reaches ``alarm_fraction`` times the compactness bound at
    the current s raises ``bound_alarm``; interior points with smallest
    singular value below ``fold_tol`` are recorded as folds.  Paths that
    cannot be continued stop at their last good s with status ``"fold"``
    when the smallest singular value there is below ``near_fold`` (two
    solutions meeting and annihilating) and ``"truncated"`` otherwise.
    """
    config = config or SolveConfig()
    pred = shape.predictors
    tol = config.newton_tol
    cache: dict[float, tuple] = {}

    def curves(s: float):
        if s not in cache:
            if len(cache) > 64:
                cache.clear()
            cache[s] = homotopy(s)
        return cache[s]

    def dF_ds(x, s):
        d = 1e-6
        lo, hi = max(0.0, s - d), min(1.0, s + d)
        r_hi = batch_residual(*curves(hi), pred, x[None, :])[0]
        r_lo = batch_residual(*curves(lo), pred, x[None, :])[0]
        return (r_hi - r_lo) / (hi - lo)

    paths = []
    for ins in start:
        x = ins.params.as_array()
        s = 0.0
        g1, g2 = curves(0.0)
        x, ok = _correct(g1, g2, pred, x, tol)
        path = TrackedPath([0.0], [x.copy()])
        if not ok:
            path.status = "truncated"
            paths.append(path)
            continue
        ds = 1.0 / steps
        while s < 1.0:
            ds = min(ds, 1.0 - s)
            g1, g2 = curves(s)
            J = batch_jacobian(g1, g2, pred, x[None, :])
            tangent = _pinv_step(J, dF_ds(x, s)[None, :])[0]
            s_new = 1.0 if ds >= 1.0 - s - 1e-15 else s + ds
            guess = x + (s_new - s) * tangent
            h1, h2 = curves(s_new)
            x_new, ok = _correct(h1, h2, pred, guess, tol)
            jump = np.max(np.abs(x_new - guess)) if ok else math.inf
            if not ok or jump > 0.1:
                ds *= 0.5
                if ds < min_step:
                    # a path that dies where the Jacobian is nearly singular has met a fold
                    sig = np.linalg.svd(J, compute_uv=False)[0, -1]
                    if sig < near_fold:
                        path.status = "fold"
                        path.folds.append(s)
                    else:
                        path.status = "truncated"
                    break
                continue
            s, x = s_new, x_new
            path.s.append(s)
            path.points.append(x.copy())
            p1, p3 = h1.eval(x[0]), h2.eval(x[2])
            ratio = abs(p1 - p3) / _bound_for(h1, h2, shape)
            path.max_w_ratio = max(path.max_w_ratio, float(ratio))
            if ratio >= alarm_fraction:
                path.bound_alarm = True
            if s < 1.0:
                sig = np.linalg.svd(batch_jacobian(h1, h2, pred, x[None, :]), compute_uv=False)[0, -1]
                if sig < fold_tol:
                    path.folds.append(s)
            ds = min(2.0 * ds, 1.0 / steps)
        g1, g2 = curves(path.last_s)
        xe = path.end_point[None, :]
        r = batch_residual(g1, g2, pred, xe)
        path.end = _make_inscriptions(g1, g2, shape, xe, np.linalg.norm(r, axis=1), np.zeros(1, dtype=int))[0]
        paths.append(path)
    return paths
