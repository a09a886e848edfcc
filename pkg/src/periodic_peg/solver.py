"""Global search for all zeros of the residual system modulo translation by i.

Pipeline: seeds on a (t1, t3) grid -> t2, t4 by projecting the predicted
vertices onto the curves -> batched damped Newton -> canonical t1 in [0, 1)
-> deduplication modulo integer translation -> degenerate (clean) families
split off by their vanishing smallest singular value.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .curve import PeriodicCurve, Polyline, VerticalLine, uniform_samples
from .quad import TrapezoidType, reference_vertices, shape_width
from .system import InscriptionParams, batch_jacobian, batch_points, batch_residual, residual

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    grid_per_unit: int = 12
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    dedup_tol: float = 1e-6
    max_param_window: Optional[float] = None
    degenerate_tol: float = 1e-8
    # extra grid refinements tried before reporting an empty result
    retries: int = 2

    def __post_init__(self):
        for name in ("grid_per_unit", "newton_tol", "newton_max_iter", "dedup_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_param_window is not None and not self.max_param_window > 0:
            raise ValueError("max_param_window must be positive")
        if not self.newton_tol < self.dedup_tol:
            raise ValueError("newton_tol must be smaller than dedup_tol")

    @classmethod
    def from_dict(cls, data: dict) -> "SolveConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**known)


@dataclass(frozen=True)
class Inscription:
    params: InscriptionParams
    z: complex
    w: complex
    vertices: tuple[complex, complex, complex, complex]
    residual_norm: float
    jac_min_singular_value: float
    iterations: int = 0

    @property
    def transverse(self) -> bool:
        return self.jac_min_singular_value > 1e-6

    def to_dict(self) -> dict:
        pair = lambda v: [float(v.real), float(v.imag)]
        return {
            "t": [self.params.t1, self.params.t2, self.params.t3, self.params.t4],
            "z": pair(self.z),
            "w": pair(self.w),
            "vertices": [pair(v) for v in self.vertices],
            "residual_norm": self.residual_norm,
            "jac_min_singular_value": self.jac_min_singular_value,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Inscription":
        cplx = lambda v: complex(v[0], v[1])
        return cls(InscriptionParams(*d["t"]), cplx(d["z"]), cplx(d["w"]),
                   tuple(cplx(v) for v in d["vertices"]), float(d.get("residual_norm", 0.0)),
                   float(d.get("jac_min_singular_value", math.nan)), int(d.get("iterations", 0)))


@dataclass
class SolutionFamily:
    """A clean one-parameter family of zeros (Jacobian rank 3 along it)."""

    samples: list[Inscription]
    kernel: np.ndarray

    @property
    def representative(self) -> Inscription:
        return self.samples[0]

    def to_dict(self) -> dict:
        return {"kind": "family", "kernel": [float(v) for v in self.kernel],
                "samples": [s.to_dict() for s in self.samples]}


@dataclass
class SolveResult:
    inscriptions: list[Inscription]
    families: list[SolutionFamily] = field(default_factory=list)
    n_seeds: int = 0
    window: float = 0.0
    search_bound: float = 0.0
    diagnostic: Optional[str] = None

    @property
    def found(self) -> bool:
        return bool(self.inscriptions or self.families)

    @property
    def count(self) -> int:
        """Isolated inscriptions plus one per degenerate family."""
        return len(self.inscriptions) + len(self.families)

    @property
    def all_transverse(self) -> bool:
        return not self.families and all(s.transverse for s in self.inscriptions)

    def all_inscriptions(self) -> list[Inscription]:
        out = list(self.inscriptions)
        for fam in self.families:
            out.extend(fam.samples)
        return out

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "inscriptions": [s.to_dict() for s in self.inscriptions],
            "families": [f.to_dict() for f in self.families],
            "n_seeds": self.n_seeds,
            "diagnostic": self.diagnostic,
        }


# ------------------------------------------------------------------ bounds


def w_bound(N: float, c: float, theta: float) -> float:
    """Explicit b(N, c, theta) with |w| < b whenever z, z + c w, z + c e^{i theta} w share a width-2N strip.

    The triangle {0, 1, e^{i theta}} has width sin(theta) / max(1, 2 sin(theta/2));
    scaled by c |w| it must fit in the strip.
    """
    if not N > 0:
        raise ValueError("N must be positive")
    if not (0.0 < c <= 0.5):
        raise ValueError("c must lie in (0, 1/2]")
    if not (0.0 < theta < math.pi):
        raise ValueError("theta must lie in (0, pi)")
    return 2.0 * N * max(1.0, 2.0 * math.sin(theta / 2.0)) / (c * math.sin(theta))


def _x_extent(g1: PeriodicCurve, g2: PeriodicCurve) -> float:
    lo = min(g1.x_range[0], g2.x_range[0])
    hi = max(g1.x_range[1], g2.x_range[1])
    return hi - lo


def search_bound(g1: PeriodicCurve, g2: PeriodicCurve, shape) -> float:
    """Bound on |w| = |p1 - p3| from the width of the whole quadrilateral.

    All four vertices sit between the curves' extreme abscissae, so the
    reference shape scaled by |w| must fit in a strip of that width.
    """
    extent = max(_x_extent(g1, g2), 1e-12)
    return extent / shape_width(shape)


def param_window(g1: PeriodicCurve, g2: PeriodicCurve, shape, config: SolveConfig | None = None) -> float:
    """Half-width M of the parameter window around t1 that holds every zero.

    |Im(p_k - p1)| <= |w| * max_k |q_k - q1| and Im g(t) - t is bounded by the
    curve drift, so t2, t3, t4 lie within B R + 2 drift of t1; one unit of
    slack is added.
    """
    if config is not None and config.max_param_window is not None:
        return float(config.max_param_window)
    radius = max(abs(q) for q in reference_vertices(shape))
    drift = max(g1.drift, g2.drift)
    return search_bound(g1, g2, shape) * radius + 2.0 * drift + 1.0


# ------------------------------------------------------------------- seeds


def seed_grid(g1: PeriodicCurve, g2: PeriodicCurve, shape, config: SolveConfig,
              max_seeds: int = 50_000_000) -> np.ndarray:
    """Full tensor grid: t1 in [0, 1), t2, t3, t4 in [t1 - M, t1 + M), spacing 1/grid_per_unit.

    Returns an (n, 4) array.  Only usable for small windows; :func:`solve_all`
    seeds through :func:`reduced_seeds` instead.
    """
    g = config.grid_per_unit
    M = param_window(g1, g2, shape, config)
    t1 = np.arange(g) / g
    offs = np.arange(int(round(2 * M * g))) / g - M
    total = t1.size * offs.size ** 3
    if total > max_seeds:
        raise ValueError(f"seed grid of {total} points exceeds max_seeds={max_seeds}")
    a, b, c, d = np.meshgrid(t1, offs, offs, offs, indexing="ij")
    return np.stack([a.ravel(), (a + b).ravel(), (a + c).ravel(), (a + d).ravel()], axis=1)


class _Projector:
    """Nearest dense sample on a periodic curve, used to seed t2 and t4."""

    def __init__(self, curve: PeriodicCurve, spacing: float):
        n = max(64, int(math.ceil(curve.speed_bound / spacing)))
        reach = int(math.ceil(curve.drift))
        self.t, p = uniform_samples(curve, n, -1 - reach, 2 + reach)
        self.tree = cKDTree(np.column_stack([p.real, p.imag]))
        self.sample_gap = curve.speed_bound / n

    def __call__(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k = np.floor(p.imag)
        q = p - 1j * k
        dist, idx = self.tree.query(np.column_stack([q.real, q.imag]))
        return dist, self.t[idx] + k


def reduced_seeds(g1: PeriodicCurve, g2: PeriodicCurve, shape, config: SolveConfig,
                  grid_per_unit: int | None = None) -> np.ndarray:
    """Seeds from a (t1, t3) grid, pruned by a Lipschitz test, with t2, t4 projected.

    A grid node within half a cell of a zero has its predicted p2, p4 within
    ``L h / 2`` of the curves, where L bounds the speed of the predictions.
    Nodes failing that test (or whose |w| exceeds the search bound by more
    than the same slack) cannot be the nearest node to any zero.
    """
    g = grid_per_unit or config.grid_per_unit
    h = 1.0 / g
    A2, A4 = shape.predictors
    L1, L2 = g1.speed_bound, g2.speed_bound
    M = param_window(g1, g2, shape, config)
    B = search_bound(g1, g2, shape)

    t1 = np.arange(g) / g
    t3 = np.arange(-math.ceil(M * g), math.ceil((1.0 + M) * g) + 1) / g
    T1, T3 = np.meshgrid(t1, t3, indexing="ij")
    inside = np.abs(T3 - T1) <= M
    T1, T3 = T1[inside], T3[inside]
    p1, p3 = g1.eval(T1), g2.eval(T3)
    w = p1 - p3
    keep = np.abs(w) <= B + 0.5 * h * (L1 + L2)
    T1, T3, p1, p3 = T1[keep], T3[keep], p1[keep], p3[keep]

    proj1 = _Projector(g1, spacing=0.25 * h)
    proj2 = _Projector(g2, spacing=0.25 * h)
    p2_hat = (1.0 - A2) * p1 + A2 * p3
    p4_hat = (1.0 - A4) * p1 + A4 * p3
    d2, T2 = proj1(p2_hat)
    d4, T4 = proj2(p4_hat)
    slack2 = 0.5 * h * (abs(1.0 - A2) * L1 + abs(A2) * L2) + proj1.sample_gap
    slack4 = 0.5 * h * (abs(1.0 - A4) * L1 + abs(A4) * L2) + proj2.sample_gap
    keep = (d2 <= slack2) & (d4 <= slack4)
    return np.column_stack([T1[keep], T2[keep], T3[keep], T4[keep]])


# ------------------------------------------------------------------ Newton


@dataclass
class NewtonBatch:
    x: np.ndarray
    residual_norm: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    reason: np.ndarray


def _pinv_step(J: np.ndarray, r: np.ndarray, rcond: float = 1e-13) -> np.ndarray:
    U, S, Vt = np.linalg.svd(J)
    cutoff = rcond * S[:, :1]
    Sinv = np.where(S > cutoff, 1.0 / np.where(S > cutoff, S, 1.0), 0.0)
    coef = Sinv * np.einsum("nji,nj->ni", U, r)
    return -np.einsum("nji,nj->ni", Vt, coef)


def newton_batch(g1, g2, shape, X0: np.ndarray, config: SolveConfig, max_step: float = 0.5,
                 polish: int = 3, armijo: float = 1e-4) -> NewtonBatch:
    """Damped Newton with Armijo backtracking on |r|^2, run on every seed at once.

    Steps use the SVD pseudo-inverse so clean (rank-deficient) families are
    approached along the minimum-norm direction; step length is capped at
    ``max_step`` in parameter units.  Converged points get ``polish`` extra
    undamped steps to push parameter error below the residual tolerance.
    """
    pred = shape.predictors
    X = np.array(X0, dtype=float, copy=True)
    n = X.shape[0]
    R = batch_residual(g1, g2, pred, X)
    f = np.linalg.norm(R, axis=1)
    iters = np.zeros(n, dtype=int)
    alive = np.isfinite(f)
    reason = np.where(alive, "", "nonfinite").astype(object)
    limit = 4.0 * (param_window(g1, g2, shape, config) + 1.0)

    for _ in range(config.newton_max_iter):
        idx = np.flatnonzero(alive & (f >= config.newton_tol))
        if idx.size == 0:
            break
        Xa, Ra, fa = X[idx], R[idx], f[idx]
        J = batch_jacobian(g1, g2, pred, Xa)
        dx = _pinv_step(J, Ra)
        size = np.max(np.abs(dx), axis=1)
        lam = np.minimum(1.0, max_step / np.maximum(size, 1e-300))
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(30):
            if not pending.any():
                break
            p = np.flatnonzero(pending)
            Xt = Xa[p] + lam[p, None] * dx[p]
            Rt = batch_residual(g1, g2, pred, Xt)
            ft = np.linalg.norm(Rt, axis=1)
            ok = ft ** 2 <= (1.0 - 2.0 * armijo * lam[p]) * fa[p] ** 2
            acc = p[ok]
            Xa[acc], Ra[acc], fa[acc] = Xt[ok], Rt[ok], ft[ok]
            pending[acc] = False
            lam[p[~ok]] *= 0.5
        X[idx], R[idx], f[idx] = Xa, Ra, fa
        iters[idx] += 1
        stalled = idx[pending]
        alive[stalled] = False
        reason[stalled] = "line search failed"
        drifted = idx[np.max(np.abs(Xa - Xa[:, :1]), axis=1) > limit]
        alive[drifted] = False
        reason[drifted] = "left parameter window"

    conv = alive & (f < config.newton_tol)
    reason[alive & ~conv] = "iteration cap"
    reason[conv] = "converged"

    idx = np.flatnonzero(conv)
    for _ in range(polish):
        if idx.size == 0:
            break
        J = batch_jacobian(g1, g2, pred, X[idx])
        Xt = X[idx] + _pinv_step(J, R[idx])
        Rt = batch_residual(g1, g2, pred, Xt)
        ft = np.linalg.norm(Rt, axis=1)
        better = ft <= f[idx]
        sel = idx[better]
        X[sel], R[sel], f[sel] = Xt[better], Rt[better], ft[better]
        idx = sel
    return NewtonBatch(X, f, conv, iters, reason)


def _make_inscriptions(g1, g2, shape, X: np.ndarray, f: np.ndarray, iters: np.ndarray) -> list[Inscription]:
    if X.shape[0] == 0:
        return []
    X = X - np.floor(X[:, :1])
    X[X[:, 0] >= 1.0] -= 1.0
    P = batch_points(g1, g2, X)
    S = np.linalg.svd(batch_jacobian(g1, g2, shape.predictors, X), compute_uv=False)
    R = batch_residual(g1, g2, shape.predictors, X, P)
    out = []
    c = shape.c if isinstance(shape, TrapezoidType) else None
    for i in range(X.shape[0]):
        p = tuple(complex(v) for v in P[i])
        w = p[0] - p[2]
        z = p[0] - c * w if c is not None else _diagonal_intersection(*p)
        out.append(Inscription(InscriptionParams.from_array(X[i]), z, w, p,
                               float(np.linalg.norm(R[i])), float(S[i, -1]), int(iters[i])))
    return out


def _diagonal_intersection(p1, p2, p3, p4) -> complex:
    d1, d2 = p3 - p1, p4 - p2
    den = d1.real * d2.imag - d1.imag * d2.real
    if den == 0:
        return 0.5 * (p1 + p3)
    e = p2 - p1
    lam = (e.real * d2.imag - e.imag * d2.real) / den
    return p1 + lam * d1


def param_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Max-coordinate distance between canonical parameter vectors modulo integer translation."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    diff = a[:, None, :] - b[None, :, :]
    return np.min(np.stack([np.max(np.abs(diff - k), axis=2) for k in (-1.0, 0.0, 1.0)]), axis=0)


def deduplicate(sols: list[Inscription], tol: float) -> list[Inscription]:
    """Keep one representative (smallest residual) per cluster modulo translation."""
    kept: list[Inscription] = []
    kept_x = np.empty((0, 4))
    for s in sorted(sols, key=lambda s: s.residual_norm):
        x = s.params.as_array()
        if kept_x.shape[0] and np.min(param_distance(x, kept_x)) < tol:
            continue
        kept.append(s)
        kept_x = np.vstack([kept_x, x])
    kept.sort(key=lambda s: s.params.t1)
    return kept


def _group_families(g1, g2, shape, sols: list[Inscription], link: float) -> list[SolutionFamily]:
    """Single-linkage clusters (modulo translation) of degenerate zeros."""
    if not sols:
        return []
    X = np.array([s.params.as_array() for s in sols])
    D = param_distance(X, X)
    label = -np.ones(len(sols), dtype=int)
    nxt = 0
    for i in range(len(sols)):
        if label[i] >= 0:
            continue
        stack = [i]
        label[i] = nxt
        while stack:
            j = stack.pop()
            for k in np.flatnonzero((D[j] < link) & (label < 0)):
                label[k] = nxt
                stack.append(k)
        nxt += 1
    fams = []
    for lab in range(nxt):
        members = sorted((sols[i] for i in np.flatnonzero(label == lab)), key=lambda s: s.params.t1)
        J = batch_jacobian(g1, g2, shape.predictors, members[0].params.as_array()[None, :])[0]
        kernel = np.linalg.svd(J)[2][-1]
        if kernel[0] < 0:
            kernel = -kernel
        fams.append(SolutionFamily(members, kernel))
    return fams


def newton_refine(g1, g2, shape, seed: InscriptionParams, config: SolveConfig | None = None):
    """Refine one seed; returns (Inscription or None, reason)."""
    config = config or SolveConfig()
    if isinstance(g1, Polyline) or isinstance(g2, Polyline):
        raise ValueError("newton_refine needs smooth curves; mollify polylines first")
    res = newton_batch(g1, g2, shape, seed.as_array()[None, :], config)
    if not res.converged[0]:
        return None, str(res.reason[0])
    ins = _make_inscriptions(g1, g2, shape, res.x[:1], res.residual_norm[:1], res.iterations[:1])[0]
    if abs(ins.w) == 0.0:
        return None, "degenerate (w = 0)"
    return ins, "converged"


def solve_all(g1: PeriodicCurve, g2: PeriodicCurve, shape, config: SolveConfig | None = None) -> SolveResult:
    """All zeros of the residual system modulo translation, sorted by t1.

    Degenerate zeros (smallest singular value below ``degenerate_tol``) are
    grouped into :class:`SolutionFamily` objects.  An empty result carries a
    diagnostic, since at least one inscription always exists for valid input.
    """
    config = config or SolveConfig()
    if isinstance(g1, Polyline) or isinstance(g2, Polyline):
        raise ValueError("solve_all needs smooth curves; mollify polylines first")
    M = param_window(g1, g2, shape, config)
    B = search_bound(g1, g2, shape)
    n_seeds = 0
    g = config.grid_per_unit
    for attempt in range(config.retries + 1):
        seeds = reduced_seeds(g1, g2, shape, config, grid_per_unit=g)
        n_seeds += seeds.shape[0]
        res = newton_batch(g1, g2, shape, seeds, config)
        ok = res.converged
        sols = _make_inscriptions(g1, g2, shape, res.x[ok], res.residual_norm[ok], res.iterations[ok])
        sols = [s for s in sols if abs(s.w) > config.dedup_tol and s.residual_norm < config.newton_tol]
        if sols:
            break
        log.info("no zero from %d seeds at grid %d; refining", seeds.shape[0], g)
        g *= 2

    degenerate = [s for s in sols if s.jac_min_singular_value < config.degenerate_tol]
    isolated = [s for s in sols if s.jac_min_singular_value >= config.degenerate_tol]
    result = SolveResult(deduplicate(isolated, config.dedup_tol),
                         _group_families(g1, g2, shape, deduplicate(degenerate, config.dedup_tol), link=4.0 / g),
                         n_seeds=n_seeds, window=M, search_bound=B)
    if not result.found:
        result.diagnostic = (f"theorem violation: no inscription found for {shape} "
                             f"after {n_seeds} seeds; check curve validity or refine the grid")
        log.warning(result.diagnostic)
    return result


def vertical_line_solutions(alpha1: float, alpha2: float, ttype: TrapezoidType, s: float) -> Inscription:
    """Closed-form point of the clean family for the lines x = alpha1, x = alpha2.

    z = (1 - c) alpha1 + c alpha2 + s i and w = (alpha1 - alpha2)(1 - i tan(theta / 2)).
    Parameters are the lift picked out by s, not canonicalized.
    """
    if alpha1 == alpha2:
        raise ValueError("alpha1 == alpha2: the lines coincide, so the curves are not disjoint")
    c = ttype.c
    z = complex((1.0 - c) * alpha1 + c * alpha2, s)
    w = (alpha1 - alpha2) * complex(1.0, -math.tan(ttype.theta / 2.0))
    rw = ttype.rotation * w
    p = (z + c * w, z + c * rw, z + (c - 1.0) * w, z + (c - 1.0) * rw)
    params = InscriptionParams(p[0].imag, p[1].imag, p[2].imag, p[3].imag)
    g1, g2 = VerticalLine(alpha1), VerticalLine(alpha2)
    J = batch_jacobian(g1, g2, ttype.predictors, params.as_array()[None, :])[0]
    return Inscription(params, z, w, p, residual(g1, g2, ttype, params).norm,
                       float(np.linalg.svd(J, compute_uv=False)[-1]))
