"""Periodic plane curves gamma(t + 1) = gamma(t) + i confined to a vertical strip.

Three representations share one evaluation interface:

* :class:`VerticalLine` -- ``t -> alpha + i t``
* :class:`FourierCurve` -- ``t -> i t + sum_k a_k exp(2 pi i k t)``
* :class:`Polyline` -- piecewise-linear through ``m`` samples per period, with
  the implicit closure ``sample[m] = sample[0] + i``.

All ``eval``/``deriv`` methods accept scalars or numpy arrays of parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class VerticalLine:
    alpha: float

    smooth = True

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        return self.alpha + 1j * t

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, 1j, dtype=complex)

    @property
    def speed_bound(self) -> float:
        return 1.0

    @property
    def drift(self) -> float:
        """max_t |Im gamma(t) - t|."""
        return 0.0

    @property
    def x_range(self) -> tuple[float, float]:
        return (self.alpha, self.alpha)

    def __repr__(self) -> str:
        return f"VerticalLine(alpha={self.alpha!r})"


@dataclass(frozen=True, eq=False)
class FourierCurve:
    """``t -> i t + sum_{k=kmin}^{kmin+len-1} coeffs[k - kmin] exp(2 pi i k t)``."""

    coeffs: np.ndarray
    kmin: int

    smooth = True

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex).ravel()
        if coeffs.size == 0:
            coeffs = np.zeros(1, dtype=complex)
            object.__setattr__(self, "kmin", 0)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "kmin", int(self.kmin))

    @classmethod
    def from_modes(cls, modes: dict[int, complex]) -> "FourierCurve":
        """Build from a sparse ``{k: a_k}`` mapping."""
        if not modes:
            return cls(np.zeros(1), 0)
        kmin, kmax = min(min(modes), 0), max(max(modes), 0)
        coeffs = np.zeros(kmax - kmin + 1, dtype=complex)
        for k, a in modes.items():
            coeffs[k - kmin] += a
        return cls(coeffs, kmin)

    @cached_property
    def ks(self) -> np.ndarray:
        return np.arange(self.kmin, self.kmin + self.coeffs.size)

    @property
    def K(self) -> int:
        return int(np.max(np.abs(self.ks)))

    def coeff(self, k: int) -> complex:
        j = k - self.kmin
        if 0 <= j < self.coeffs.size:
            return complex(self.coeffs[j])
        return 0j

    def _series(self, t: np.ndarray, weights: np.ndarray) -> np.ndarray:
        if weights.size > 256:
            # long series: one numpy op per coefficient is too slow, use blocks of exp(2 pi i k t)
            flat = t.ravel()
            out = np.empty(flat.shape, dtype=complex)
            step = max(1, (1 << 21) // weights.size)
            for i in range(0, flat.size, step):
                out[i:i + step] = np.exp(1j * TWO_PI * np.outer(flat[i:i + step], self.ks)) @ weights
            return out.reshape(t.shape)
        # Horner in z = exp(2 pi i t), then the factor z^kmin
        z = np.exp(1j * TWO_PI * t)
        acc = np.full(t.shape, weights[-1], dtype=complex)
        for w in weights[-2::-1]:
            acc *= z
            acc += w
        if self.kmin:
            acc *= np.exp(1j * TWO_PI * self.kmin * t)
        return acc

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        return 1j * t + self._series(t, self.coeffs)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        return 1j + self._series(t, 1j * TWO_PI * self.ks * self.coeffs)

    def grid_values(self, n: int) -> np.ndarray:
        """gamma(j / n) - i j / n for j = 0..n-1, via one inverse FFT."""
        buf = np.zeros(n, dtype=complex)
        np.add.at(buf, np.mod(self.ks, n), self.coeffs)
        return np.fft.ifft(buf) * n

    def second_deriv(self, t):
        t = np.asarray(t, dtype=float)
        return self._series(t, -(TWO_PI * self.ks) ** 2 * self.coeffs)

    @cached_property
    def speed_bound(self) -> float:
        """Certified upper bound on max_t |gamma'(t)|."""
        return 1.0 + float(np.sum(TWO_PI * np.abs(self.ks) * np.abs(self.coeffs)))

    @cached_property
    def drift(self) -> float:
        ts = _dense_grid(self)
        return _refine_extreme(lambda t: abs(float(np.imag(self._series(np.asarray(t), self.coeffs)))), ts,
                               np.abs(self.grid_values(ts.size).imag))

    @cached_property
    def x_range(self) -> tuple[float, float]:
        ts = _dense_grid(self)
        x = self.grid_values(ts.size).real
        hi = _refine_extreme(lambda t: float(np.real(self.eval(t))), ts, x)
        lo = -_refine_extreme(lambda t: -float(np.real(self.eval(t))), ts, -x)
        return (lo, hi)

    def __repr__(self) -> str:
        return f"FourierCurve(K={self.K}, kmin={self.kmin})"


@dataclass(frozen=True, eq=False)
class Polyline:
    """Piecewise-linear periodic curve; ``samples[j]`` sits at ``t = j / m``."""

    samples: np.ndarray

    smooth = False

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex).ravel()
        if s.size < 2:
            raise ValueError("a polyline needs at least two samples per period")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def m(self) -> int:
        return self.samples.size

    @cached_property
    def closed(self) -> np.ndarray:
        """Samples with the closure point appended (length m + 1)."""
        return np.append(self.samples, self.samples[0] + 1j)

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        u = t * self.m
        n = np.floor(u)
        frac = u - n
        n = n.astype(np.int64)
        j = np.mod(n, self.m)
        k = (n - j) // self.m
        return j, k, frac

    def eval(self, t):
        j, k, frac = self._locate(t)
        c = self.closed
        return (1.0 - frac) * c[j] + frac * c[j + 1] + 1j * k

    def deriv(self, t):
        """One-sided slope inside a segment; the mean of both slopes at a vertex."""
        j, _, frac = self._locate(t)
        c = self.closed
        ahead = self.m * (c[j + 1] - c[j])
        jm = np.mod(j - 1, self.m)
        behind = self.m * (c[jm + 1] - c[jm])
        return np.where(frac == 0.0, 0.5 * (ahead + behind), ahead)

    @cached_property
    def speed_bound(self) -> float:
        return float(self.m * np.max(np.abs(np.diff(self.closed))))

    @cached_property
    def drift(self) -> float:
        # Im gamma(t) - t is linear on each segment, so vertices carry the extremes
        return float(np.max(np.abs(self.samples.imag - np.arange(self.m) / self.m)))

    @cached_property
    def x_range(self) -> tuple[float, float]:
        return (float(self.samples.real.min()), float(self.samples.real.max()))

    def __repr__(self) -> str:
        return f"Polyline(m={self.m})"


PeriodicCurve = Union[VerticalLine, FourierCurve, Polyline]


def _dense_grid(curve: FourierCurve) -> np.ndarray:
    n = max(256, 32 * curve.K)
    return np.arange(n) / n


def _refine_extreme(f, ts, values, n_candidates: int = 4) -> float:
    """Polish the largest grid values of ``f`` with bounded scalar maximization."""
    h = ts[1] - ts[0]
    best = float(np.max(values))
    for i in np.argsort(values)[::-1][:n_candidates]:
        res = minimize_scalar(lambda t: -f(t), bounds=(ts[i] - h, ts[i] + h), method="bounded",
                              options={"xatol": 1e-13})
        best = max(best, -float(res.fun))
    return best


def eval(curve: PeriodicCurve, t):
    return curve.eval(t)


def deriv(curve: PeriodicCurve, t):
    return curve.deriv(t)


def strip_halfwidth(curve: PeriodicCurve) -> float:
    """Smallest N with |Re gamma(t)| <= N for all t."""
    lo, hi = curve.x_range
    return max(abs(lo), abs(hi))


def flux(curve: PeriodicCurve) -> float:
    """Integral of x dy over one period.

    This is the abscissa of the vertical line that bounds zero signed area
    with the curve on the cylinder.
    """
    if isinstance(curve, VerticalLine):
        return float(curve.alpha)
    if isinstance(curve, FourierCurve):
        # int Re f (1 + Im f') dt = Re a_0 + pi sum_k k |a_k|^2
        return float(curve.coeff(0).real + math.pi * np.sum(curve.ks * np.abs(curve.coeffs) ** 2))
    c = curve.closed
    return float(np.sum(0.5 * (c.real[:-1] + c.real[1:]) * np.diff(c.imag)))


# ---------------------------------------------------------------- distances


@dataclass(frozen=True)
class DistanceWitness:
    distance: float
    t1: float
    t2: float


def min_distance(c1: PeriodicCurve, c2: PeriodicCurve, rel_precision: float = 1e-3,
                 stop_below: float = -1.0, max_boxes: int = 2_000_000) -> DistanceWitness:
    """Minimum distance between the images of two periodic curves on the cylinder.

    Branch and bound over parameter boxes ``[0,1) x [window]`` using the
    speed bounds as Lipschitz constants, followed by a local polish of the best
    box.  The search stops early once a pair closer than ``stop_below`` is seen.
    """
    L1, L2 = c1.speed_bound, c2.speed_bound
    n0 = 64
    t0 = (np.arange(n0) + 0.5) / n0
    ub = float(np.min(np.abs(c1.eval(t0) - c2.eval(t0))))
    # |Im(gamma1(t) - gamma2(s))| >= |t - s| - drift1 - drift2
    reach = ub + c1.drift + c2.drift + 1.0 / n0
    h = 1.0 / n0
    s_lo = -math.ceil(reach * n0) * h
    s_hi = 1.0 - s_lo
    ns = int(math.ceil((s_hi - s_lo) / h))
    tt, ss = np.meshgrid(np.arange(n0) * h, s_lo + np.arange(ns) * h, indexing="ij")
    lo_t, lo_s = tt.ravel(), ss.ravel()
    best_t, best_s = float(t0[0]), float(t0[0])
    best = np.inf
    while lo_t.size:
        ct, cs = lo_t + 0.5 * h, lo_s + 0.5 * h
        d = np.abs(c1.eval(ct) - c2.eval(cs))
        i = int(np.argmin(d))
        if d[i] < best:
            best, best_t, best_s = float(d[i]), float(ct[i]), float(cs[i])
        if best <= stop_below:
            break
        lb = d - 0.5 * h * (L1 + L2)
        keep = lb < best * (1.0 - rel_precision)
        if not np.any(keep):
            break
        lo_t, lo_s = lo_t[keep], lo_s[keep]
        h *= 0.5
        if 4 * lo_t.size > max_boxes:
            break
        lo_t = np.concatenate([lo_t, lo_t + h, lo_t, lo_t + h])
        lo_s = np.concatenate([lo_s, lo_s, lo_s + h, lo_s + h])

    if best > stop_below and best > 0.0 and c1.smooth and c2.smooth:
        def fun(x):
            diff = c1.eval(x[0]) - c2.eval(x[1])
            g1, g2 = c1.deriv(x[0]), c2.deriv(x[1])
            val = float(abs(diff) ** 2)
            grad = np.array([2 * np.real(np.conj(diff) * g1), -2 * np.real(np.conj(diff) * g2)], dtype=float)
            return val, grad

        res = minimize(fun, np.array([best_t, best_s]), jac=True, method="BFGS", options={"gtol": 1e-14})
        polished = math.sqrt(max(float(res.fun), 0.0))
        if polished < best:
            best, best_t, best_s = polished, float(res.x[0]), float(res.x[1])
    k = math.floor(best_t)
    return DistanceWitness(best, best_t - k, best_s - k)


def is_disjoint(c1: PeriodicCurve, c2: PeriodicCurve, tol: float = 1e-9) -> tuple[bool, DistanceWitness]:
    """True iff the images on the cylinder stay more than ``tol`` apart."""
    w = min_distance(c1, c2, stop_below=tol)
    return w.distance > tol, w


# ------------------------------------------------------------- embeddedness


def uniform_samples(curve: PeriodicCurve, n: int, lo: int = 0, hi: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Parameters j / n covering [lo, hi] (integers) and the curve points there."""
    t = np.arange(lo * n, hi * n + 1) / n
    if isinstance(curve, FourierCurve):
        base = curve.grid_values(n)
        j = np.arange(lo * n, hi * n + 1)
        return t, base[np.mod(j, n)] + 1j * t
    return t, curve.eval(t)


def _sample_polygon(curve: PeriodicCurve) -> np.ndarray:
    if isinstance(curve, Polyline):
        return curve.closed
    if isinstance(curve, VerticalLine):
        return curve.eval(np.array([0.0, 0.5, 1.0]))
    n = min(max(512, 32 * (2 * curve.K + 1)), 1 << 16)
    return uniform_samples(curve, n)[1]


def _segment_distance(a0, a1, b0, b1) -> np.ndarray:
    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    def point_seg(p, s0, s1):
        d = s1 - s0
        L2 = np.maximum(np.abs(d) ** 2, 1e-300)
        u = np.clip(np.real((p - s0) * np.conj(d)) / L2, 0.0, 1.0)
        return np.abs(p - (s0 + u * d))

    da, db = a1 - a0, b1 - b0
    o1, o2 = cross(da, b0 - a0), cross(da, b1 - a0)
    o3, o4 = cross(db, a0 - b0), cross(db, a1 - b0)
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    dist = np.minimum.reduce([point_seg(a0, b0, b1), point_seg(a1, b0, b1),
                              point_seg(b0, a0, a1), point_seg(b1, a0, a1)])
    return np.where(proper, 0.0, dist)


def is_embedded(curve: PeriodicCurve, tol: float = 1e-9) -> bool:
    """True iff the induced closed curve on the cylinder has no self-contact closer than ``tol``."""
    if isinstance(curve, VerticalLine):
        return True
    if isinstance(curve, FourierCurve) and curve.speed_bound - 1.0 < 1.0:
        # t -> i t + f(t) with Lip(f) < 1 is injective on the cylinder
        return True
    P = _sample_polygon(curve)
    n = P.size - 1
    a0, a1 = P[:-1], P[1:]
    shifts = range(-(int(math.ceil(2 * curve.drift)) + 1), int(math.ceil(2 * curve.drift)) + 2)
    b0 = np.concatenate([a0 + 1j * k for k in shifts])
    b1 = np.concatenate([a1 + 1j * k for k in shifts])
    b_idx = np.concatenate([np.arange(n) + k * n for k in shifts])

    ylo_a, yhi_a = np.minimum(a0.imag, a1.imag), np.maximum(a0.imag, a1.imag)
    ylo_b, yhi_b = np.minimum(b0.imag, b1.imag), np.maximum(b0.imag, b1.imag)
    order = np.argsort(ylo_b)
    ylo_sorted = ylo_b[order]
    tallest = float(np.max(yhi_b - ylo_b))
    start = np.searchsorted(ylo_sorted, ylo_a - tallest - tol, side="left")
    stop = np.searchsorted(ylo_sorted, yhi_a + tol, side="right")
    counts = stop - start
    ia = np.repeat(np.arange(n), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    ib = order[np.repeat(start, counts) + offsets]
    sep = np.abs(b_idx[ib] - ia)
    ia, ib = ia[sep > 1], ib[sep > 1]
    overlap = (ylo_b[ib] <= yhi_a[ia] + tol) & (yhi_b[ib] >= ylo_a[ia] - tol)
    ia, ib = ia[overlap], ib[overlap]
    if ia.size == 0:
        return True
    d = _segment_distance(a0[ia], a1[ia], b0[ib], b1[ib])
    return bool(np.all(d > tol))


# ------------------------------------------------------------- mollification


def mollify(curve: Polyline, sigma: float, K: int = 32) -> FourierCurve:
    """Periodic Gaussian smoothing (std ``sigma`` in t) of ``t -> gamma(t) - i t``, truncated to |k| <= K.

    The Fourier coefficients of the piecewise-linear input are exact: the
    sample DFT times the hat-function transform sinc^2(k/m).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if K < 1:
        raise ValueError("K must be at least 1")
    m = curve.m
    f = curve.samples - 1j * np.arange(m) / m
    ks = np.arange(-K, K + 1)
    dft = (np.fft.fft(f) / m)[np.mod(ks, m)]
    coeffs = dft * np.sinc(ks / m) ** 2 * np.exp(-2.0 * math.pi ** 2 * sigma ** 2 * ks ** 2)
    return FourierCurve(coeffs, -K)


def resample(curve: PeriodicCurve, m: int) -> Polyline:
    """Polyline through ``m`` uniformly spaced parameter samples of ``curve``."""
    return Polyline(curve.eval(np.arange(m) / m))


class CurveValidationError(ValueError):
    """A curve or curve pair violates the standing hypotheses."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


MAX_HALFWIDTH = 10.0


@dataclass(frozen=True, eq=False)
class CurvePair:
    """A validated pair of disjoint embedded periodic curves.

    Validation runs on construction; the strip half-width N and the minimum
    distance are cached for the bound computations downstream.
    """

    gamma1: PeriodicCurve
    gamma2: PeriodicCurve
    tol: float = 1e-9

    def __post_init__(self):
        for name, c in (("gamma1", self.gamma1), ("gamma2", self.gamma2)):
            if strip_halfwidth(c) > MAX_HALFWIDTH:
                raise CurveValidationError(
                    "strip", f"{name} leaves the strip |x| <= {MAX_HALFWIDTH:g}; normalize the pair first")
            if not is_embedded(c, self.tol):
                raise CurveValidationError("embedded", f"curve not embedded: {name} self-intersects")
        ok, witness = is_disjoint(self.gamma1, self.gamma2, self.tol)
        if not ok:
            raise CurveValidationError(
                "disjoint", f"curves not disjoint (distance {witness.distance:.3g} at t1={witness.t1:.6f}, "
                            f"t2={witness.t2:.6f})")
        object.__setattr__(self, "_witness", witness)

    @property
    def min_distance(self) -> DistanceWitness:
        return self._witness

    @cached_property
    def halfwidth(self) -> float:
        return max(strip_halfwidth(self.gamma1), strip_halfwidth(self.gamma2))

    def __iter__(self):
        return iter((self.gamma1, self.gamma2))
