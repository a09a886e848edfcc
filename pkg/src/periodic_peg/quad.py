"""Quadrilateral similarity types and vertex reconstruction.

An isosceles trapezoid type is the pair ``(c, theta)``: the diagonals cut each
other in ratio c : (1 - c) and meet at angle theta.  With diagonal data
``(z, w)`` the labeled vertices are::

    p1 = z + c w            p3 = z + (c - 1) w
    p2 = z + c e^{i theta} w    p4 = z + (c - 1) e^{i theta} w
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

CLASSIFY_TOL = 1e-8
MIN_VERTEX_SEPARATION = 1e-6


class DegenerateQuadError(ValueError):
    pass


@dataclass(frozen=True)
class TrapezoidType:
    c: float
    theta: float

    def __post_init__(self):
        if not (0.0 < self.c <= 0.5):
            raise ValueError(f"c must lie in (0, 1/2], got {self.c}")
        if not (0.0 < self.theta < math.pi):
            raise ValueError(f"theta must lie in (0, pi), got {self.theta}")

    @property
    def rotation(self) -> complex:
        return cmath.exp(1j * self.theta)

    @property
    def predictors(self) -> tuple[complex, complex]:
        """(A2, A4) with p2 = p1 + A2 (p3 - p1) and p4 = p1 + A4 (p3 - p1)."""
        e = self.rotation
        return self.c * (1.0 - e), self.c + (1.0 - self.c) * e

    def __str__(self) -> str:
        return f"(c={self.c:g}, theta={self.theta:g})"


@dataclass(frozen=True)
class QuadSimilarityType:
    """Reference quadrilateral q1..q4 normalized so that q1 = 0 and q3 = 1."""

    q1: complex
    q2: complex
    q3: complex
    q4: complex

    def __post_init__(self):
        q = self.vertices
        if abs(q[0]) > 1e-12 or abs(q[2] - 1.0) > 1e-12:
            raise DegenerateQuadError("reference vertices must satisfy q1 = 0, q3 = 1; use QuadSimilarityType.normalized")
        for i in range(4):
            for j in range(i + 1, 4):
                if abs(q[i] - q[j]) < MIN_VERTEX_SEPARATION:
                    raise DegenerateQuadError(f"vertices q{i + 1} and q{j + 1} coincide")
        crosses = [_cross(q[(i + 1) % 4] - q[i], q[(i + 2) % 4] - q[(i + 1) % 4]) for i in range(4)]
        if not (all(x > 0 for x in crosses) or all(x < 0 for x in crosses)):
            raise DegenerateQuadError("vertices are not in strictly convex position")

    @classmethod
    def normalized(cls, p1: complex, p2: complex, p3: complex, p4: complex) -> "QuadSimilarityType":
        """Apply the orientation-preserving similarity sending p1 -> 0, p3 -> 1."""
        p1, p2, p3, p4 = (complex(p) for p in (p1, p2, p3, p4))
        if p1 == p3:
            raise DegenerateQuadError("p1 and p3 coincide")
        f = lambda p: (p - p1) / (p3 - p1)
        return cls(0j, f(p2), 1 + 0j, f(p4))

    @property
    def vertices(self) -> tuple[complex, complex, complex, complex]:
        return (complex(self.q1), complex(self.q2), complex(self.q3), complex(self.q4))

    @property
    def predictors(self) -> tuple[complex, complex]:
        return complex(self.q2), complex(self.q4)

    def relabelings(self) -> list["QuadSimilarityType"]:
        """Distinct normalized types over the 8 cyclic relabelings and the mirror image."""
        q = self.vertices
        seen, out = set(), []
        for mirror in (False, True):
            base = [v.conjugate() for v in q] if mirror else list(q)
            for step in (1, -1):
                for start in range(4):
                    order = [base[(start + step * i) % 4] for i in range(4)]
                    t = QuadSimilarityType.normalized(*order)
                    key = tuple(round(x, 10) for v in t.vertices for x in (v.real, v.imag))
                    if key not in seen:
                        seen.add(key)
                        out.append(t)
        return out


def _cross(u: complex, v: complex) -> float:
    return u.real * v.imag - u.imag * v.real


def vertices_from_zw(z: complex, w: complex, ttype: TrapezoidType) -> tuple[complex, complex, complex, complex]:
    """Return (p1, p2, p3, p4) with (p1, p3) = psi_c(z, w) and (p2, p4) = psi_c(R_theta(z, w)).

    ``w = 0`` gives the degenerate configuration with every vertex at z.
    """
    c = ttype.c
    rw = ttype.rotation * w
    return (z + c * w, z + c * rw, z + (c - 1.0) * w, z + (c - 1.0) * rw)


def zw_from_diagonal(p1: complex, p3: complex, ttype: TrapezoidType) -> tuple[complex, complex]:
    """Invert psi_c on the first diagonal: w = p1 - p3, z = p1 - c w."""
    w = p1 - p3
    return p1 - ttype.c * w, w


class Classification(NamedTuple):
    c: float
    theta: float
    balanced: bool


@dataclass(frozen=True)
class ClassifyFailure:
    reason: str

    def __bool__(self) -> bool:
        return False


def classify_quad(p1: complex, p2: complex, p3: complex, p4: complex,
                  tol: float = CLASSIFY_TOL) -> Classification | ClassifyFailure:
    """Recognize a labeled isosceles trapezoid with p1p2 parallel to p3p4.

    Returns ``Classification(c, theta, balanced)`` with c in (0, 1/2]; when
    the given labeling has the long side first the diagonal roles are swapped
    and ``balanced`` is False.  Anything else returns a falsy
    :class:`ClassifyFailure` carrying the reason.  ``tol`` is absolute on
    coordinates scaled to unit diameter.
    """
    pts = [complex(p) for p in (p1, p2, p3, p4)]
    diam = max(abs(a - b) for a in pts for b in pts)
    if diam == 0.0:
        return ClassifyFailure("all vertices coincide")
    pts = [(p - pts[0]) / diam for p in pts]
    p1, p2, p3, p4 = pts
    for i in range(4):
        for j in range(i + 1, 4):
            if abs(pts[i] - pts[j]) <= tol:
                return ClassifyFailure(f"vertices p{i + 1} and p{j + 1} coincide")

    # diagonal intersection p1 + lam (p3 - p1) = p2 + mu (p4 - p2)
    d1, d2 = p3 - p1, p4 - p2
    den = _cross(d1, d2)
    if abs(den) <= tol:
        return ClassifyFailure("diagonals are parallel (collinear or degenerate labeling)")
    lam = _cross(p2 - p1, d2) / den
    mu = _cross(p2 - p1, d1) / den
    if not (0.0 < lam < 1.0 and 0.0 < mu < 1.0):
        return ClassifyFailure("diagonals do not cross inside both segments (self-crossing or non-convex labeling)")

    c = 0.5 * (lam + mu)
    if abs(c - 0.5) <= tol:
        # rectangle: both parallel sides have the same length
        c = min(c, 0.5)
    balanced = c <= 0.5
    if not balanced:
        # relabel (p1, p2) <-> (p3, p4)
        p1, p2, p3, p4 = p3, p4, p1, p2
        c = 1.0 - c
    ratio = (p2 - p4) / (p1 - p3)
    theta = abs(cmath.phase(ratio))
    if theta <= tol or math.pi - theta <= tol:
        return ClassifyFailure("diagonals are collinear")
    if cmath.phase(ratio) < 0:
        # mirror-image labeling; compare against the reflected reconstruction
        p1, p2, p3, p4 = (p.conjugate() for p in (p1, p2, p3, p4))

    z, w = p1 - c * (p1 - p3), p1 - p3
    rw = cmath.exp(1j * theta) * w
    err = max(abs(p2 - (z + c * rw)), abs(p4 - (z + (c - 1.0) * rw)))
    if err > tol:
        return ClassifyFailure(f"not an isosceles trapezoid with p1p2 || p3p4 (defect {err:.3g})")
    return Classification(c, theta, balanced)


def trapezoid_to_reference(ttype: TrapezoidType) -> QuadSimilarityType:
    """Reference vertices of the type with q1 = 0 and q3 = 1 (z0 = c, w0 = -1)."""
    return QuadSimilarityType(*vertices_from_zw(complex(ttype.c), -1 + 0j, ttype))


def is_isosceles_trapezoid(qtype: QuadSimilarityType, tol: float = CLASSIFY_TOL) -> bool:
    """True when some relabeling of the quadrilateral is an isosceles trapezoid."""
    q = qtype.vertices
    for start in range(4):
        for step in (1, -1):
            order = [q[(start + step * i) % 4] for i in range(4)]
            if classify_quad(*order, tol=tol):
                return True
    return False


def shape_width(shape) -> float:
    """Minimal strip width of the normalized reference quadrilateral (|q3 - q1| = 1)."""
    q = np.array(reference_vertices(shape))
    best = math.inf
    for i in range(4):
        a, b = q[i], q[(i + 1) % 4]
        e = b - a
        d = np.abs((q - a).real * e.imag - (q - a).imag * e.real) / abs(e)
        best = min(best, float(d.max()))
    return best


def reference_vertices(shape) -> tuple[complex, complex, complex, complex]:
    if isinstance(shape, TrapezoidType):
        return trapezoid_to_reference(shape).vertices
    return shape.vertices


def as_shape(shape) -> TrapezoidType | QuadSimilarityType:
    if isinstance(shape, (TrapezoidType, QuadSimilarityType)):
        return shape
    raise TypeError(f"expected TrapezoidType or QuadSimilarityType, got {type(shape).__name__}")
