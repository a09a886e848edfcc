"""Residual map whose zeros are the balanced inscriptions.

The unknowns are the curve parameters (t1, t2, t3, t4) of
p1 = g1(t1), p2 = g1(t2), p3 = g2(t3), p4 = g2(t4).  The first diagonal fixes
(z, w); the residual is the defect of p2 and p4 from the positions predicted
by the quadrilateral type, stacked as four reals
``(Re, Im)(g1(t2) - p2_hat), (Re, Im)(g2(t4) - p4_hat)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curve import PeriodicCurve, Polyline
from .quad import QuadSimilarityType, TrapezoidType, zw_from_diagonal


@dataclass(frozen=True)
class InscriptionParams:
    t1: float
    t2: float
    t3: float
    t4: float

    @classmethod
    def from_array(cls, x) -> "InscriptionParams":
        return cls(*(float(v) for v in np.asarray(x, dtype=float).ravel()[:4]))

    def as_array(self) -> np.ndarray:
        return np.array([self.t1, self.t2, self.t3, self.t4])

    def canonical(self) -> "InscriptionParams":
        """Translate so that t1 lies in [0, 1)."""
        k = math.floor(self.t1)
        out = translate(self, -k)
        if out.t1 >= 1.0:
            out = translate(out, -1)
        return out


@dataclass(frozen=True)
class ResidualValue:
    r: np.ndarray
    jac: Optional[np.ndarray] = None

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.r))


def translate(params: InscriptionParams, k: int) -> InscriptionParams:
    """Shift every parameter by the integer k (vertices move by k i)."""
    return InscriptionParams(params.t1 + k, params.t2 + k, params.t3 + k, params.t4 + k)


def vertices(g1: PeriodicCurve, g2: PeriodicCurve, params: InscriptionParams) -> tuple[complex, ...]:
    return (complex(g1.eval(params.t1)), complex(g1.eval(params.t2)),
            complex(g2.eval(params.t3)), complex(g2.eval(params.t4)))


def _stack(d2: complex, d4: complex) -> np.ndarray:
    return np.array([d2.real, d2.imag, d4.real, d4.imag])


def residual(g1: PeriodicCurve, g2: PeriodicCurve, ttype: TrapezoidType,
             params: InscriptionParams) -> ResidualValue:
    p1, p2, p3, p4 = vertices(g1, g2, params)
    z, w = zw_from_diagonal(p1, p3, ttype)
    rw = ttype.rotation * w
    p2_hat = z + ttype.c * rw
    p4_hat = z + (ttype.c - 1.0) * rw
    return ResidualValue(_stack(p2 - p2_hat, p4 - p4_hat))


def general_residual(g1: PeriodicCurve, g2: PeriodicCurve, qtype: QuadSimilarityType,
                     params: InscriptionParams) -> ResidualValue:
    """Defect against the orientation-preserving similarity with q1 -> p1, q3 -> p3."""
    p1, p2, p3, p4 = vertices(g1, g2, params)
    q1, q2, q3, q4 = qtype.vertices
    scale = (p3 - p1) / (q3 - q1)
    p2_hat = p1 + scale * (q2 - q1)
    p4_hat = p1 + scale * (q4 - q1)
    return ResidualValue(_stack(p2 - p2_hat, p4 - p4_hat))


def jacobian(g1: PeriodicCurve, g2: PeriodicCurve, shape, params: InscriptionParams) -> np.ndarray:
    """Analytic 4x4 derivative of the residual with respect to (t1, t2, t3, t4)."""
    if isinstance(g1, Polyline) or isinstance(g2, Polyline):
        raise ValueError("jacobian needs smooth curves; mollify polylines first")
    J = batch_jacobian(g1, g2, shape.predictors, params.as_array()[None, :])
    return J[0]


# ----------------------------------------------------------- batch kernels
#
# p2_hat = (1 - A2) p1 + A2 p3,  p4_hat = (1 - A4) p1 + A4 p3


def batch_points(g1, g2, T: np.ndarray) -> np.ndarray:
    P = np.empty(T.shape, dtype=complex)
    P[:, 0] = g1.eval(T[:, 0])
    P[:, 1] = g1.eval(T[:, 1])
    P[:, 2] = g2.eval(T[:, 2])
    P[:, 3] = g2.eval(T[:, 3])
    return P


def batch_residual(g1, g2, predictors, T: np.ndarray, P: np.ndarray | None = None) -> np.ndarray:
    A2, A4 = predictors
    if P is None:
        P = batch_points(g1, g2, T)
    p1, p3 = P[:, 0], P[:, 2]
    d2 = P[:, 1] - ((1.0 - A2) * p1 + A2 * p3)
    d4 = P[:, 3] - ((1.0 - A4) * p1 + A4 * p3)
    return np.stack([d2.real, d2.imag, d4.real, d4.imag], axis=1)


def batch_jacobian(g1, g2, predictors, T: np.ndarray) -> np.ndarray:
    A2, A4 = predictors
    D = np.empty(T.shape, dtype=complex)
    D[:, 0] = g1.deriv(T[:, 0])
    D[:, 1] = g1.deriv(T[:, 1])
    D[:, 2] = g2.deriv(T[:, 2])
    D[:, 3] = g2.deriv(T[:, 3])
    n = T.shape[0]
    zero = np.zeros(n, dtype=complex)
    row2 = np.stack([-(1.0 - A2) * D[:, 0], D[:, 1], -A2 * D[:, 2], zero], axis=1)
    row4 = np.stack([-(1.0 - A4) * D[:, 0], zero, -A4 * D[:, 2], D[:, 3]], axis=1)
    J = np.empty((n, 4, 4))
    J[:, 0], J[:, 1] = row2.real, row2.imag
    J[:, 2], J[:, 3] = row4.real, row4.imag
    return J
