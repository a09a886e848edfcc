"""Balanced inscriptions of quadrilaterals in pairs of disjoint periodic plane curves."""

from .continuation import continue_family, flux_homotopy, linear_homotopy
from .curve import (CurvePair, CurveValidationError, FourierCurve, Polyline, VerticalLine, flux, is_disjoint,
                    is_embedded, mollify, resample, strip_halfwidth)
from .experiments import conjecture_search, converge, random_pair, sweep
from .quad import QuadSimilarityType, TrapezoidType, classify_quad
from .render import RenderSpec, render_svg
from .solver import Inscription, SolveConfig, SolveResult, newton_refine, solve_all, vertical_line_solutions, w_bound
from .system import InscriptionParams, jacobian, residual

__all__ = [
    "CurvePair", "CurveValidationError", "FourierCurve", "Polyline", "VerticalLine", "flux", "is_disjoint",
    "is_embedded", "mollify", "resample", "strip_halfwidth", "QuadSimilarityType", "TrapezoidType",
    "classify_quad", "Inscription", "SolveConfig", "SolveResult", "newton_refine", "solve_all",
    "vertical_line_solutions", "w_bound", "InscriptionParams", "jacobian", "residual", "continue_family",
    "flux_homotopy", "linear_homotopy", "conjecture_search", "converge", "random_pair", "sweep", "RenderSpec",
    "render_svg",
]
