"""Deterministic SVG drawings of a curve pair with inscribed quadrilaterals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .curve import PeriodicCurve
from .solver import Inscription


@dataclass(frozen=True)
class RenderSpec:
    """Viewport ``x_range`` (None: fit the curves) by ``periods`` units of height from ``y0``."""

    x_range: Optional[tuple[float, float]] = None
    periods: int = 2
    y0: float = 0.0
    width: int = 480
    strokes: tuple[str, str] = ("#1f77b4", "#d62728")
    stroke_width: float = 2.0
    overlay_color: str = "#2ca02c"
    show_overlays: bool = True
    show_diagonals: bool = True
    show_labels: bool = True
    samples_per_period: int = 400

    def __post_init__(self):
        if self.periods < 1:
            raise ValueError("the viewport must cover at least one period")
        if self.x_range is not None and not self.x_range[0] < self.x_range[1]:
            raise ValueError("x_range must be increasing")
        if self.width < 16:
            raise ValueError("width too small")


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Frame:
    def __init__(self, x0: float, x1: float, y0: float, y1: float, width: int, pad: int = 24):
        self.x0, self.y1, self.pad = x0, y1, pad
        self.scale = (width - 2 * pad) / (x1 - x0)
        self.w = width
        self.h = int(round((y1 - y0) * self.scale)) + 2 * pad

    def __call__(self, p: complex) -> tuple[str, str]:
        return (_fmt(self.pad + (p.real - self.x0) * self.scale),
                _fmt(self.pad + (self.y1 - p.imag) * self.scale))


def _fit_x(curves: Sequence[PeriodicCurve], overlays: Sequence[Inscription]) -> tuple[float, float]:
    lo = min(c.x_range[0] for c in curves)
    hi = max(c.x_range[1] for c in curves)
    for ins in overlays:
        for v in ins.vertices:
            lo, hi = min(lo, v.real), max(hi, v.real)
    margin = 0.1 * max(hi - lo, 1e-3)
    return lo - margin, hi + margin


def _place(ins: Inscription, y0: float, y1: float) -> Inscription:
    """Translate by an integer so the quadrilateral's centre sits in the viewport when possible."""
    centre = sum(v.imag for v in ins.vertices) / 4.0
    k = math.floor((0.5 * (y0 + y1)) - centre + 0.5)
    d = 1j * k
    return Inscription(ins.params, ins.z + d, ins.w, tuple(v + d for v in ins.vertices),
                       ins.residual_norm, ins.jac_min_singular_value, ins.iterations)


def render_svg(g1: PeriodicCurve, g2: PeriodicCurve, inscriptions: Sequence[Inscription] = (),
               spec: RenderSpec | None = None) -> str:
    """SVG text; identical inputs give identical bytes."""
    spec = spec or RenderSpec()
    y0, y1 = spec.y0, spec.y0 + spec.periods
    placed = [_place(s, y0, y1) for s in inscriptions] if spec.show_overlays else []
    x0, x1 = spec.x_range or _fit_x((g1, g2), placed)
    fr = _Frame(x0, x1, y0, y1, spec.width)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{fr.w}" height="{fr.h}" '
           f'viewBox="0 0 {fr.w} {fr.h}">',
           '<defs><clipPath id="view">'
           f'<rect x="{fr.pad}" y="{fr.pad}" width="{fr.w - 2 * fr.pad}" height="{fr.h - 2 * fr.pad}"/>'
           '</clipPath></defs>',
           f'<rect x="{fr.pad}" y="{fr.pad}" width="{fr.w - 2 * fr.pad}" height="{fr.h - 2 * fr.pad}" '
           'fill="none" stroke="#999" stroke-width="0.5"/>',
           '<g clip-path="url(#view)">']
    for i, (curve, color) in enumerate(zip((g1, g2), spec.strokes)):
        reach = math.ceil(curve.drift) + 1
        n = spec.samples_per_period * (spec.periods + 2 * reach)
        t = np.linspace(y0 - reach, y1 + reach, n + 1)
        pts = " ".join(",".join(fr(p)) for p in curve.eval(t))
        out.append(f'<polyline class="curve" id="gamma{i + 1}" points="{pts}" fill="none" '
                   f'stroke="{color}" stroke-width="{_fmt(spec.stroke_width)}"/>')
    out.append("</g>")

    for j, ins in enumerate(placed):
        p1, p2, p3, p4 = ins.vertices
        out.append(f'<g class="inscription" id="q{j}">')
        ring = " ".join(",".join(fr(p)) for p in (p1, p2, p3, p4))
        out.append(f'<polygon points="{ring}" fill="{spec.overlay_color}" fill-opacity="0.12" '
                   f'stroke="{spec.overlay_color}" stroke-width="1.5"/>')
        if spec.show_diagonals:
            for a, b in ((p1, p3), (p2, p4)):
                (ax, ay), (bx, by) = fr(a), fr(b)
                out.append(f'<line class="diagonal" x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" '
                           f'stroke="{spec.overlay_color}" stroke-dasharray="4 3"/>')
        for k, p in enumerate((p1, p2, p3, p4), start=1):
            cx, cy = fr(p)
            out.append(f'<circle class="vertex" cx="{cx}" cy="{cy}" r="3" fill="{spec.overlay_color}"/>')
            if spec.show_labels:
                out.append(f'<text x="{_fmt(float(cx) + 5)}" y="{_fmt(float(cy) - 5)}" '
                           f'font-family="sans-serif" font-size="11">p{k}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
