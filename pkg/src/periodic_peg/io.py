"""JSON readers and writers for curves, pairs, quadrilaterals, configs and inscriptions.

Curve objects::

    {"type": "vertical", "alpha": 0.5}
    {"type": "fourier", "kmin": -2, "coeffs": [[re, im], ...]}
    {"type": "polyline", "samples": [[x, y], ...]}

A pair file is ``{"gamma1": <curve>, "gamma2": <curve>}``; a quad file is
``{"vertices": [[x, y] x 4]}``; a config file is a flat object of
:class:`SolveConfig` fields.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .curve import CurvePair, FourierCurve, PeriodicCurve, Polyline, VerticalLine
from .quad import QuadSimilarityType
from .solver import Inscription, SolveConfig


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def _point(v: Any, what: str) -> complex:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise InputError(f"{what}: expected [x, y], got {v!r}")
    try:
        x, y = float(v[0]), float(v[1])
    except (TypeError, ValueError):
        raise InputError(f"{what}: non-numeric entry {v!r}") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InputError(f"{what}: non-finite entry {v!r}")
    return complex(x, y)


def _points(seq: Any, what: str) -> np.ndarray:
    if not isinstance(seq, list) or not seq:
        raise InputError(f"{what}: expected a non-empty list of [x, y] pairs")
    return np.array([_point(v, f"{what}[{i}]") for i, v in enumerate(seq)])


def curve_from_dict(d: Any, name: str = "curve") -> PeriodicCurve:
    if not isinstance(d, dict) or "type" not in d:
        raise InputError(f"{name}: expected an object with a 'type' field")
    kind = d["type"]
    try:
        if kind == "vertical":
            alpha = float(d["alpha"])
            if not math.isfinite(alpha):
                raise InputError(f"{name}: alpha must be finite")
            return VerticalLine(alpha)
        if kind == "fourier":
            return FourierCurve(_points(d["coeffs"], f"{name}.coeffs"), int(d.get("kmin", 0)))
        if kind == "polyline":
            return Polyline(_points(d["samples"], f"{name}.samples"))
    except KeyError as exc:
        raise InputError(f"{name}: missing field {exc.args[0]!r} for type {kind!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{name}: {exc}") from None
    raise InputError(f"{name}: unknown curve type {kind!r} (vertical, fourier or polyline)")


def curve_to_dict(curve: PeriodicCurve) -> dict:
    pair = lambda v: [float(v.real), float(v.imag)]
    if isinstance(curve, VerticalLine):
        return {"type": "vertical", "alpha": float(curve.alpha)}
    if isinstance(curve, FourierCurve):
        return {"type": "fourier", "kmin": int(curve.kmin), "coeffs": [pair(v) for v in curve.coeffs]}
    if isinstance(curve, Polyline):
        return {"type": "polyline", "samples": [pair(v) for v in curve.samples]}
    raise TypeError(f"cannot serialize {type(curve).__name__}")


def read_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from None


def write_json(path: str | Path, data: Any) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def curves_from_pair_dict(d: Any) -> tuple[PeriodicCurve, PeriodicCurve]:
    if not isinstance(d, dict) or "gamma1" not in d or "gamma2" not in d:
        raise InputError("pair file needs 'gamma1' and 'gamma2'")
    return curve_from_dict(d["gamma1"], "gamma1"), curve_from_dict(d["gamma2"], "gamma2")


def load_pair(path: str | Path, validate: bool = True):
    """Read a pair file; with ``validate`` the result is a :class:`CurvePair`
    (raising CurveValidationError when the hypotheses fail)."""
    g1, g2 = curves_from_pair_dict(read_json(path))
    return CurvePair(g1, g2) if validate else (g1, g2)


def pair_to_dict(g1: PeriodicCurve, g2: PeriodicCurve, **meta) -> dict:
    out = {"gamma1": curve_to_dict(g1), "gamma2": curve_to_dict(g2)}
    if meta:
        out["meta"] = meta
    return out


def save_pair(path: str | Path, g1: PeriodicCurve, g2: PeriodicCurve, **meta) -> None:
    write_json(path, pair_to_dict(g1, g2, **meta))


def load_quad(path: str | Path) -> QuadSimilarityType:
    d = read_json(path)
    if not isinstance(d, dict) or "vertices" not in d:
        raise InputError("quad file needs 'vertices'")
    pts = _points(d["vertices"], "vertices")
    if pts.size != 4:
        raise InputError("quad file needs exactly four vertices")
    try:
        return QuadSimilarityType.normalized(*pts)
    except ValueError as exc:
        raise InputError(f"invalid quadrilateral: {exc}") from None


def load_config(path: str | Path | None, overrides: dict | None = None) -> SolveConfig:
    """Defaults, then the config file, then ``overrides`` (CLI flags; None values skipped)."""
    data: dict = {}
    if path is not None:
        raw = read_json(path)
        if not isinstance(raw, dict):
            raise InputError("config file must hold a JSON object")
        data.update(raw)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return SolveConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid config: {exc}") from None


def load_inscriptions(path: str | Path) -> list[Inscription]:
    """Inscriptions from a solve output file: isolated ones plus one representative per family."""
    d = read_json(path)
    if isinstance(d, list):
        items = d
    elif isinstance(d, dict):
        items = list(d.get("inscriptions", []))
        items += [f["samples"][0] for f in d.get("families", []) if f.get("samples")]
    else:
        raise InputError("inscriptions file must hold a list or a solve result object")
    try:
        return [Inscription.from_dict(x) for x in items]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"malformed inscription entry: {exc}") from None
