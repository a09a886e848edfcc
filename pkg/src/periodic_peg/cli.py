"""Command-line interface: ``periodic-peg {solve,sweep,render,converge,conjecture,selftest}``.

Exit codes: 0 success with solutions, 2 invalid input, 3 no-solution
diagnostic, 4 internal numerical failure.

Solver settings come from the defaults, then ``--config FILE`` (JSON), then
explicit flags; later sources win.  Angles are radians unless given through
the ``--theta-deg`` / ``--degrees`` flags.  Worker processes for sweeps and
conjecture trials: environment variable PERIODIC_PEG_THREADS (default 1).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .curve import CurveValidationError, Polyline, VerticalLine
from .io import InputError, load_config, load_inscriptions, load_pair, load_quad, read_json, \
    curves_from_pair_dict
from .quad import TrapezoidType
from .render import RenderSpec, render_svg
from .solver import solve_all, vertical_line_solutions
from .system import residual

EXIT_OK, EXIT_INPUT, EXIT_NONE, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("periodic_peg")


class CliInputError(Exception):
    pass


def _theta(args) -> float:
    if args.theta_deg is not None:
        return math.radians(args.theta_deg)
    if args.theta is None:
        raise CliInputError("one of --theta (radians) or --theta-deg is required")
    return args.theta


def _trapezoid(args) -> TrapezoidType:
    try:
        return TrapezoidType(args.c, _theta(args))
    except ValueError as exc:
        raise CliInputError(str(exc)) from None


def _grid(text: str, degrees: bool = False) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliInputError(f"cannot parse grid {text!r}; expected comma-separated numbers") from None
    if not vals:
        raise CliInputError("empty grid")
    return [math.radians(v) for v in vals] if degrees else vals


def _config(args):
    overrides = {"grid_per_unit": getattr(args, "grid_per_unit", None),
                 "newton_tol": getattr(args, "newton_tol", None)}
    return load_config(getattr(args, "config", None), overrides)


def _smooth_pair(path):
    g1, g2 = curves_from_pair_dict(read_json(path))
    if isinstance(g1, Polyline) or isinstance(g2, Polyline):
        raise CliInputError("polyline input needs smoothing first: use the converge command")
    return load_pair(path)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _inscription_rows(sols) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t1", "t2", "t3", "t4", "z_re", "z_im", "w_re", "w_im", "residual_norm", "jac_min_singular_value"])
    for s in sols:
        w.writerow([repr(v) for v in (*s.params.as_array().tolist(), s.z.real, s.z.imag, s.w.real, s.w.imag,
                                      s.residual_norm, s.jac_min_singular_value)])
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def cmd_solve(args) -> int:
    shape = _trapezoid(args)
    config = _config(args)
    pair = _smooth_pair(args.pair)
    res = solve_all(pair.gamma1, pair.gamma2, shape, config)
    if args.format == "csv":
        _emit(_inscription_rows(res.all_inscriptions()), args.output)
    else:
        data = {"shape": {"c": shape.c, "theta": shape.theta}, "config": dataclasses.asdict(config),
                **res.to_dict()}
        _emit(json.dumps(data, indent=2, sort_keys=True) + "\n", args.output)
    if not res.found:
        print(res.diagnostic, file=sys.stderr)
        return EXIT_NONE
    if res.families:
        print(f"degenerate: {len(res.families)} clean solution famil{'y' if len(res.families) == 1 else 'ies'}",
              file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    pair = _smooth_pair(args.pair)
    thetas = _grid(args.theta_grid, args.degrees) if args.theta_grid else [k * math.pi / 6 for k in range(1, 6)]
    report = experiments.sweep(pair, _grid(args.c_grid), thetas, _config(args),
                               meta={"pair_file": Path(args.pair).name})
    Path(args.out + ".csv").write_text(report.to_csv(), encoding="utf-8")
    Path(args.out + ".json").write_text(report.to_json() + "\n", encoding="utf-8")
    empty = [x for x in report.cells if not x.ok]
    print(f"{len(report.cells)} cells, {len(empty)} without inscriptions -> {args.out}.csv, {args.out}.json")
    return EXIT_NONE if empty else EXIT_OK


def cmd_render(args) -> int:
    g1, g2 = curves_from_pair_dict(read_json(args.pair))
    sols = load_inscriptions(args.inscriptions) if args.inscriptions else []
    x_range = None
    if args.x_min is not None or args.x_max is not None:
        if args.x_min is None or args.x_max is None:
            raise CliInputError("give both --x-min and --x-max")
        x_range = (args.x_min, args.x_max)
    try:
        spec = RenderSpec(x_range=x_range, periods=args.periods, y0=args.y0, width=args.width,
                          show_diagonals=not args.no_diagonals, show_labels=not args.no_labels)
    except ValueError as exc:
        raise CliInputError(str(exc)) from None
    Path(args.output).write_text(render_svg(g1, g2, sols, spec), encoding="utf-8")
    return EXIT_OK


def cmd_converge(args) -> int:
    shape = _trapezoid(args)
    g1, g2 = curves_from_pair_dict(read_json(args.pair))
    schedule = experiments.default_schedule(args.stages, first=args.first_stage)
    report = experiments.converge(g1, g2, shape, schedule, _config(args))
    Path(args.out + ".csv").write_text(report.to_csv(), encoding="utf-8")
    Path(args.out + ".json").write_text(report.to_json() + "\n", encoding="utf-8")
    for i, c in enumerate(report.candidates):
        print(f"candidate {i}: {c.status}, final drift {c.final_drift:.3g}, "
              f"cauchy={c.cauchy(report.cauchy_tol)}, nondegenerate={c.nondegenerate}")
    if report.diagnostics:
        for d in report.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_NONE
    return EXIT_OK


def cmd_conjecture(args) -> int:
    qtype = load_quad(args.quad)
    try:
        report = experiments.conjecture_search(qtype, args.trials, _config(args), first_seed=args.seed,
                                               modes=args.modes, amplitude=args.amplitude)
    except experiments.IsoscelesInputError as exc:
        raise CliInputError(str(exc)) from None
    Path(args.out + ".csv").write_text(report.to_csv(), encoding="utf-8")
    Path(args.out + ".json").write_text(report.to_json() + "\n", encoding="utf-8")
    print(f"{len(report.trials)} trials: {len(report.zero_trials)} without inscriptions, "
          f"{len(report.inscribed_trials)} with")
    return EXIT_OK


def selftest_checks(n: int = 200, seed: int = 7) -> list[tuple[str, bool, str]]:
    """Closed-form vertical-line checks; returns (name, passed, detail) triples."""
    rng = np.random.default_rng(seed)
    worst_r = worst_z = worst_w = 0.0
    for _ in range(n):
        a1, a2 = rng.uniform(-3, 3, 2)
        ttype = TrapezoidType(rng.uniform(0.01, 0.5), rng.uniform(0.05, math.pi - 0.05))
        s = rng.uniform(-5, 5)
        ins = vertical_line_solutions(a1, a2, ttype, s)
        worst_r = max(worst_r, residual(VerticalLine(a1), VerticalLine(a2), ttype, ins.params).norm)
        worst_z = max(worst_z, abs(ins.z - complex((1 - ttype.c) * a1 + ttype.c * a2, s)))
        worst_w = max(worst_w, abs(ins.w - (a1 - a2) * complex(1.0, -math.tan(ttype.theta / 2))))
    checks = [("closed-form residual < 1e-12", worst_r < 1e-12, f"max {worst_r:.2e}"),
              ("z on the line x = (1-c)a1 + c a2", worst_z < 1e-14, f"max {worst_z:.2e}"),
              ("w = (a1 - a2)(1 - i tan(theta/2))", worst_w < 1e-14, f"max {worst_w:.2e}")]
    ttype = TrapezoidType(0.5, math.pi / 2)
    res = solve_all(VerticalLine(0.0), VerticalLine(1.0), ttype)
    fam_ok = len(res.families) == 1 and not res.inscriptions
    err = max((abs(s.w - complex(-1, 1)) + abs(s.z.real - 0.5) for s in res.all_inscriptions()), default=math.inf)
    checks.append(("solver reports one clean family for lines x=0, x=1", fam_ok, f"{len(res.families)} families"))
    checks.append(("family samples match z = 1/2 + si, w = -1 + i", err < 1e-9, f"max {err:.2e}"))
    return checks


def cmd_selftest(args) -> int:
    checks = selftest_checks()
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_NUMERIC


# ------------------------------------------------------------------ parser


def _add_shape(p) -> None:
    p.add_argument("--c", type=float, required=True, help="diagonal ratio parameter in (0, 1/2]")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--theta", type=float, help="angle between diagonals, radians")
    g.add_argument("--theta-deg", type=float, help="angle between diagonals, degrees")


def _add_config(p) -> None:
    p.add_argument("--config", help="JSON file of solver settings")
    p.add_argument("--grid-per-unit", type=int, help="seed density per unit parameter")
    p.add_argument("--newton-tol", type=float, help="Newton residual tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="periodic-peg", description=__doc__.split("\n")[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter,
                                     epilog=__doc__.split("\n", 2)[2])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="find all balanced inscriptions of a trapezoid type")
    p.add_argument("pair")
    _add_shape(p)
    _add_config(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-o", "--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve over a grid of (c, theta)")
    p.add_argument("pair")
    p.add_argument("--c-grid", default="0.1,0.2,0.3,0.4,0.5")
    p.add_argument("--theta-grid", help="comma-separated angles, radians unless --degrees "
                                        "(default: pi/6, pi/3, pi/2, 2pi/3, 5pi/6)")
    p.add_argument("--degrees", action="store_true", help="theta grid in degrees")
    p.add_argument("--out", default="sweep", help="output prefix for .csv and .json")
    _add_config(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="draw curves and inscriptions as SVG")
    p.add_argument("pair")
    p.add_argument("inscriptions", nargs="?", help="output of solve (JSON)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--periods", type=int, default=2)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--width", type=int, default=480)
    p.add_argument("--no-diagonals", action="store_true")
    p.add_argument("--no-labels", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("converge", help="mollification limit for polyline pairs")
    p.add_argument("pair")
    _add_shape(p)
    p.add_argument("--stages", type=int, default=12)
    p.add_argument("--first-stage", type=int, default=4, help="first sigma is 2^-first_stage")
    p.add_argument("--out", default="converge", help="output prefix for .csv and .json")
    _add_config(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("conjecture", help="search random pairs for a non-trapezoid quadrilateral")
    p.add_argument("quad")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=1, help="first random_pair seed")
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--out", default="conjecture", help="output prefix for .csv and .json")
    _add_config(p)
    p.set_defaults(func=cmd_conjecture)

    p = sub.add_parser("selftest", help="closed-form vertical-line checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliInputError, InputError, CurveValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
