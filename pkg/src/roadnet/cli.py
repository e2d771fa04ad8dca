"""Command line entry point: ``roadnet <subcommand> PATTERN [options]``.

Exit codes: 0 success/pass, 1 semantic failure (not regular, not balanced,
bound violated), 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from pathlib import Path

from . import __version__, fem, tensor
from .balance import check_balance
from .errors import (
    AssemblyError,
    DegenerateInputError,
    DomainError,
    GeometryError,
    MeshingError,
    ParameterError,
    PatternFileError,
    SolverError,
)
from .graphspace import compute_d
from .mesh import QUALITY_FLOOR, build_mesh, dump_mesh, load_mesh
from .pattern import unfold, validate_regularity
from .patternio import load_pattern
from .render import render_field, render_mesh, render_pattern

DEFAULTS = {
    "h": tensor.H_DEFAULT,
    "rtol": tensor.TENSOR_RTOL,
    "grid": 16,
    "quality_floor": QUALITY_FLOOR,
    "angle_tol_deg": 2.0,
    "balance_tol": 1e-9,
}

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
_SEED = 0


def _header(cmd, **params):
    items = dict(DEFAULTS)
    items.update({k: v for k, v in params.items() if v is not None})
    items["seed"] = _SEED
    body = " ".join(f"{k}={v}" for k, v in items.items())
    return f"roadnet {__version__} {cmd}: {body}; sigma=a/delta on strips"


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _offset(text):
    v = _floats(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError("offset must be 'x,y'")
    return tuple(v)


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- subcommands


def cmd_validate(args):
    pattern = load_pattern(args.pattern)
    report = validate_regularity(pattern, math.radians(args.angle_tol))
    _emit(f"# {_header('validate', angle_tol_deg=args.angle_tol)}\n{report.format()}\n", args.out)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_balance(args):
    pattern = load_pattern(args.pattern)
    report = check_balance(pattern, args.tol)
    head = f"# {_header('balance', balance_tol=args.tol)}\n"
    body = report.csv_rows() if args.format == "csv" else report.format()
    _emit(head + body + "\n", args.out)
    return EXIT_OK if report.is_balanced else EXIT_FAIL


def cmd_solve(args):
    pattern = load_pattern(args.pattern)
    rows = []
    if args.delta is None:
        est = tensor.sigma0_extrapolated(pattern, args.a, args.h, args.offset, args.rtol)
        rows = [(est.coarse, None), (est.fine, None)]
        t = est.coarse
        rich = tensor.EffectiveTensor(est.S, "richardson", t.a, t.h, None, 0.0, est.fine.length, pattern=pattern.name)
        rows.append((rich, None))
        if args.dump_fields:
            _, mesh, fields = tensor.solve_effective(pattern, args.a, args.h, args.offset, args.rtol)
    else:
        t, mesh, fields = tensor.solve_delta(pattern, args.a, args.delta, args.h, args.offset, args.rtol)
        rows = [(t, None)]
    text = tensor.tensor_csv(rows, [_header("solve", a=args.a, h=args.h, delta=args.delta, offset=args.offset, rtol=args.rtol)])
    _emit(text, args.out)
    if args.dump_fields:
        buf = io.StringIO()
        dump_mesh(mesh, buf, {f"w{f.k + 1}": f.nodal for f in fields})
        Path(args.dump_fields).write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args):
    pattern = load_pattern(args.pattern)
    head = _header("sweep", mode=args.mode, a=args.a, h=args.h, offset=args.offset, grid=args.grid)
    if args.mode == "delta":
        if not args.deltas:
            raise ParameterError("--deltas is required for mode delta")
        rep = tensor.commutation_sweep(pattern, args.a, args.deltas, h0=args.h, offset=args.offset)
        lines = [f"# {head}", "delta,S11,S12,S22,gap,relative_gap,error"]
        for d, t, g, err in rep.rows:
            if err:
                lines.append(f"{d:.6g},,,,,,{err}")
            else:
                lines.append(f"{d:.6g},{t.S[0, 0]:.12g},{t.S[0, 1]:.12g},{t.S[1, 1]:.12g},{g:.6e},{g / rep.reference_norm:.6e},")
        S = rep.sigma0.S
        lines.append(f"# sigma0 (Richardson): {S[0, 0]:.12g},{S[0, 1]:.12g},{S[1, 1]:.12g}")
        if rep.orders:
            lines.append("# observed orders: " + ",".join(f"{o:.4f}" for o in rep.orders))
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK if all(err is None for *_, err in rep.rows) else EXIT_NUMERIC
    if args.mode == "small-a":
        if not args.as_:
            raise ParameterError("--as is required for mode small-a")
        rep = tensor.small_a_sweep(pattern, args.as_, args.h, args.offset)
        lines = [f"# {head}", "a,deficit_h,deficit_h2,deficit_extrapolated,ratio"]
        lines += [f"{a:.6g},{d1:.12e},{d2:.12e},{de:.12e},{r:.10f}" for a, d1, d2, de, r in rep.rows]
        lines.append(f"# variation {rep.variation:.6f}")
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    # large-a
    if not args.as_:
        raise ParameterError("--as is required for mode large-a")
    d2 = compute_d(pattern, args.grid, args.h).d_squared
    rep = tensor.large_a_bound_check(pattern, args.as_, d2, args.h, args.offset)
    lines = [f"# {head}", f"# d_squared={d2:.12g}", "a,trace_h,trace_h2,eps_h,lower_bound,upper_bound,lower_ok,upper_ok"]
    lines += [f"{a:.6g},{t1:.12g},{t2:.12g},{e:.3e},{lo:.12g},{up:.12g},{int(lok)},{int(uok)}" for a, t1, t2, e, lo, up, lok, uok in rep.rows]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_compute_d(args):
    pattern = load_pattern(args.pattern)
    res = compute_d(pattern, args.grid, args.h)
    _emit(f"# {_header('compute-d', grid=args.grid, h=args.h)}\n" + res.csv(), args.out)
    return EXIT_OK


def cmd_render(args):
    pattern = load_pattern(args.pattern)
    if args.what == "pattern":
        svg = render_pattern(unfold(pattern, args.offset), pattern.name)
    elif args.what == "mesh":
        mesh = build_mesh(unfold(pattern, args.offset), args.h, args.delta)
        svg = render_mesh(mesh, f"{pattern.name} mesh h={args.h}")
    else:
        if not args.dump or not Path(args.dump).is_file():
            raise PatternFileError(f"field rendering needs an existing --dump file (got {args.dump!r})")
        with open(args.dump, encoding="utf-8") as fh:
            mesh, fields = load_mesh(fh)
        if args.field not in fields:
            raise PatternFileError(f"dump has no field {args.field!r}; available: {sorted(fields)}")
        svg = render_field(mesh, fields[args.field], f"{pattern.name} {args.field}")
    _emit(svg, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="roadnet", description="Effective diffusion of periodic road patterns.")
    p.add_argument("--version", action="version", version=f"roadnet {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("pattern", help="pattern file (JSON)")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--format", choices=("text", "csv"), default="text")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized checks (recorded only)")

    sp = sub.add_parser("validate", help="check that arcs meet nontangentially")
    common(sp)
    sp.add_argument("--angle-tol", type=float, default=DEFAULTS["angle_tol_deg"], help="degrees")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("balance", help="check the balance conditions")
    common(sp)
    sp.add_argument("--tol", type=float, default=DEFAULTS["balance_tol"])
    sp.set_defaults(func=cmd_balance)

    def numeric(sp):
        sp.add_argument("--a", type=float, default=1.0, help="road diffusivity")
        sp.add_argument("--h", type=_positive, default=DEFAULTS["h"], help="mesh size")
        sp.add_argument("--offset", type=_offset, default=(0.0, 0.0), help="coordinate translation 'x,y'")
        sp.add_argument("--rtol", type=_positive, default=DEFAULTS["rtol"])

    sp = sub.add_parser("solve", help="effective tensor (or strip tensor with --delta)")
    common(sp)
    numeric(sp)
    sp.add_argument("--delta", type=_positive, help="strip width; selects the thin-strip model")
    sp.add_argument("--dump-fields", help="write mesh and correctors to this dump file")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", help="commutation, small-a or large-a sweeps")
    common(sp)
    numeric(sp)
    sp.add_argument("--mode", choices=("delta", "small-a", "large-a"), default="delta")
    sp.add_argument("--deltas", type=_floats, help="decreasing strip widths 'd1,d2,...'")
    sp.add_argument("--as", dest="as_", type=_floats, help="diffusivities 'a1,a2,...'")
    sp.add_argument("--grid", type=int, default=DEFAULTS["grid"], help="offset grid for d (large-a)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compute-d", help="d_k distances over translations")
    common(sp)
    sp.add_argument("--grid", type=int, default=DEFAULTS["grid"])
    sp.add_argument("--h", type=_positive, default=DEFAULTS["h"])
    sp.set_defaults(func=cmd_compute_d)

    sp = sub.add_parser("render", help="SVG of the pattern, a mesh, or a dumped field")
    common(sp)
    sp.add_argument("--what", choices=("pattern", "mesh", "field"), default="pattern")
    sp.add_argument("--h", type=_positive, default=DEFAULTS["h"])
    sp.add_argument("--delta", type=_positive)
    sp.add_argument("--offset", type=_offset, default=(0.0, 0.0))
    sp.add_argument("--dump", help="dump file written by 'solve --dump-fields'")
    sp.add_argument("--field", default="w1")
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    global _SEED
    _SEED = args.seed
    try:
        return args.func(args)
    except (PatternFileError, ParameterError, GeometryError, DomainError, DegenerateInputError, KeyError) as exc:
        print(f"roadnet: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MeshingError, SolverError, AssemblyError) as exc:
        print(f"roadnet: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
