"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import constitutive as cm
from . import rotations as rp
from .errors import ConfigError, GimbalLock, NotOrthonormal, PiRotation, ScrewDynError
from .scenario import load_scenarios
from .simulate import format_records, run_many

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
QUAT_INPUT_TOL = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(x: float) -> str:
    return "%.17g" % (x + 0.0)  # no "-0"


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="")


# ---------------------------------------------------------------- simulate


def _output_paths(config: Path, out: str | None, fmt: str, names: list) -> list:
    if out == "-":
        if len(names) > 1:
            raise UsageError("--out - (stdout) needs a single-scenario config")
        return ["-"]
    base = Path(out) if out else config.with_suffix("." + fmt)
    if len(names) == 1:
        return [str(base)]
    return [str(base.with_name(f"{base.stem}.{n}{base.suffix or '.' + fmt}")) for n in names]


def cmd_simulate(args) -> int:
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    scenarios = load_scenarios(text, str(path))
    outs = _output_paths(path, args.out, args.format, [s.name for s in scenarios])
    results = run_many(scenarios)
    code = EXIT_OK
    lines = []
    for res, out in zip(results, outs):
        _write(format_records(res.records, args.format), out)
        for k, v in res.summary():
            lines.append(f"{k}={v}")
        lines.append(f"output={out}")
        if res.status != "ok":
            code = EXIT_NUMERIC
            print(f"error: scenario {res.scenario.name!r}: {res.message}", file=sys.stderr)
    summary = "\n".join(lines) + "\n"
    # keep stdout parseable when the trajectory itself goes to stdout
    (sys.stderr if outs == ["-"] else sys.stdout).write(summary)
    return code


# ---------------------------------------------------------------- convert-rotation


def cmd_convert(args) -> int:
    n = rp.param_size(args.src)
    vals = np.array(args.values, dtype=float)
    if vals.size != n:
        raise UsageError(f"--from {args.src} expects {n} values, got {vals.size}")
    if not np.all(np.isfinite(vals)):
        raise UsageError("values must be finite numbers")
    if args.src == "quat":
        norm = float(np.linalg.norm(vals))
        if abs(norm - 1.0) > QUAT_INPUT_TOL:
            raise UsageError(f"quaternion norm {norm!r} is not within {QUAT_INPUT_TOL} of 1")
        if abs(norm - 1.0) > 1e-15:
            print(f"warning: quaternion norm {norm!r} renormalized to 1", file=sys.stderr)
            vals = vals / norm
    try:
        c = rp.to_matrix(args.src, vals)
        if args.src == "matrix":
            c = rp.as_rotation(vals.reshape(3, 3))
        out = rp.from_matrix(args.dst, c)
    except PiRotation as exc:
        raise UsageError(f"cannot represent as fedorov: {exc} (the vector-parameter tan(angle/2)*axis is infinite)")
    except GimbalLock as exc:
        raise UsageError(f"cannot represent as euler: {exc} (cos(theta) = 0, gimbal lock)")
    except NotOrthonormal as exc:
        raise UsageError(f"input matrix is not a rotation: {exc}")
    print(" ".join(_fmt(x) for x in out))
    return EXIT_OK


# ---------------------------------------------------------------- constitutive


def _coeffs(raw: str, basis: str) -> cm.RheologyCoeffs:
    parts = raw.split(",")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"--coeffs must be four comma-separated numbers, got {raw!r}") from None
    if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"--coeffs must be four finite comma-separated numbers r0,r1,r2,r3, got {raw!r}")
    return cm.RheologyCoeffs(*vals, basis=basis)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _matrix_arg(path: str, dim: int) -> np.ndarray:
    try:
        m = cm.read_matrix_csv(_read_text(path))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if m.shape != (dim, dim):
        raise UsageError(f"{path}: expected a {dim}x{dim} matrix for --dim {dim}, got {m.shape[0]}x{m.shape[1]}")
    return m


def cmd_constitutive(args) -> int:
    r = _coeffs(args.coeffs, args.basis)
    dim = args.dim
    if args.action == "apply":
        _write(cm.format_matrix_csv(cm.constitutive_apply(r, _matrix_arg(args.file, dim))), args.out)
    elif args.action == "invert":
        t = _matrix_arg(args.file, dim)
        try:
            u = cm.constitutive_invert(r, t, dim)
        except cm.IncorrectContinuum as exc:
            raise UsageError(f"{exc}; the inverse exists only when (r1*trI + r2)*r2*r3 != 0") from None
        _write(cm.format_matrix_csv(u), args.out)
    elif args.action == "moduli":
        m = cm.moduli(r, dim)
        res = m.identity_residual()
        text = (f"young={_fmt(m.young)}\nshear={_fmt(m.shear)}\npoisson={_fmt(m.poisson)}\n"
                f"identity_residual={_fmt(res)}\nidentity_ok={'true' if res <= 1e-12 else 'false'}\n")
        _write(text, args.out)
    else:
        if args.h is None:
            raise UsageError("div needs --h <spacing>")
        if not args.h > 0:
            raise UsageError("--h must be positive")
        try:
            field = cm.read_field_csv(_read_text(args.file))
        except (ValueError, KeyError) as exc:
            raise UsageError(f"{args.file}: {exc}") from None
        if len(field.axes) != dim:
            raise UsageError(f"{args.file}: field is {len(field.axes)}-dimensional but --dim is {dim}")
        for k, ax in enumerate(field.axes):
            if ax.size > 1 and np.max(np.abs(np.diff(ax) - args.h)) > 1e-9 * max(1.0, args.h):
                raise UsageError(f"{args.file}: lattice spacing along {'xyz'[k]} does not match --h {args.h!r}")
        if field.prefix == "T":
            div = cm.div_stress_field(field.values, args.h)
        else:
            if not r.constant:
                raise UsageError("U fields need constant coefficients")
            div = cm.div_stress_termwise(field.values, r.values(), args.h, r.basis)
        _write(cm.format_vector_field_csv(field.axes, div), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="screwdyn", description="Screw-calculus mechanics engine")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="integrate a scenario config")
    s.add_argument("config")
    s.add_argument("--out", help="trajectory path ('-' for stdout); default: config path with the format suffix")
    s.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("convert-rotation", help="convert between rotation parameterizations")
    c.add_argument("--from", dest="src", required=True, choices=rp.PARAM_KINDS)
    c.add_argument("--to", dest="dst", required=True, choices=rp.PARAM_KINDS)
    c.add_argument("values", nargs="+", type=float)
    c.set_defaults(func=cmd_convert)

    k = sub.add_parser("constitutive", help="evaluate constitutive relations")
    k.add_argument("--coeffs", required=True, help="r0,r1,r2,r3")
    k.add_argument("--dim", type=int, choices=(2, 3), required=True)
    k.add_argument("--basis", choices=cm.BASES, default="symskew")
    k.add_argument("--out", help="output path (default stdout)")
    k.add_argument("action", choices=("apply", "invert", "moduli", "div"))
    k.add_argument("file", nargs="?", help="matrix or field CSV ('-' for stdin)")
    k.add_argument("--h", type=float, help="grid spacing for div")
    k.set_defaults(func=cmd_constitutive)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "action", None) in ("apply", "invert", "div") and args.file is None:
            raise UsageError(f"constitutive {args.action} needs an input file")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScrewDynError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
