"""``fibrelin`` command line: analyze, simulate, verify, lift.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 numerical
failure.  Errors are written to stdout as a JSON object ``{"kind": "error", ...}``.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import FibrelinError, InputError
from .normal_form import build_normal_form
from .ode import InputSignal, Trajectory
from .report import analysis_report, default_tolerance, format_analysis, run_verification
from .sim import lift_curve, simulate
from .system import SystemDef, load_system, solve_fibre

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(InputError):
    pass


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None


def _point(sys: SystemDef, text: str | None) -> dict[str, float] | None:
    if text is None:
        return None
    vals = _floats(text, "--point")
    if len(vals) != sys.n:
        raise UsageError(f"--point needs {sys.n} values, got {len(vals)}")
    return dict(zip(sys.states, vals))


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        _sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# --- commands -------------------------------------------------------------------


def cmd_analyze(args) -> int:
    sys = load_system(args.file)
    point = _point(sys, args.point)
    nf = build_normal_form(sys, point)
    report = analysis_report(sys, nf, point, seed=args.seed, tol=args.tol)
    if args.json:
        _write(dump_json(report), args.out)
    else:
        _write(format_analysis(report), args.out)
    return EXIT_OK if report["pass"] else EXIT_VERIFY


def cmd_simulate(args) -> int:
    sys = load_system(args.file)
    nf = None if args.mode == "full" else build_normal_form(sys)
    if args.x0 is None:
        x0 = list(nf.phi_program()(sys.point_array())) if args.mode == "linear" else list(sys.point_array())
    else:
        x0 = _floats(args.x0, "--x0")
    signal = InputSignal(args.input)
    traj = simulate(sys, nf, args.mode, x0, signal, args.t_end, args.dt)
    input_name = "v" if args.mode in ("lifted", "linear") else sys.input
    warnings = []
    if args.mode == "zero":
        phi = nf.phi_program()
        drift = max(float(np.max(np.abs(phi(x) - phi(traj.states[0])))) for x in traj.states)
        if drift > 1e-6:
            warnings.append(f"Phi drifted by {drift:.3e} along the zero dynamics")
    csv_text = traj.to_csv(input_name)
    summary = {
        "kind": "simulation", "version": __version__, "system": sys.name, "mode": args.mode,
        "input": str(signal.expr), "x0": [float(v) for v in x0], "t_end": args.t_end, "dt": args.dt,
        "steps": len(traj.times) - 1,
        "final": dict(zip(traj.names, map(float, traj.final))),
        "warnings": warnings,
    }
    if args.out is None or args.out == "-":
        _sys.stdout.write(csv_text)
        _sys.stderr.write(dump_json(summary))
    else:
        Path(args.out).write_text(csv_text)
        _sys.stdout.write(dump_json(summary))
    return EXIT_OK


def cmd_verify(args) -> int:
    sys = load_system(args.file)
    nf = build_normal_form(sys)
    report = run_verification(sys, nf, trials=args.trials, seed=args.seed, tol=args.tol)
    _write(dump_json(report), args.out)
    return EXIT_OK if report["pass"] else EXIT_VERIFY


def cmd_lift(args) -> int:
    sys = load_system(args.file)
    nf = build_normal_form(sys)
    try:
        text = Path(args.curve).read_text()
    except OSError as err:
        raise UsageError(f"cannot read {args.curve}: {err.strerror}") from None
    base = Trajectory.from_csv(text)
    if base.states.shape[1] != nf.r:
        raise UsageError(f"base curve has {base.states.shape[1]} coordinates, expected r = {nf.r}")
    if args.x0 is not None:
        x0 = np.array(_floats(args.x0, "--x0"))
        if x0.size != sys.n:
            raise UsageError(f"--x0 needs {sys.n} values")
    else:
        jac = nf.jacobian_program()
        x0 = solve_fibre(nf.phi_program(),
                         lambda x: jac(x).reshape(nf.n, nf.n)[: nf.r].ravel(),
                         base.states[0], sys.point_array())
        if x0 is None:
            raise UsageError("could not find a start point on the fibre over the first sample; pass --x0")
    lifted = lift_curve(nf, base, x0, sys=sys)
    phi = nf.phi_program()
    residual = max(float(np.max(np.abs(phi(x) - z))) for x, z in zip(lifted.states, base.states))
    csv_text = lifted.to_csv("v")
    summary = {"kind": "lift", "version": __version__, "system": sys.name,
               "x0": [float(v) for v in x0], "samples": len(lifted.times),
               "final": dict(zip(lifted.names, map(float, lifted.final))),
               "projection_residual": {"observed": residual, "tol": 1e-6, "bound": "upper",
                                       "samples": len(lifted.times), "skipped": 0,
                                       "pass": residual <= 1e-6}}
    if args.out is None or args.out == "-":
        _sys.stdout.write(csv_text)
        _sys.stderr.write(dump_json(summary))
    else:
        Path(args.out).write_text(csv_text)
        _sys.stdout.write(dump_json(summary))
    return EXIT_OK if residual <= 1e-6 else EXIT_VERIFY


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fibrelin",
        description="Normal forms, horizontal lifts and zero dynamics of SISO affine systems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="relative degree, normal form, connection, zero dynamics")
    a.add_argument("file")
    a.add_argument("--point", help="operating point, comma separated (default: from the file)")
    a.add_argument("--json", action="store_true", help="emit the JSON report instead of text")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--tol", type=float, default=None, help="tolerance (default: $FIBRELIN_TOL or 1e-9)")
    a.add_argument("--out", help="write the report to a file")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="integrate F, the lifted system, f^Z or the linear quotient")
    s.add_argument("file")
    s.add_argument("--mode", choices=("full", "lifted", "zero", "linear"), default="full")
    s.add_argument("--x0", help="initial state, comma separated (r values in linear mode)")
    s.add_argument("--input", default="0", help="input signal: a number or an expression in t")
    s.add_argument("--t-end", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--out", help="CSV path (default: stdout, summary on stderr)")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run the seeded invariant suites")
    v.add_argument("file")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=None, help="tolerance (default: $FIBRELIN_TOL or 1e-9)")
    v.add_argument("--out", help="write the report to a file")
    v.set_defaults(func=cmd_verify)

    lf = sub.add_parser("lift", help="horizontally lift a z-space curve given as CSV")
    lf.add_argument("file")
    lf.add_argument("curve", help="CSV with header t,z1,...,zr,<input>")
    lf.add_argument("--x0", help="start point on the fibre over the first sample")
    lf.add_argument("--out", help="CSV path (default: stdout, summary on stderr)")
    lf.set_defaults(func=cmd_lift)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "tol", None) is None and hasattr(args, "tol"):
            args.tol = default_tolerance()
        return args.func(args)
    except FibrelinError as err:
        code = EXIT_INPUT if isinstance(err, InputError) else EXIT_NUMERIC
        _sys.stdout.write(dump_json({"kind": "error", "exit_code": code, "error": err.to_dict()}))
        return code
    except (OSError, ValueError) as err:
        detail = {"type": type(err).__name__, "message": str(err)}
        _sys.stdout.write(dump_json({"kind": "error", "exit_code": EXIT_INPUT, "error": detail}))
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
