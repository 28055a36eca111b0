"""Command-line front end.

Exit status: 0 on success, 2 on usage errors, 1 on numerical failure (the
failure diagnostics go to standard error).  Data only ever goes to ``--out``
(or standard output when ``--out`` is omitted); logs go to standard error,
with verbosity taken from ``EQUIP_LOG`` (error, info or debug).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from . import experiments, output
from .errors import (
    EnergyRootNotFound,
    EquipError,
    IntegrationError,
    InvalidArgumentError,
    NotFoundError,
    StageSolverFailure,
)
from .hamiltonian import get_problem, list_problems
from .integrator import Mode, SolverConfig, integrate
from .tableau import build_family, gauss_tableau, tableau_at

log = logging.getLogger("equip")

MODES = ("gauss", "fixed-alpha", "equip")
_DEFAULTS = SolverConfig()


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_method_args(p, with_mode=True):
    p.add_argument("--problem", default="pendulum", help=f"one of {', '.join(list_problems())}")
    p.add_argument("--s", type=int, default=2, help="number of stages")
    if with_mode:
        p.add_argument("--mode", choices=MODES, default="gauss")
        p.add_argument("--alpha", type=float, default=None, help="required with --mode fixed-alpha")


def _add_solver_args(p):
    g = p.add_argument_group("solver")
    g.add_argument("--stage-tol", type=float, default=_DEFAULTS.stage_tol, help="stage residual tolerance")
    g.add_argument("--stage-max-iter", type=int, default=_DEFAULTS.stage_max_iter, help="Newton iterations per stage solve")
    g.add_argument("--energy-tol", type=float, default=_DEFAULTS.energy_tol, help="accepted |H(y1) - H(y0)| in equip mode")
    g.add_argument("--alpha-max", type=float, default=_DEFAULTS.alpha_max, help="trust region for the alpha search")
    g.add_argument("--alpha-max-iter", type=int, default=_DEFAULTS.alpha_max_iter, help="root-refinement iterations")
    g.add_argument("--jacobian", choices=("exact-if-provided", "finite-difference"), default=_DEFAULTS.jacobian_mode,
                   help="source of the Hessian in the Newton matrix")
    g.add_argument("--fd-epsilon", type=float, default=None, help="finite-difference step; unset means cbrt(eps) * max(1, |y|)")
    g.add_argument("--max-halvings", type=int, default=experiments.DEFAULT_HALVINGS,
                   help="equip mode: retry a step with h/2 this many times when no energy root is bracketed")
    g.add_argument("--seed", type=int, default=0, help="recorded in the output metadata")


def _add_output_args(p, formats):
    p.add_argument("--out", default=None, help="output path (default: standard output)")
    p.add_argument("--format", choices=formats, default=None, help="default: from the --out extension, else " + formats[0])


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="equip", description="Energy and quadratic-invariant preserving "
                                     "Runge-Kutta integrators of Gauss type.", formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="integrate one trajectory", formatter_class=fmt)
    _add_method_args(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--y0", type=_floats, default=None, help="comma-separated initial state (q..., p...)")
    _add_solver_args(p)
    _add_output_args(p, ("csv", "json"))

    p = sub.add_parser("drift", help="energy and invariant drift summary", formatter_class=fmt)
    _add_method_args(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--y0", type=_floats, default=None)
    _add_solver_args(p)
    _add_output_args(p, ("json", "text"))

    p = sub.add_parser("converge", help="global-error convergence study", formatter_class=fmt)
    _add_method_args(p)
    p.add_argument("--h-list", type=_floats, default=[0.2, 0.1, 0.05, 0.025])
    p.add_argument("--T", type=float, default=2.0, help="final time")
    p.add_argument("--y0", type=_floats, default=None)
    p.add_argument("--jobs", type=int, default=1)
    _add_solver_args(p)
    _add_output_args(p, ("json", "text"))

    p = sub.add_parser("alpha-scaling", help="alpha0(h) table from one state", formatter_class=fmt)
    _add_method_args(p, with_mode=False)
    p.add_argument("--h-list", type=_floats, default=[0.2, 0.1, 0.05, 0.025])
    p.add_argument("--y0", type=_floats, default=None)
    _add_solver_args(p)
    p.set_defaults(energy_tol=1e-15)
    _add_output_args(p, ("json", "text"))

    p = sub.add_parser("tableau", help="print c, b and A(alpha) as JSON", formatter_class=fmt)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.0)
    _add_output_args(p, ("json",))
    return parser


def _solver_config(args):
    return SolverConfig(
        stage_tol=args.stage_tol,
        stage_max_iter=args.stage_max_iter,
        energy_tol=args.energy_tol,
        alpha_max=args.alpha_max,
        alpha_max_iter=args.alpha_max_iter,
        jacobian_mode=args.jacobian,
        fd_epsilon=args.fd_epsilon,
    )


def _mode(parser, args):
    if args.mode == "fixed-alpha":
        if args.alpha is None:
            parser.error("--alpha is required when --mode is fixed-alpha")
        return Mode.fixed_alpha(args.alpha)
    if args.alpha is not None:
        parser.error(f"--alpha is only valid with --mode fixed-alpha (got --mode {args.mode})")
    return Mode(args.mode)


def _format(args):
    if args.format:
        return args.format
    if args.out and args.out.endswith(".json"):
        return "json"
    if args.out and args.out.endswith(".csv"):
        return "csv"
    return None


def _emit(args, text):
    if args.out:
        output.write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _config_echo(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "format")}
    return json.loads(json.dumps(cfg))


def _system_and_y0(parser, args):
    try:
        system = get_problem(args.problem)
    except NotFoundError as exc:
        parser.error(f"--problem: {exc}")
    if args.y0 is not None and len(args.y0) != system.dim:
        parser.error(f"--y0 needs {system.dim} values for {system.name}, got {len(args.y0)}")
    return system, args.y0


def _method(s, alpha_needed):
    return build_family(s) if (s != 1 or alpha_needed) else gauss_tableau(s)


def _integrate(parser, args):
    mode = _mode(parser, args)
    system, y0 = _system_and_y0(parser, args)
    if args.steps < 1:
        parser.error("--steps must be at least 1")
    cfg = _solver_config(args)
    method = _method(args.s, mode.kind != "gauss")
    y0 = y0 if y0 is not None else system.default_y0
    fmt = _format(args) or "csv"
    render = output.render_csv if fmt == "csv" else output.render_json
    try:
        traj = integrate(system, method, y0, args.h, args.steps, mode, cfg, max_halvings=args.max_halvings)
    except IntegrationError as exc:
        if args.out and exc.trajectory is not None:
            columns, rows = output.trajectory_table(system, exc.trajectory)
            output.write_text(args.out, render(_config_echo(args) | {"partial": True}, columns, rows))
        raise
    columns, rows = output.trajectory_table(system, traj)
    _emit(args, render(_config_echo(args), columns, rows))


def _drift(parser, args):
    mode = _mode(parser, args)
    system, y0 = _system_and_y0(parser, args)
    report = experiments.run_drift(system, mode, args.s, args.h, args.steps, y0, _solver_config(args),
                                   max_halvings=args.max_halvings)
    if (_format(args) or "json") == "text":
        _emit(args, report.to_text())
    else:
        _emit(args, output.dumps({"config": _config_echo(args), "result": report.to_dict()}))


def _converge(parser, args):
    mode = _mode(parser, args)
    system, y0 = _system_and_y0(parser, args)
    study = experiments.run_convergence(system, mode, args.s, args.h_list, args.T, y0, _solver_config(args),
                                        jobs=args.jobs, max_halvings=args.max_halvings)
    if (_format(args) or "json") == "text":
        _emit(args, study.to_text())
    else:
        _emit(args, output.dumps({"config": _config_echo(args), "result": study.to_dict()}))


def _alpha_scaling(parser, args):
    system, y0 = _system_and_y0(parser, args)
    table = experiments.run_alpha_scaling(system, args.s, args.h_list, y0, _solver_config(args))
    if (_format(args) or "json") == "text":
        _emit(args, table.to_text())
    else:
        _emit(args, output.dumps({"config": _config_echo(args), "result": table.to_dict()}))


def _tableau(parser, args):
    if args.s == 1 and args.alpha == 0.0:
        t = gauss_tableau(1)
    else:
        t = tableau_at(build_family(args.s), args.alpha)
    _emit(args, output.dumps({"s": t.s, "alpha": t.alpha, "c": t.c, "b": t.b, "A": t.A}))


COMMANDS = {
    "integrate": _integrate,
    "drift": _drift,
    "converge": _converge,
    "alpha-scaling": _alpha_scaling,
    "tableau": _tableau,
}


def _diagnostics(exc):
    info = {"error": type(exc).__name__, "message": str(exc)}
    cause = exc.cause if isinstance(exc, IntegrationError) else exc
    if isinstance(cause, EnergyRootNotFound):
        info["probes"] = [[a, g] for a, g in cause.probes]
    if isinstance(cause, StageSolverFailure):
        info["residual"] = cause.residual
        info["iterations"] = cause.iterations
    if isinstance(exc, IntegrationError) and exc.trajectory is not None:
        info["accepted_steps"] = exc.trajectory.n_steps
    state = getattr(cause, "state", None)
    if state is not None:
        info["state"] = [float(v) for v in state.ravel()]
    return info


def _configure_logging():
    level = os.environ.get("EQUIP_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](parser, args)
    except InvalidArgumentError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except EquipError as exc:
        # ArithmeticError subclasses and integration failures
        print(json.dumps(_diagnostics(exc), indent=2), file=sys.stderr)
        return 1
    return 0


def parse_and_dispatch(argv):
    """Run the CLI and return its exit status (usage errors included)."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1


if __name__ == "__main__":
    sys.exit(main())
