"""Command-line entry point.

Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
failures (blowup, divergence, non-convergence) and I/O errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .adjoint import solve_adjoint_fdde, solve_adjoint_vide
from .config import LinearProblemConfig, example4_config, load_config
from .core import ControlSignal, grid_make
from .errors import ConfigError, FracPmpError, InvalidArgument, NotConverged
from .example4 import run_example4
from .fdde import fdde_residual, solve_fdde
from .output import ensure_dir, fmt, write_csv, write_report, write_trajectory_csv
from .pmp import (Kind, SweepParams, _batch, forward_backward_sweep,
                  pmp_residual)
from .specfun import delay_control_kernel, x_alpha_pure_delay_series
from .volterra import solve_vide

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _read_config(path) -> LinearProblemConfig:
    if path is None:
        raise ConfigError("--config", "a configuration file is required")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(path, f"cannot read ({exc.strerror})") from None
    return load_config(text)


def _grid(cfg, args):
    npd = cfg.nodes_per_delay if args.nodes_per_delay is None else args.nodes_per_delay
    try:
        return grid_make(cfg.horizon, cfg.delay, npd)
    except InvalidArgument as exc:
        raise ConfigError("nodes_per_delay", str(exc)) from None


def _start_control(cfg, grid):
    U = cfg.control_set
    v = cfg.u0 if cfg.u0 is not None else U.project(np.zeros(U.dim))
    return ControlSignal.constant(grid, v, U)


def _solve_pair(kind, problem, u, grid):
    if kind is Kind.VIDE:
        y = solve_vide(problem, u, grid)
        return y, solve_adjoint_vide(problem, y, u, grid)
    y = solve_fdde(problem, u, grid)
    return y, solve_adjoint_fdde(problem, y, u, grid)


def _certify(kind, problem, y, u, psi, out):
    rep = pmp_residual(kind, problem, y, u, psi)
    H = _batch(kind, problem, psi, y)(np.asarray(u.values)[:, None, :])[:, 0]
    write_trajectory_csv(os.path.join(out, "trajectories.csv"), y, u, psi, H,
                         rep.residuals)
    return rep


def _cmd_solve(args, want):
    cfg = _read_config(args.config)
    if cfg.kind != want:
        raise ConfigError("kind", f"expected '{want}' for this command")
    problem = cfg.build()
    grid = _grid(cfg, args)
    kind = Kind(cfg.kind)
    u = _start_control(cfg, grid)
    y, psi = _solve_pair(kind, problem, u, grid)
    out = ensure_dir(args.out)
    rep = _certify(kind, problem, y, u, psi, out)
    report = {"command": f"solve-{want}", "N": grid.N, "objective": rep.objective,
              "residual_max": rep.max_residual, "residual_l1": rep.l1_residual}
    if kind is Kind.FDDE:
        report["l1_equation_residual"] = fdde_residual(problem, y, u)
    write_report(os.path.join(out, "report.json"), report)
    print(f"objective {fmt(rep.objective)}  residual_max {fmt(rep.max_residual)}")
    return EXIT_OK


def _params(args):
    kw = {}
    if args.tol is not None:
        kw["tol"] = args.tol
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    if args.beta is not None:
        kw["beta"] = args.beta
    try:
        return SweepParams(**kw)
    except InvalidArgument as exc:
        raise ConfigError("sweep parameters", str(exc)) from None


def _cmd_sweep(args):
    cfg = _read_config(args.config)
    problem = cfg.build()
    grid = _grid(cfg, args)
    kind = Kind(cfg.kind)
    params = _params(args)
    u0 = _start_control(cfg, grid)
    out = ensure_dir(args.out)
    try:
        res = forward_backward_sweep(problem, kind, u0, params)
    except NotConverged as exc:
        write_report(os.path.join(out, "report.json"), {
            "command": "sweep", "converged": False, "N": grid.N,
            "change_history": exc.history})
        raise
    H = _batch(kind, problem, res.adjoint, res.state)(
        np.asarray(res.control.values)[:, None, :])[:, 0]
    write_trajectory_csv(os.path.join(out, "trajectories.csv"), res.state,
                         res.control, res.adjoint, H, res.report.residuals)
    write_report(os.path.join(out, "report.json"), {
        "command": "sweep", "converged": True, "N": grid.N,
        "iterations": res.iterations, "objective": res.report.objective,
        "residual_max": res.report.max_residual,
        "residual_l1": res.report.l1_residual})
    print(f"converged in {res.iterations} iterations, objective "
          f"{fmt(res.report.objective)}, residual_max {fmt(res.report.max_residual)}")
    return EXIT_OK


def _cmd_check(args):
    cfg = _read_config(args.config)
    problem = cfg.build()
    grid = _grid(cfg, args)
    kind = Kind(cfg.kind)
    u = _start_control(cfg, grid)
    y, psi = _solve_pair(kind, problem, u, grid)
    out = ensure_dir(args.out)
    rep = _certify(kind, problem, y, u, psi, out)
    tol = args.tol if args.tol is not None else 1e-2
    write_report(os.path.join(out, "report.json"), {
        "command": "check-pmp", "N": grid.N, "objective": rep.objective,
        "residual_max": rep.max_residual, "residual_l1": rep.l1_residual,
        "tolerance": tol, "certified": rep.max_residual <= tol})
    print(f"residual_max {fmt(rep.max_residual)} "
          f"({'within' if rep.max_residual <= tol else 'above'} {tol:g})")
    return EXIT_OK


def _cmd_example4(args):
    npd = 128 if args.nodes_per_delay is None else args.nodes_per_delay
    if npd < 1:
        raise ConfigError("nodes_per_delay", "must be >= 1")
    rep = run_example4(args.out, npd, _params(args))
    print(f"J_best {fmt(rep['J_best'])} at switch_time {fmt(rep['switch_time'])}; "
          f"sweep residual_max {fmt(rep['residual_max'])}; "
          f"lambda convention match: {rep['lambda_convention_match']}")
    return EXIT_OK


def _cmd_kernels(args):
    cfg = _read_config(args.config) if args.config else example4_config()
    grid = _grid(cfg, args)
    A = cfg.a_delay
    n = cfg.state_dim
    tau = grid.t[1:]
    G = np.array([delay_control_kernel(A, cfg.alpha, cfg.delay, s) for s in tau])
    X = np.array([x_alpha_pure_delay_series(A, cfg.alpha, cfg.delay, s) for s in tau])
    names = [f"{i + 1}{j + 1}" for i in range(n) for j in range(n)]
    out = ensure_dir(args.out)
    write_csv(os.path.join(out, "kernels.csv"),
              ["tau"] + [f"G{k}" for k in names] + [f"X{k}" for k in names],
              [tau] + list(G.reshape(len(tau), -1).T) + list(X.reshape(len(tau), -1).T))
    print(f"wrote {len(tau)} kernel rows")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fracpmp",
        description="Optimal control of fractional delay and Volterra delay systems.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON problem configuration")
    common.add_argument("--nodes-per-delay", type=int, metavar="N",
                        help="grid nodes per delay interval (overrides the config)")
    common.add_argument("--tol", type=float, help="sweep tolerance / certificate threshold")
    common.add_argument("--max-iter", type=int, help="maximum sweep iterations")
    common.add_argument("--beta", type=float, help="sweep relaxation in (0, 1]")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("solve-fdde", "solve state and costate of a fractional delay problem"),
        ("solve-vide", "solve state and costate of a Volterra delay problem"),
        ("sweep", "run the forward-backward sweep"),
        ("check-pmp", "certify the maximum condition for the configured control"),
        ("example4", "reproduce the two-state pure-delay example"),
        ("kernels", "tabulate the control kernel G and the fundamental matrix X"),
    ]:
        sub.add_parser(name, parents=[common], help=help_)
    return p


_COMMANDS = {
    "solve-fdde": lambda a: _cmd_solve(a, "fdde"),
    "solve-vide": lambda a: _cmd_solve(a, "vide"),
    "sweep": _cmd_sweep,
    "check-pmp": _cmd_check,
    "example4": _cmd_example4,
    "kernels": _cmd_kernels,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidArgument as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FracPmpError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
