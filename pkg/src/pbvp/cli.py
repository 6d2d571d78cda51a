"""Command-line front end.

Exit codes: 0 success, 1 hypotheses not met (verify), 2 config error,
3 numeric failure, 4 ANOMALY, 5 not converged, 6 bracket validation failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import compare, oracle
from .bracket import BracketError, BracketPair, NonlinearPBVP, validate
from .config import ConfigError, ProblemConfig, load_config, parse_config
from .core import DEFAULT_VERIFY_N, Grid, GridFunction, Tolerance, default_n, sup_norm
from .expr import ExprError
from .linsolve import LinearPBVP, LinearSolveError, solve
from .monotone import AnomalyError, IterationConfig, NotConvergedError, iterate

EXIT_OK = 0
EXIT_NOT_APPLICABLE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_ANOMALY = 4
EXIT_NOT_CONVERGED = 5
EXIT_BRACKET = 6

CHECKS = {
    "2.1": "nonpositive",
    "2.2": "nonpositive-homogeneous",
    "2.3": "nonpositive-constant",
    "2.4": "nonnegative",
}

log = logging.getLogger("pbvp")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([r if isinstance(r, (int, str)) else _fmt(r) for r in row])


def _numerics(cfg: ProblemConfig, args, default):
    n = args.n or cfg.get("numerics", "n") or default
    try:
        grid = Grid(n)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"numerics.n: {err}") from None
    tol = Tolerance(
        args.tol if args.tol is not None else cfg.get("numerics", "abs_tol", 1e-10),
        cfg.get("numerics", "rel_tol", 1e-8),
    )
    max_iter = args.max_iter or cfg.get("numerics", "max_iter") or 200
    return grid, tol, max_iter


def _linear_problem(cfg: ProblemConfig) -> LinearPBVP:
    sec = cfg.require("linear")
    try:
        return LinearPBVP(sec["M"], sec["sigma"], sec.get("mu", 0.0), sec.get("lambda", 0.0))
    except LinearSolveError as err:
        raise ConfigError(f"linear.M: {err}") from None


def _nonlinear_problem(cfg: ProblemConfig) -> NonlinearPBVP:
    sec = cfg.require("problem")
    try:
        return NonlinearPBVP(sec["f"], sec["M"])
    except LinearSolveError as err:
        raise ConfigError(f"problem.M: {err}") from None


def cmd_solve_linear(args) -> int:
    cfg = load_config(args.config)
    grid, _, _ = _numerics(cfg, args, default_n())
    prob = _linear_problem(cfg)
    start = time.perf_counter()
    sol = solve(prob, grid)
    elapsed = time.perf_counter() - start
    print(f"linear problem: M={prob.M:g} mu={prob.mu:g} lambda={prob.lam:g} sigma={cfg.get('linear', 'sigma')} n={grid.n}")
    print(f"  C1 = {sol.c1:.17g}")
    print(f"  C2 = {sol.c2:.17g}")
    print(f"  |u(0)-u(2pi)-mu|        = {abs(sol.jump_value - prob.mu):.3e}")
    print(f"  |u'(0)-u'(2pi)-lambda|  = {abs(sol.jump_derivative - prob.lam):.3e}")
    print(f"  sup|u|                  = {sup_norm(sol.u):.17g}")
    exact = cfg.get("linear", "exact")
    if exact is not None:
        print(f"  sup|u - exact|          = {sup_norm(sol.u - grid.sample(exact)):.3e}")
    print(f"  time                    = {elapsed:.3f} s")
    if args.out:
        write_csv(args.out, ["t", "u"], zip(grid.nodes, sol.u.values))
        print(f"wrote {args.out}")
    return EXIT_OK


def _verify_instance(args, cfg):
    sec = dict(cfg.sections.get("verify", {})) if cfg else {}
    if args.u is not None:
        sec["u"] = args.u
    if args.omega is not None:
        sec["omega"] = args.omega
    if args.M is not None:
        sec["M"] = args.M
    if args.mu is not None:
        sec["mu"] = args.mu
    if args.lam is not None:
        sec["lambda"] = args.lam
    for key in ("u", "M"):
        if key not in sec:
            raise ConfigError(f"verify.{key}: required (flag --{key} or config)")
    raw = {k: (str(v) if hasattr(v, "expr") else v) for k, v in sec.items()}
    return parse_config({"verify": raw}).sections["verify"]


def cmd_verify(args) -> int:
    cfg = load_config(args.config) if args.config else None
    sec = _verify_instance(args, cfg)
    grid, tol, _ = _numerics(cfg or ProblemConfig({}), args, DEFAULT_VERIFY_N)
    u, M = sec["u"], sec["M"]
    omega = sec.get("omega", 0.0)
    check = CHECKS[args.theorem]
    jumps = {"mu": sec.get("mu"), "lam": sec.get("lambda")}
    if check == "nonpositive":
        report = compare.check_nonpositive(compare.ComparisonInstance(u, omega, M, **jumps), grid, tol)
    elif check == "nonnegative":
        report = compare.check_nonnegative(compare.ComparisonInstance(u, omega, M, **jumps), grid, tol)
    elif check == "nonpositive-homogeneous":
        report = compare.check_nonpositive_homogeneous(u, M, grid, tol, **jumps)
    else:
        values = grid.sample(omega).values if callable(omega) else np.array([float(omega)])
        if np.ptp(values) != 0:
            raise ConfigError("verify.omega: this check needs a constant omega")
        value = float(values[0])
        report = compare.check_nonpositive_constant(u, value, M, grid, tol, **jumps)
    print(report.render())
    return {compare.OK: EXIT_OK, compare.NOT_APPLICABLE: EXIT_NOT_APPLICABLE, compare.ANOMALY: EXIT_ANOMALY}[report.status]


def _bracket(cfg: ProblemConfig, grid: Grid, tol: Tolerance) -> BracketPair:
    sec = cfg.require("bracket")
    return BracketPair(sec["alpha"], sec["beta"], grid, tol)


def _print_history(hist):
    print(f"{'k':>5}  {'sup|d alpha|':>13}  {'sup|d beta|':>13}  {'sup(beta-alpha)':>15}")
    for k, (da, db, gap) in enumerate(zip(hist.delta_alpha, hist.delta_beta, hist.gaps), start=1):
        print(f"{k:>5}  {da:13.6e}  {db:13.6e}  {gap:15.6e}")


def _write_history(hist, grid, out_dir, plot_data):
    if out_dir:
        out = Path(out_dir)
        write_csv(out / "phi.csv", ["t", "phi"], zip(grid.nodes, hist.phi.values))
        write_csv(out / "psi.csv", ["t", "psi"], zip(grid.nodes, hist.psi.values))
        write_csv(
            out / "history.csv",
            ["k", "delta_alpha", "delta_beta", "gap"],
            [(k, da, db, g) for k, (da, db, g) in enumerate(zip(hist.delta_alpha, hist.delta_beta, hist.gaps), 1)],
        )
        print(f"wrote {out / 'phi.csv'}, {out / 'psi.csv'}, {out / 'history.csv'}")
    if plot_data:
        rows = (
            (k, t, a, b)
            for k, (alpha, beta) in enumerate(zip(hist.alphas, hist.betas))
            for t, a, b in zip(grid.nodes, alpha.values, beta.values)
        )
        write_csv(plot_data, ["k", "t", "alpha_k", "beta_k"], rows)
        print(f"wrote {plot_data}")


def cmd_iterate(args) -> int:
    cfg = load_config(args.config)
    grid, tol, max_iter = _numerics(cfg, args, default_n())
    prob = _nonlinear_problem(cfg)
    try:
        pair = _bracket(cfg, grid, tol)
    except BracketError as err:
        print(f"bracket rejected: {err}")
        return EXIT_BRACKET
    report = validate(pair, prob, grid, tol)
    print(report.render())
    if not report.passed and not args.force:
        for clause in report.failing:
            print(f"failing clause: {clause.name}")
        return EXIT_BRACKET
    try:
        hist = iterate(pair, prob, IterationConfig(tol, max_iter, grid), force=args.force)
    except AnomalyError as err:
        if err.history is not None:
            _print_history(err.history)
        print(str(err))
        return EXIT_ANOMALY
    except NotConvergedError as err:
        _print_history(err.history)
        _write_history(err.history, grid, args.out, args.plot_data)
        print(str(err))
        return EXIT_NOT_CONVERGED
    _print_history(hist)
    for flag in hist.flags:
        print(flag)
    print(f"converged after {hist.iterations} iterations")
    print(f"  chain violation       = {hist.chain_violation:.3e}")
    print(f"  sup(psi - phi)        = {hist.gap:.3e}")
    print(f"  sup|phi - A phi|      = {hist.final_residual[0]:.3e}")
    print(f"  sup|psi - A psi|      = {hist.final_residual[1]:.3e}")
    res = oracle.residual(hist.phi, prob)
    print(f"  FD residual of phi    = {res.interior:.3e} (bc {res.bc_value:.1e}, {res.bc_deriv:.1e})")
    _write_history(hist, grid, args.out, args.plot_data)
    return EXIT_OK


def _orders(errors):
    return [math.log2(a / b) if a > 0 and b > 0 else float("nan") for a, b in zip(errors, errors[1:])]


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    base, tol, max_iter = _numerics(cfg, args, DEFAULT_VERIFY_N)
    grids = [Grid(base.n * k) for k in (1, 2, 4)]
    diffs = []
    if cfg.has("linear"):
        prob = _linear_problem(cfg)
        periodic = prob.mu == 0 and prob.lam == 0
        print("n        sup|closed form - FD|" if periodic else "n        FD residual of closed form")
        for grid in grids:
            sol = solve(prob, grid)
            if periodic:
                d = sup_norm(sol.u - oracle.fd_solve_linear(prob.sigma_on(grid), prob.M, grid))
            else:
                v, h = sol.u.values, grid.h
                sig = prob.sigma_on(grid).values
                d = float(np.max(np.abs(-oracle.second_difference(v, h) + prob.M**2 * v[1:-1] - sig[1:-1])))
            diffs.append(d)
            print(f"{grid.n:<8} {d:.6e}")
    else:
        prob = _nonlinear_problem(cfg)
        has_bracket = cfg.has("bracket")
        print("n        sup|Newton FD - monotone|" if has_bracket else "n        Newton FD residual")
        for grid in grids:
            if has_bracket:
                pair = BracketPair(cfg.get("bracket", "alpha"), cfg.get("bracket", "beta"), grid, tol)
                initial = 0.5 * (grid.sample(pair.alpha) + grid.sample(pair.beta))
            else:
                initial = grid.constant(0.0)
            fd, steps = oracle.fd_solve_nonlinear(prob, initial, grid, tol, max_iter)
            if has_bracket:
                hist = iterate(pair, prob, IterationConfig(tol, max_iter, grid), force=args.force)
                d = sup_norm(fd - hist.phi)
            else:
                d = oracle.residual(fd, prob).interior
            diffs.append(d)
            print(f"{grid.n:<8} {d:.6e}   ({steps} Newton steps)")
    orders = _orders(diffs)
    print("observed order: " + ", ".join(f"{o:.3f}" for o in orders))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="grid subintervals (even, >= 16); env PBVP_DEFAULT_N sets the default")
    common.add_argument("--tol", type=float, help="absolute tolerance")
    common.add_argument("--max-iter", type=int, dest="max_iter")
    common.add_argument("--force", action="store_true", help="run even if bracket hypotheses fail")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pbvp", description="Periodic boundary value problems -u'' = f(t,u) on [0, 2pi].")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-linear", parents=[common], help="closed-form solve of the linear problem")
    p.add_argument("config")
    p.add_argument("--out", help="CSV file with columns t,u")
    p.set_defaults(func=cmd_solve_linear)

    p = sub.add_parser("verify", parents=[common], help="check a sign (comparison) result on an instance")
    p.add_argument("config", nargs="?")
    p.add_argument("--theorem", choices=sorted(CHECKS), required=True)
    p.add_argument("--u")
    p.add_argument("--omega")
    p.add_argument("--M", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--lambda", type=float, dest="lam")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("iterate", parents=[common], help="monotone iteration from a lower/upper pair")
    p.add_argument("config")
    p.add_argument("--out", help="directory for phi.csv, psi.csv, history.csv")
    p.add_argument("--plot-data", dest="plot_data", help="long-format CSV k,t,alpha_k,beta_k")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("oracle", parents=[common], help="compare against the finite-difference oracle")
    p.add_argument("config")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except compare.ComparisonError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except BracketError as err:
        print(f"bracket rejected: {err}", file=sys.stderr)
        return EXIT_BRACKET
    except AnomalyError as err:
        print(str(err), file=sys.stderr)
        return EXIT_ANOMALY
    except NotConvergedError as err:
        print(str(err), file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (LinearSolveError, ExprError, oracle.NewtonDivergence, FloatingPointError, ValueError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


def run():
    sys.exit(main())
