"""Command-line entry point ``eg-stokes``.

    eg-stokes convergence --example ex1 --levels 2..6 --theta 0 --alpha 1.0 --out results/
    eg-stokes solvers --example ex1 --levels 3..6 --precond bd,bl,bu,md,ml,mu --out results/
    eg-stokes channel --mu 0.01 --out results/
    eg-stokes channel --mesh obstacle.msh --mu-split 1.0,0.01,0.5 --out results/
    eg-stokes infsup --levels 2..4 --alpha 10
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .linsolve import KrylovConfig
from .space import PENALTY_SCALES

log = logging.getLogger("egstokes")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _levels(text: str) -> tuple:
    try:
        return harness.parse_levels(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _kinds(text: str) -> tuple:
    return tuple(t.strip().upper() for t in text.split(",") if t.strip())


def _mu_split(text: str) -> tuple:
    vals = _floats(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("--mu-split takes TOP,BOTTOM,Y")
    return vals


def _add_common(p: argparse.ArgumentParser, tol: float) -> None:
    p.add_argument("--theta", type=int, default=0, choices=(-1, 0, 1),
                   help="symmetrization: -1 SIPG, 0 IIPG, 1 NIPG (default 0)")
    p.add_argument("--alpha", type=float, default=1.0, help="penalty parameter (default 1)")
    p.add_argument("--penalty", default="mu", choices=PENALTY_SCALES,
                   help="facet weight in front of alpha/h_e (default mu)")
    p.add_argument("--tol", type=float, default=tol, help=f"outer relative tolerance (default {tol:g})")
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--out", default=None, help="output directory for CSV, VTK and figures")
    p.add_argument("--no-plots", action="store_true", help="skip the matplotlib figures")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eg-stokes",
                                 description="Enriched Galerkin Stokes experiments.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergence", help="manufactured-solution error table")
    p.add_argument("--example", default="ex1", choices=("ex1", "ex2"))
    p.add_argument("--levels", type=_levels, default=(2, 3, 4, 5, 6))
    p.add_argument("--precond", default="BL", help="preconditioner for the solves (default BL)")
    _add_common(p, tol=1e-10)

    p = sub.add_parser("solvers", help="outer iteration counts of the block preconditioners")
    p.add_argument("--example", default="ex1", choices=("ex1", "ex2", "ex3", "ex4"))
    p.add_argument("--levels", type=_levels, default=(3, 4, 5, 6))
    p.add_argument("--mesh", default=None, help="mesh file for ex3/ex4 (default: bundled obstacle mesh)")
    p.add_argument("--mu", type=_floats, default=None,
                   help="viscosities, comma separated (ex3 default 1,0.1,0.01,0.001)")
    p.add_argument("--mu-split", type=_mu_split, default=None, help="ex4 viscosity TOP,BOTTOM,Y")
    p.add_argument("--precond", type=_kinds, default=("BD", "BL", "BU", "MD", "ML", "MU"))
    _add_common(p, tol=1e-6)

    p = sub.add_parser("channel", help="flow around the obstacle, VTK output")
    p.add_argument("--mesh", default=None, help="mesh file (default: bundled obstacle mesh)")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--mu", type=_floats, default=(1.0,), help="constant viscosity (or a list)")
    grp.add_argument("--mu-split", type=_mu_split, default=None,
                     help="discontinuous viscosity TOP,BOTTOM,Y")
    p.add_argument("--precond", default="BL")
    _add_common(p, tol=1e-6)

    p = sub.add_parser("infsup", help="discrete inf-sup constant on the unit square")
    p.add_argument("--levels", type=_levels, default=(2, 3, 4))
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--theta", type=int, default=0, choices=(-1, 0, 1), help=argparse.SUPPRESS)
    p.add_argument("--alpha", type=float, default=10.0)
    p.add_argument("--penalty", default="mu", choices=PENALTY_SCALES)
    p.add_argument("--out", default=None)
    p.add_argument("--no-plots", action="store_true")
    return ap


def _config(args, **kw) -> harness.ExperimentConfig:
    krylov = KrylovConfig(rel_tol=args.tol, max_iters=args.max_iters) if hasattr(args, "tol") else KrylovConfig()
    return harness.ExperimentConfig(theta=args.theta, alpha=args.alpha, penalty=args.penalty,
                                    krylov=krylov, out_dir=args.out, **kw)


def cmd_convergence(args) -> int:
    cfg = _config(args, example=args.example, levels=args.levels)
    try:
        rows = harness.run_convergence(cfg, kind=args.precond, krylov=cfg.krylov)
        status = 0
    except harness.SolverFailure as exc:
        log.error("%s", exc)
        rows, status = exc.rows, 2
    print(",".join(harness.ConvergenceRow.CSV_HEADER))
    for r in rows:
        print(",".join(str(f) for f in r.csv_fields()))
    if rows and args.out and not args.no_plots:
        from .report import plot_convergence
        plot_convergence(rows, cfg.output(f"convergence_{args.example}.png"), args.example)
    return status


def cmd_solvers(args) -> int:
    mu = args.mu
    if mu is None:
        mu = (1.0, 0.1, 0.01, 0.001) if args.example == "ex3" else (1.0,)
    cfg = _config(args, example=args.example, levels=args.levels, mesh_path=args.mesh, mu=mu,
                  mu_split=args.mu_split, preconditioners=args.precond)
    rows = harness.run_solver_study(cfg)
    print(",".join(harness.SolverRow.CSV_HEADER))
    for r in rows:
        print(",".join(str(f) for f in r.csv_fields()))
    if rows and args.out and not args.no_plots:
        from .report import plot_iterations
        plot_iterations(rows, cfg.output(f"solvers_{args.example}.png"), args.example)
    return 0 if all(r.converged for r in rows) else 2


def cmd_channel(args) -> int:
    cfg = _config(args, example="ex4" if args.mu_split else "ex3", mesh_path=args.mesh,
                  mu=args.mu, mu_split=args.mu_split)
    results = harness.run_channel(cfg, kind=args.precond)
    for r in results:
        print(f"{r.report.summary()}; divergence residual {r.divergence_residual:.3e}; "
              f"flux imbalance {r.flux_imbalance:.3e}; vtk {r.vtk_path}")
        if args.out and not args.no_plots:
            from .report import plot_channel
            png = r.vtk_path.with_suffix(".png") if r.vtk_path else cfg.output("channel.png")
            plot_channel(r.mesh, r.u, r.p, png)
    return 0 if all(r.report.converged for r in results) else 2


def cmd_infsup(args) -> int:
    cfg = harness.ExperimentConfig(example="custom", levels=args.levels, alpha=args.alpha,
                                   penalty=args.penalty, mu=(args.mu,), out_dir=args.out)
    try:
        rows = harness.run_infsup(cfg)
    except harness.InfSupStagnation as exc:
        log.error("%s", exc)
        return 2
    print(",".join(harness.InfSupRow.CSV_HEADER))
    for r in rows:
        print(",".join(str(f) for f in r.csv_fields()))
    if rows and args.out and not args.no_plots:
        from .report import plot_infsup
        plot_infsup(rows, cfg.output("infsup.png"))
    return 0


COMMANDS = {"convergence": cmd_convergence, "solvers": cmd_solvers,
            "channel": cmd_channel, "infsup": cmd_infsup}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
