"""Command-line interface.

    mmflow run <scenario-file-or-name> [--flux rp|grp] [--gfm rp|grp]
               [--grid NXxNY] [--out DIR] [--snapshots t1,t2,...] [--seed N]
    mmflow oracle rh --gamma G [--p-inf PI] --rho R --p P (--mach M | --p-post PP)
    mmflow oracle riemann --left r,u,p --right r,u,p --gamma-left G [...]

Exit codes: 0 success, 2 scenario error, 3 solver error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import io as mio
from . import sim
from .eos import MaterialEos
from .errors import FlowError, ScenarioError
from .riemann import RiemannInput, sample, solve_star
from .state import PrimitiveState

__version__ = "0.1.0"

_BUILTIN = ("shock-helium-bubble", "bubble-collapse-water",
            "manufactured-linear", "static-bubble")


def _parse_grid(text):
    try:
        nx, ny = text.lower().split("x")
        return int(nx), int(ny)
    except ValueError as exc:
        raise ScenarioError(f"bad --grid {text!r}; expected NXxNY") from exc


def _cmd_run(args):
    if args.scenario in _BUILTIN:
        sc = sim.build_scenario(args.scenario)
    else:
        sc = mio.parse_scenario(args.scenario)
    updates = {}
    if args.flux:
        updates["flux_mode"] = args.flux.upper()
    if args.gfm:
        updates["gfm_mode"] = args.gfm.upper()
    if args.grid:
        if args.scenario in _BUILTIN:
            sc = sim.build_scenario(args.scenario, grid=_parse_grid(args.grid))
        else:
            updates["grid"] = _parse_grid(args.grid)
    if args.snapshots:
        times = tuple(float(t) for t in args.snapshots.split(","))
        updates["snapshot_times"] = times
        updates["t_end"] = max(times)
    if updates:
        sc = dataclasses.replace(sc, **updates)
    if args.seed is not None:
        np.random.seed(args.seed)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    counter = {"k": 0}

    def sink(t, W, ls, meta):
        name = f"{sc.name}_{sc.flux_mode.lower()}_{counter['k']:02d}.snap"
        mio.write_snapshot(outdir / name, t, W, ls, meta)
        counter["k"] += 1
        print(f"snapshot t={t:.8g} -> {outdir / name}")

    report = sim.run(sc, sinks=(sink,))
    print(f"done: {report.steps} steps to t={report.final_time:.8g}; "
          f"{report.snapshots_written} snapshot(s); "
          f"clamps={report.clamp_count}; degenerate fits={report.degenerate_fits}")
    if report.mass_history:
        m0 = report.mass_history[0][1]
        m1 = report.mass_history[-1][1]
        print(f"mass: {m0:.12g} -> {m1:.12g} "
              f"(rel drift {abs(m1 - m0) / abs(m0):.3e})")
    return 0


def _cmd_oracle_rh(args):
    eos = MaterialEos(args.gamma, args.p_inf)
    spec = sim.ShockSpec(args.rho, args.u, args.p, mach=args.mach,
                         p_post=args.p_post, direction=args.direction)
    post, speed, piston = sim.rankine_hugoniot_post_shock(spec, eos)
    print(f"post: rho = {post[0]:.10g}  u = {post[1]:.10g}  p = {post[2]:.10g}")
    print(f"shock speed = {speed:.10g}")
    print(f"piston speed = {piston:.10g}")
    return 0


def _triplet(text):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise ScenarioError(f"expected rho,u,p, got {text!r}")
    return parts


def _cmd_oracle_riemann(args):
    lr, lu, lp = _triplet(args.left)
    rr, ru, rp_ = _triplet(args.right)
    inp = RiemannInput(PrimitiveState(lr, lu, 0.0, lp),
                       PrimitiveState(rr, ru, 0.0, rp_),
                       MaterialEos(args.gamma_left, args.p_inf_left),
                       MaterialEos(args.gamma_right, args.p_inf_right))
    star = solve_star(inp)
    print(f"p* = {star.p_star:.10g}")
    print(f"u* = {star.u_star:.10g}")
    print(f"rho*_L = {star.rho_star_left:.10g}")
    print(f"rho*_R = {star.rho_star_right:.10g}")
    if args.xi is not None:
        w = sample(inp, star, args.xi)
        print(f"sample(xi={args.xi:g}): rho = {w.rho:.10g}  u = {w.ux:.10g}  "
              f"p = {w.p:.10g}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="mmflow", description=__doc__)
    ap.add_argument("--version", action="version",
                    version=f"mmflow {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a scenario file or built-in name")
    runp.add_argument("scenario")
    runp.add_argument("--flux", choices=("rp", "grp"))
    runp.add_argument("--gfm", choices=("rp", "grp"))
    runp.add_argument("--grid")
    runp.add_argument("--out", default="out")
    runp.add_argument("--snapshots")
    runp.add_argument("--seed", type=int)
    runp.set_defaults(func=_cmd_run)

    orp = sub.add_parser("oracle", help="module-level solves for scripting")
    osub = orp.add_subparsers(dest="oracle", required=True)

    rh = osub.add_parser("rh", help="Rankine-Hugoniot post-shock state")
    rh.add_argument("--gamma", type=float, required=True)
    rh.add_argument("--p-inf", type=float, default=0.0)
    rh.add_argument("--rho", type=float, required=True)
    rh.add_argument("--u", type=float, default=0.0)
    rh.add_argument("--p", type=float, required=True)
    rh.add_argument("--mach", type=float)
    rh.add_argument("--p-post", type=float)
    rh.add_argument("--direction", type=float, default=-1.0)
    rh.set_defaults(func=_cmd_oracle_rh)

    rie = osub.add_parser("riemann", help="exact two-material star solve")
    rie.add_argument("--left", required=True, help="rho,u,p")
    rie.add_argument("--right", required=True, help="rho,u,p")
    rie.add_argument("--gamma-left", type=float, required=True)
    rie.add_argument("--gamma-right", type=float, required=True)
    rie.add_argument("--p-inf-left", type=float, default=0.0)
    rie.add_argument("--p-inf-right", type=float, default=0.0)
    rie.add_argument("--xi", type=float, default=None)
    rie.set_defaults(func=_cmd_oracle_riemann)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except FlowError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
