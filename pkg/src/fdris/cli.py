"""Command line entry point: ``fdris {beampattern,optimize,sweep,dep}``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import experiments as ex
from .covert import CovertConfig, dbm_to_watt
from .optimizer import SolverOptions
from .scenario import PRESETS, ScenarioError, resolve_scenario

log = logging.getLogger("fdris")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _range(text):
    """``start:stop:step`` (stop inclusive) or a comma separated list."""
    if ":" not in text:
        return np.array(_floats(text))
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _solver_opts(args):
    kw = {}
    if getattr(args, "max_outer", None) is not None:
        kw["max_outer"] = args.max_outer
    return SolverOptions(**kw)


def _scenario(args):
    scn = resolve_scenario(args.scenario)
    if getattr(args, "elements", None) is not None:
        scn = scn.with_elements(args.elements)
    if getattr(args, "xi", None) is not None:
        scn = scn.with_xi(args.xi)
    if getattr(args, "mc", None) is not None or getattr(args, "seed", None) is not None:
        scn = scn.with_mc(getattr(args, "mc", None), getattr(args, "seed", None))
    return scn


def cmd_beampattern(args):
    scn = _scenario(args)
    grid = ex.parse_grid(args.grid)
    state = ex.beam_state_for(scn, args.scheme, args.source, _solver_opts(args))
    rows = ex.run_beampattern(scn, grid, args.scheme, state, phi_deg=args.phi, dist_m=args.dist)
    ex.write_csv(args.out, ("theta_deg", "phi_deg", "dist_m", "gain_linear", "gain_db"), rows)
    if args.svg:
        ex.write_svg(args.svg, rows, title=f"{scn.name} ({args.scheme})")
    print(f"wrote {len(rows)} points to {args.out}")
    return 0


def cmd_optimize(args):
    scn = _scenario(args)
    scheme = "conventional" if args.baseline == "conventional" else "fdris"
    run = ex.run_optimize(scn, _solver_opts(args), scheme=scheme, workers=args.workers, out_dir=args.out_dir)
    s = run.summary()
    print(f"{s['scenario']} {scheme}: mean rate {s['mean_rate']:.4f} bpcu "
          f"(std {s['std_rate']:.4f}, n={s['n_mc']}), feasible {s['feasible_fraction']:.2f}")
    return 0 if run.feasible_fraction >= 1.0 else 1


def cmd_sweep(args):
    scn = _scenario(args)
    schemes = ("fdris", "conventional") if args.baseline else ("fdris",)
    rows = ex.run_sweep(scn, args.param, args.values, _solver_opts(args), schemes=schemes, workers=args.workers)
    ex.write_csv(args.out, ("param_value", "scheme", "mean_rate", "std_rate"), rows)
    for r in rows:
        print(f"{args.param}={r['param_value']:g} {r['scheme']}: {r['mean_rate']:.4f} +/- {r['std_rate']:.4f}")
    return 0


def cmd_dep(args):
    s2 = float(dbm_to_watt(args.sigma2_dbm))
    cfg = CovertConfig(varsigma=args.varsigma, xi=0.5, psi=0.0, sigma2_w=(s2,), sigma2_b=s2, p_t=1.0)
    omegas = dbm_to_watt(args.omega_grid)
    rows = ex.dep_curve(cfg, np.atleast_1d(omegas), n_tau=args.tau_points)
    ex.write_csv(args.out, ("tau", "omega", "dep"), rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="fdris", description="Covert FD-RIS beamforming experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp, mc=True):
        sp.add_argument("--scenario", required=True,
                        help=f"preset ({', '.join(sorted(PRESETS))}) or path to a JSON scenario")
        sp.add_argument("--elements", type=int, help="override L (perfect square)")
        sp.add_argument("--xi", type=float, help="override the covert requirement")
        sp.add_argument("--max-outer", type=int, help="cap on alternating iterations")
        if mc:
            sp.add_argument("--seed", type=int, help="base seed for the channel draws")
            sp.add_argument("--mc", type=int, help="number of channel draws")
            sp.add_argument("--workers", type=int, default=1, help="worker processes")

    bp = sub.add_parser("beampattern", help="rasterise a beampattern to CSV")
    scenario_args(bp, mc=False)
    bp.add_argument("--grid", required=True, help="e.g. theta=0:180:1,dist=5:80:0.5")
    bp.add_argument("--phi", type=float, help="fixed elevation (deg) when phi is not on the grid")
    bp.add_argument("--dist", type=float, help="fixed distance (m) when dist is not on the grid")
    bp.add_argument("--scheme", choices=ex.SCHEMES, default="fdris")
    bp.add_argument("--source", choices=("aligned", "optimized"), default="aligned",
                    help="align on Bob, or optimise channel draw 0")
    bp.add_argument("--out", required=True)
    bp.add_argument("--svg", help="also write an SVG heatmap (needs matplotlib)")
    bp.set_defaults(func=cmd_beampattern)

    op = sub.add_parser("optimize", help="Monte Carlo optimisation of one scenario")
    scenario_args(op)
    op.add_argument("--baseline", choices=("conventional",), help="run the plain-RIS baseline instead")
    op.add_argument("--out-dir", required=True)
    op.set_defaults(func=cmd_optimize)

    sw = sub.add_parser("sweep", help="mean covert rate against one parameter")
    scenario_args(sw)
    sw.add_argument("--param", choices=ex.SWEEP_PARAMS, required=True)
    sw.add_argument("--values", type=_floats, required=True, help="comma separated values")
    sw.add_argument("--baseline", action="store_true", help="also run the conventional baseline")
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)

    dp = sub.add_parser("dep", help="detection error probability against the threshold")
    dp.add_argument("--varsigma", type=float, default=2.0)
    dp.add_argument("--sigma2-dbm", type=float, default=-110.0, help="nominal warden noise power")
    dp.add_argument("--omega-grid", type=_range, default=_range("-130:-110:5"),
                    help="received signal powers in dBm, start:stop:step or a list")
    dp.add_argument("--tau-points", type=int, default=200)
    dp.add_argument("--out", required=True)
    dp.set_defaults(func=cmd_dep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, ValueError) as exc:
        print(f"fdris: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
