"""Command-line front end.

Subcommands:
    generate   write a (g, K, E) data set to disk
    check      densities, DEC margin, constraint residuals
    adm        ADM energy/momentum/charge ladder and extrapolation
    verify-sl  Weitzenboeck identity convergence table
    solve      truncated-domain Witten solve plus mass-formula audit
    report     re-emit a saved report as JSON or CSV

Configuration comes from flags, optionally seeded from a JSON config file
(flags override the file). ``CHARGEDSPIN_THREADS`` caps BLAS worker threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import chargedata, io
from .asymptotics import adm_energy_momentum, default_radii, witten_boundary_form
from .cliffalg import build_clifford_rep
from .diracsolve import TruncatedDomain, mass_formula_audit, solve_witten
from .errors import ChargedSpinError
from .grids import centered_box_grid
from .spinops import SpinorCalculus, verify_weitzenbock
from .testfields import gaussian_spinor


def _apply_thread_cap():
    cap = os.environ.get("CHARGEDSPIN_THREADS")
    if not cap:
        return
    try:
        limit = int(cap)
    except ValueError:
        raise ChargedSpinError(
            f"CHARGEDSPIN_THREADS must be an integer, got {cap!r}")
    import threadpoolctl
    threadpoolctl.threadpool_limits(limits=limit)


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Seed unset flags from --config JSON; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    cfg_path = Path(args.config)
    if not cfg_path.exists():
        parser.error(f"config file not found: {cfg_path}")
    cfg = json.loads(cfg_path.read_text())
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def _parse_shape(spec, n):
    if spec is None:
        return tuple([33] * n)
    if isinstance(spec, (list, tuple)):
        vals = [int(v) for v in spec]
    else:
        vals = [int(v) for v in str(spec).split(",")]
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n:
        raise ChargedSpinError(f"grid shape {vals} does not match n={n}")
    return tuple(vals)


def _parse_radii(spec):
    if spec is None:
        return None
    if isinstance(spec, (list, tuple)):
        return [float(v) for v in spec]
    return [float(v) for v in str(spec).split(",")]


def _echo(report: dict, out):
    if out:
        io.save_report(report, out)
        print(f"report written to {out}")
    else:
        print(json.dumps(report, indent=2, sort_keys=True,
                         default=io._json_default))


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args, parser):
    n = args.n if args.n is not None else 3
    shape = _parse_shape(args.grid_shape, n)
    if args.spacing is not None:
        half = args.spacing * (shape[0] - 1) / 2.0
    else:
        half = args.half_width if args.half_width is not None else 6.0
    grid = centered_box_grid(n, half, shape[0])
    if args.kind == "flat":
        data = chargedata.generate_flat(grid)
    elif args.kind == "mp":
        centers = (json.loads(args.centers) if args.centers
                   else [[0.0] * n])
        masses = ([float(v) for v in str(args.masses).split(",")]
                  if args.masses else [1.0] * len(centers))
        data = chargedata.generate_majumdar_papapetrou(grid, centers, masses)
    elif args.kind == "schwarzschild":
        mass = args.mass if args.mass is not None else 1.0
        data = chargedata.generate_schwarzschild_slice(grid, mass)
    else:
        parser.error(f"unknown kind {args.kind!r}")
    out = args.out or f"{args.kind}-data"
    io.save_data(data, out)
    print(f"wrote {args.kind} data set (n={n}, shape={shape}) to {out}")
    return 0


def cmd_check(args, parser):
    data = io.load_data(args.data)
    geo = data.geometry()
    dens = chargedata.compute_densities(data, geo=geo)
    tol = args.tol if args.tol is not None else None
    dec = chargedata.check_dec(dens, data, tol=tol)
    ham, mom, gauss = chargedata.constraint_residuals(data, geo=geo)

    def _rms(f):
        v = f.values[f.mask]
        return float(np.sqrt(np.mean(np.abs(v) ** 2))) if v.size else 0.0

    report = {
        "command": "check",
        "dec": {
            "min_margin": dec.min_margin,
            "tol": dec.tol,
            "n_violations": dec.n_violations,
            "asserted": dec.asserted,
            "time_symmetric": dec.time_symmetric,
        },
        "constraint_rms": {"hamiltonian": _rms(ham), "momentum": _rms(mom),
                           "gauss": _rms(gauss)},
        "metadata": data.metadata,
    }
    _echo(report, args.out)
    return 0 if dec.asserted else 1


def cmd_adm(args, parser):
    data = io.load_data(args.data)
    radii = _parse_radii(args.radii)
    resolution = args.resolution if args.resolution is not None else 24
    rep = adm_energy_momentum(data, radii=radii, resolution=resolution)
    report = {"command": "adm", "adm": rep.as_dict(),
              "metadata": data.metadata}
    _echo(report, args.out)
    return 0


def cmd_verify_sl(args, parser):
    data = io.load_data(args.data)
    levels = args.levels if args.levels is not None else 3
    meta = data.metadata
    gen = meta.get("generator")
    n = data.grid.n
    half = (data.grid.shape[0] - 1) * data.grid.spacing / 2.0
    base = data.grid.shape[0]

    def data_factory(res):
        grid = centered_box_grid(n, half, res)
        if gen == "majumdar_papapetrou":
            p = meta["params"]
            return chargedata.generate_majumdar_papapetrou(
                grid, p["centers"], p["masses"],
                excision_radii=p.get("excision_radii"))
        if gen == "schwarzschild_slice":
            p = meta["params"]
            return chargedata.generate_schwarzschild_slice(
                grid, p["mass"], excision_radius=p.get("excision_radius"))
        if gen == "flat":
            return chargedata.generate_flat(grid)
        parser.error(f"verify-sl needs a regenerable data set, got {gen!r}")

    def spinor_factory(grid, rep):
        return gaussian_spinor(grid, rep, tuple([0.31 * half] * n), 0.3 * half)

    resolutions = [max(9, (base - 1) // 2 ** (levels - 1 - k) + 1)
                   for k in range(levels)]
    conv = verify_weitzenbock(data_factory, spinor_factory, resolutions)
    report = {
        "command": "verify-sl",
        "resolutions": resolutions,
        "spacings": conv.spacings,
        "residuals": conv.residuals,
        "orders": conv.orders,
        "fitted_order": conv.fitted_order,
        "anticommutator_discretization":
            "{D, E.chi} evaluated as D(E.chi phi) + E.chi(D phi) with the "
            "shared centered stencil",
        "metadata": data.metadata,
    }
    _echo(report, args.out)
    return 0


def cmd_solve(args, parser):
    data = io.load_data(args.data)
    n = data.grid.n
    tol = args.tol if args.tol is not None else 1e-8
    max_iter = args.max_iter if args.max_iter is not None else 20000
    bc = args.bc or "none"
    r_out = args.r_out
    if r_out is None:
        r_out = max(default_radii(data.grid, count=1))
    center = tuple([0.0] * n)

    adm = adm_energy_momentum(data)
    rep = build_clifford_rep(n)
    _, _, psi0 = witten_boundary_form(rep, adm.energy, adm.momentum,
                                      adm.charge)
    domain = TruncatedDomain(center=center, r_out=float(r_out),
                             r_in=args.r_in, bc=bc)
    result = solve_witten(data, domain, psi0=psi0, tol=tol, max_iter=max_iter)
    report = {
        "command": "solve",
        "domain": {"r_out": domain.r_out, "r_in": domain.r_in,
                   "bc": domain.bc},
        "converged": result.converged,
        "iterations": result.iterations,
        "relative_residual": result.relative_residual,
        "dec_asserted": result.dec_asserted,
        "adm": adm.as_dict(),
        "tolerances": {"tol": tol, "max_iter": max_iter},
        "metadata": data.metadata,
    }
    if result.converged:
        audit = mass_formula_audit(result, data,
                                   adm_margin=adm.energy_margin)
        report["audit"] = audit.as_dict()
    _echo(report, args.out)
    return 0 if result.converged else 1


def cmd_report(args, parser):
    report = io.load_report(args.report)
    fmt = args.format or "json"
    if fmt == "json":
        _echo(report, args.out)
        return 0
    if fmt != "csv":
        parser.error(f"unknown format {fmt!r}")
    adm = report.get("adm")
    if adm is None:
        parser.error("csv export needs a report containing an ADM ladder")
    lines = ["r,energy,charge"]
    for r, e, q in zip(adm["radii"], adm["energy_at_r"], adm["charge_at_r"]):
        lines.append(f"{r},{e},{q}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"csv written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chargedspin",
        description="Charged initial data sets: constraints, ADM charges, "
                    "and the spinorial positive-mass machinery.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags override)")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("generate", help="write a data set")
    p.add_argument("kind", choices=["flat", "mp", "schwarzschild"])
    p.add_argument("--n", type=int)
    p.add_argument("--grid-shape")
    p.add_argument("--spacing", type=float)
    p.add_argument("--half-width", type=float)
    p.add_argument("--mass", type=float)
    p.add_argument("--masses", help="comma-separated masses (mp)")
    p.add_argument("--centers", help="JSON list of centers (mp)")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("check", help="densities, DEC, constraints")
    p.add_argument("data")
    p.add_argument("--tol", type=float)
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("adm", help="ADM/charge ladder")
    p.add_argument("data")
    p.add_argument("--radii", help="comma-separated radii")
    p.add_argument("--resolution", type=int)
    common(p)
    p.set_defaults(func=cmd_adm)

    p = sub.add_parser("verify-sl", help="Weitzenboeck convergence study")
    p.add_argument("data")
    p.add_argument("--levels", type=int)
    common(p)
    p.set_defaults(func=cmd_verify_sl)

    p = sub.add_parser("solve", help="Witten solve and mass audit")
    p.add_argument("data")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--r-out", type=float)
    p.add_argument("--r-in", type=float)
    p.add_argument("--bc", choices=["none", "future", "past"])
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("report", help="re-emit a saved report")
    p.add_argument("report")
    p.add_argument("--format", choices=["json", "csv"])
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_thread_cap()
        args = _merge_config(args, parser)
        return args.func(args, parser)
    except ChargedSpinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
