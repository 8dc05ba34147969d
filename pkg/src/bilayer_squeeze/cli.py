"""Command-line interface.

Subcommands: lattice dump, bogoliubov dispersion|critical-az, dtwa run|sweep,
oracle run, analyze p|collapse|transition, pipeline boundary|scaling|collapse.
Every subcommand accepts --dry-run, which prints the resolved plan as JSON and
exits without computing.  Progress and warnings go to stderr; data goes to
files or stdout.  The worker pool is capped by BILAYER_SQUEEZE_THREADS.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, bogoliubov, dtwa, pipelines
from .lattice import LatticeSpec, build_positions


def _add_spec_args(p: argparse.ArgumentParser, a_z_required: bool = True) -> None:
    p.add_argument("--geometry", required=True,
                   help="ladder | square | triangular | honeycomb")
    p.add_argument("--L", type=int, required=True, help="cells per direction")
    p.add_argument("--a-z", dest="a_z", type=float, required=a_z_required,
                   default=None, help="layer spacing (units of in-layer spacing)")
    p.add_argument("--alpha", type=float, required=True, help="power-law exponent")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="interlayer coupling ratio (default 1)")
    p.add_argument("--boundary", default="periodic", help="periodic | open")


def _spec_from_args(args) -> LatticeSpec:
    return LatticeSpec(
        geometry=args.geometry,
        L=args.L,
        a_z=args.a_z if args.a_z is not None else 1.0,
        alpha=args.alpha,
        lam=args.lam,
        boundary=args.boundary,
    )


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ntraj", type=int, default=5000)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--stride", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-8)
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=1e-8)


def _run_from_args(args) -> dtwa.RunConfig:
    return dtwa.RunConfig(
        n_traj=args.ntraj,
        t_max=args.tmax,
        output_stride=args.stride,
        master_seed=args.seed,
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
    )


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v]


def _dry_run(args, plan: dict) -> bool:
    if args.dry_run:
        print(json.dumps(plan, indent=2, sort_keys=True, default=str))
        return True
    return False


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_lattice_dump(args) -> int:
    spec = _spec_from_args(args)
    if _dry_run(args, {"command": "lattice dump", "spec": spec.to_json_dict()}):
        return 0
    sites = build_positions(spec)
    payload = {
        "spec": spec.to_json_dict(),
        "n_sites": spec.n_sites,
        "sites": [
            {
                "layer": s.layer,
                "cell": list(s.cell),
                "sublattice": s.sublattice,
                "position": [float(c) for c in pos],
            }
            for s, pos in sites
        ],
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        _progress(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_bogoliubov_dispersion(args) -> int:
    spec = _spec_from_args(args)
    if _dry_run(args, {"command": "bogoliubov dispersion", "spec": spec.to_json_dict()}):
        return 0
    rows = pipelines.dispersion_rows(spec)
    pipelines.write_csv(Path(args.out), pipelines.DISPERSION_HEADER, rows)
    _progress(f"wrote {args.out} ({len(rows)} momenta)")
    return 0


def _cmd_bogoliubov_critical_az(args) -> int:
    plan = {
        "command": "bogoliubov critical-az",
        "geometry": args.geometry,
        "L_values": args.l_list,
        "alpha": args.alpha,
        "lambda": args.lam,
    }
    if _dry_run(args, plan):
        return 0
    rows = pipelines.critical_az_rows(args.geometry, args.l_list, args.alpha, args.lam)
    pipelines.write_csv(Path(args.out), pipelines.CRITICAL_AZ_HEADER, rows)
    _progress(f"wrote {args.out}")
    return 0


def _cmd_dtwa_run(args) -> int:
    spec = _spec_from_args(args)
    run = _run_from_args(args)
    if _dry_run(args, {"command": "dtwa run", "spec": spec.to_json_dict(),
                       "run": run.to_json_dict(), "out": args.out}):
        return 0
    series = pipelines.run_dtwa_to_dir(spec, run, Path(args.out))
    mv_note = ""
    try:
        mv = dtwa.minimal_variance(series)
        mv_note = f"; var_min={mv.var_min:.6g} at t={mv.t_min:.6g}"
    except ValueError:
        pass
    _progress(f"wrote {args.out}/series.csv ({series.t.size} times){mv_note}")
    return 0


def _cmd_dtwa_sweep(args) -> int:
    plan_dict = json.loads(Path(args.plan).read_text())
    plan = pipelines.SweepPlan.from_json_dict(plan_dict)
    if _dry_run(args, {"command": "dtwa sweep", "plan": plan_dict,
                       "n_runs": plan.n_runs, "out": args.out}):
        return 0
    pipelines.run_sweep(plan, Path(args.out),
                        progress=lambda s: _progress(f"done {s.to_json()}"))
    _progress(f"wrote {args.out}/minima.csv")
    return 0


def _cmd_oracle_run(args) -> int:
    spec = _spec_from_args(args)
    if _dry_run(args, {"command": "oracle run", "spec": spec.to_json_dict(),
                       "t_max": args.tmax, "stride": args.stride, "out": args.out}):
        return 0
    series = pipelines.run_oracle_to_dir(spec, args.tmax, args.stride, Path(args.out),
                                         rtol=args.rel_tol, atol=args.abs_tol)
    _progress(f"wrote {args.out}/series.csv ({series.t.size} times)")
    return 0


def _cmd_analyze_p(args) -> int:
    if _dry_run(args, {"command": "analyze p", "minima": args.minima}):
        return 0
    cols = pipelines.read_csv(Path(args.minima))
    for column in ("N", "var_min", "var_min_stderr"):
        if column not in cols:
            print(f"error: {args.minima} missing column {column!r}", file=sys.stderr)
            return 2
    sigma = np.maximum(cols["var_min_stderr"], 1e-12)
    p, unc = analysis.fit_power_law(zip(cols["N"], cols["var_min"], sigma))
    print(json.dumps({"p": p, "unc": unc, "points_used": int(cols["N"].size)}))
    return 0


def _cmd_analyze_transition(args) -> int:
    if _dry_run(args, {"command": "analyze transition", "curve": args.curve,
                       "threshold": args.threshold}):
        return 0
    cols = pipelines.read_csv(Path(args.curve))
    for column in ("abscissa", "p", "unc"):
        if column not in cols:
            print(f"error: {args.curve} missing column {column!r}", file=sys.stderr)
            return 2
    x_c = analysis.detect_transition(
        zip(cols["abscissa"], cols["p"], cols["unc"]), threshold=args.threshold
    )
    print(json.dumps({"critical_abscissa": x_c}))
    return 0


def _cmd_analyze_collapse(args) -> int:
    plan = {
        "command": "analyze collapse",
        "series_dir": args.series_dir,
        "d": args.d,
        "p": args.p,
        "var_cut": args.var_cut,
    }
    if _dry_run(args, plan):
        return 0
    curves = pipelines.curves_from_series_dir(Path(args.series_dir))
    p_override = (args.p, args.unc_p) if args.p is not None else None
    out_dir = Path(args.out) if args.out else Path(args.series_dir)
    result = pipelines.collapse_from_curves(
        curves, d=args.d, out_dir=out_dir, p_override=p_override, var_cut=args.var_cut
    )
    print(json.dumps(result.to_json_dict(), indent=2))
    return 0


def _cmd_pipeline_boundary(args) -> int:
    run = _run_from_args(args)
    plan = {
        "command": "pipeline boundary",
        "geometries": args.geometries,
        "alphas": args.alphas,
        "lambdas": args.lambdas,
        "L": args.L,
        "sizes": args.sizes,
        "run": run.to_json_dict(),
        "out": args.out,
    }
    if not args.geometries:
        print("error: empty geometry list", file=sys.stderr)
        return 2
    if _dry_run(args, plan):
        return 0
    pipelines.pipeline_phase_boundary(
        args.geometries, args.alphas, args.lambdas, args.L, run, Path(args.out),
        sizes=args.sizes,
    )
    _progress(f"wrote {args.out}/boundary.csv")
    return 0


def _cmd_pipeline_scaling(args) -> int:
    plan = {
        "command": "pipeline scaling",
        "geometry": args.geometry,
        "alphas": args.alphas,
        "L_values": args.l_list,
        "lambda": args.lam,
        "out": args.out,
    }
    if _dry_run(args, plan):
        return 0
    fits = pipelines.pipeline_scaling(args.alphas, args.l_list, geometry=args.geometry,
                                      out_dir=Path(args.out), lam=args.lam)
    print(json.dumps(fits, indent=2, sort_keys=True))
    return 0


def _cmd_pipeline_collapse(args) -> int:
    run = _run_from_args(args)
    plan = {
        "command": "pipeline collapse",
        "geometry": args.geometry,
        "alpha": args.alpha,
        "lambda": args.lam,
        "L_values": args.l_list,
        "az_over_l": args.az_over_l,
        "d": args.d,
        "run": run.to_json_dict(),
        "out": args.out,
    }
    if _dry_run(args, plan):
        return 0
    p_override = (args.p, args.unc_p) if args.p is not None else None
    result = pipelines.pipeline_collapse(
        args.geometry, args.alpha, args.lam, args.l_list, args.az_over_l,
        run, args.d, Path(args.out), p_override=p_override, var_cut=args.var_cut,
    )
    print(json.dumps(result.to_json_dict(), indent=2))
    return 0


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(
        prog="bilayer-squeeze",
        description="Bilayer spin-squeezing phase transition toolkit",
    )
    root.add_argument("--version", action="version", version=__version__)
    groups = root.add_subparsers(dest="group", required=True)

    def sub(group, name, fn, **kw):
        p = group.add_parser(name, **kw)
        p.add_argument("--dry-run", action="store_true",
                       help="print the resolved plan and exit")
        p.set_defaults(fn=fn)
        return p

    lattice = groups.add_parser("lattice").add_subparsers(dest="command", required=True)
    p = sub(lattice, "dump", _cmd_lattice_dump, help="dump sites and spec as JSON")
    _add_spec_args(p)
    p.add_argument("--out", default=None)

    bog = groups.add_parser("bogoliubov").add_subparsers(dest="command", required=True)
    p = sub(bog, "dispersion", _cmd_bogoliubov_dispersion,
            help="per-momentum dispersion and growth rates")
    _add_spec_args(p)
    p.add_argument("--out", required=True)
    p = sub(bog, "critical-az", _cmd_bogoliubov_critical_az,
            help="critical layer spacing by bisection")
    p.add_argument("--geometry", required=True)
    p.add_argument("--l-list", dest="l_list", type=_ints, required=True,
                   help="comma-separated L values")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--out", required=True)

    dt = groups.add_parser("dtwa").add_subparsers(dest="command", required=True)
    p = sub(dt, "run", _cmd_dtwa_run, help="one dTWA ensemble")
    _add_spec_args(p)
    _add_run_args(p)
    p.add_argument("--out", required=True)
    p = sub(dt, "sweep", _cmd_dtwa_sweep, help="grid of runs from a JSON plan")
    p.add_argument("--plan", required=True, help="JSON file: {base, run, axes}")
    p.add_argument("--out", required=True)

    orc = groups.add_parser("oracle").add_subparsers(dest="command", required=True)
    p = sub(orc, "run", _cmd_oracle_run, help="exact evolution (<= 14 spins)")
    _add_spec_args(p)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--stride", type=float, required=True)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-11)
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=1e-13)
    p.add_argument("--out", required=True)

    ana = groups.add_parser("analyze").add_subparsers(dest="command", required=True)
    p = sub(ana, "p", _cmd_analyze_p, help="Var_min ~ N^p fit from minima.csv")
    p.add_argument("--minima", required=True)
    p = sub(ana, "transition", _cmd_analyze_transition,
            help="critical abscissa from a p(a_z/L) curve CSV")
    p.add_argument("--curve", required=True)
    p.add_argument("--threshold", type=float, default=0.05)
    p = sub(ana, "collapse", _cmd_analyze_collapse,
            help="exponents from a directory of series runs")
    p.add_argument("--series-dir", dest="series_dir", required=True)
    p.add_argument("--d", type=int, choices=(1, 2), required=True)
    p.add_argument("--p", type=float, default=None, help="override the p exponent")
    p.add_argument("--unc-p", dest="unc_p", type=float, default=0.0)
    p.add_argument("--var-cut", dest="var_cut", type=float, default=20.0)
    p.add_argument("--out", default=None)

    pipe = groups.add_parser("pipeline").add_subparsers(dest="command", required=True)
    p = sub(pipe, "boundary", _cmd_pipeline_boundary,
            help="Bogoliubov vs dTWA phase boundary")
    p.add_argument("--geometries", type=lambda s: [v for v in s.split(",") if v], required=True)
    p.add_argument("--alphas", type=_floats, required=True)
    p.add_argument("--lambdas", type=_floats, default=[1.0])
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--sizes", type=_ints, default=None,
                   help="system sizes for the dTWA p-fit (default: L/2, 3L/4, L)")
    _add_run_args(p)
    p.add_argument("--out", required=True)
    p = sub(pipe, "scaling", _cmd_pipeline_scaling,
            help="a_z*(L) scaling vs the analytic prediction")
    p.add_argument("--geometry", default="ladder")
    p.add_argument("--alphas", type=_floats, required=True)
    p.add_argument("--l-list", dest="l_list", type=_ints, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p = sub(pipe, "collapse", _cmd_pipeline_collapse,
            help="full critical-exponent extraction")
    p.add_argument("--geometry", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--l-list", dest="l_list", type=_ints, required=True)
    p.add_argument("--az-over-l", dest="az_over_l", type=_floats, required=True)
    p.add_argument("--d", type=int, choices=(1, 2), required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--unc-p", dest="unc_p", type=float, default=0.0)
    p.add_argument("--var-cut", dest="var_cut", type=float, default=20.0)
    _add_run_args(p)
    p.add_argument("--out", required=True)

    return root


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
