"""Command line: ``hopfmcf {predict, run, lift, verify}``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import io
from .config import bundled_config, load_config
from .csf import CsfError
from .curve import CurveError, CurveFamilySpec, SphereCurve, cap_area, is_simple, make_family, read_point_list
from .flow import CIRCLE_CYLINDER, FlowError, evolve, predict, tbar_of_t, t_of_tbar
from .hopf import HopfError, build_torus, check_lagrangian, horizontal_lift
from .sphere import fiber_point

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2



def worker_count():
    """Thread cap from HOPFMCF_THREADS (defaults to the CPU count)."""
    raw = os.environ.get("HOPFMCF_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError("HOPFMCF_THREADS must be a positive integer") from None
    if n < 1:
        raise ValueError("HOPFMCF_THREADS must be a positive integer")
    return n


def _fmt(v):
    return "inf" if math.isinf(v) else "%.10g" % v


def _limit_text(rep):
    if rep.kind == CIRCLE_CYLINDER:
        return "torus collapses onto a circle of radius %s; blow-up limit is a round cylinder" % _fmt(rep.limit_radius)
    return "torus shrinks to a point; rescaled by 1/R(t) it tends to the Clifford torus"


def cmd_predict(args):
    if (args.a0 is None) == (args.theta0 is None):
        raise ValueError("give exactly one of --a0 or --theta0")
    if args.a0 is not None:
        a0 = args.a0
    else:
        if not 0.0 < args.theta0 <= math.pi / 2:
            raise ValueError("theta0 must lie in (0, pi/2]")
        a0 = cap_area(args.theta0)
    rep = predict(a0, args.r0)
    print("a0 = %s" % _fmt(a0))
    print("kind = %s" % rep.kind)
    print("T = %s" % _fmt(rep.T))
    print("tau = %s" % _fmt(rep.tau))
    print("limit_radius = %s" % _fmt(rep.limit_radius))
    print("limit: %s" % _limit_text(rep))
    print(json.dumps({"a0": a0, "r0": args.r0, "kind": rep.kind, "T": rep.T, "tau": None if math.isinf(rep.tau) else rep.tau, "limit_radius": rep.limit_radius}))
    return EXIT_OK


def _resolve_config(arg):
    p = Path(arg)
    if not p.exists() and p.suffix == "":
        p = bundled_config(arg)
    return p, load_config(p)


def _measured_table(result):
    rep = result.report
    recs = result.records
    final = result.frames[-1]
    rows = [
        {"quantity": "A0", "measured": rep.a0, "predicted": None},
        {"quantity": "max |A - A_pred|", "measured": max(abs(r.area - r.area_predicted) for r in recs), "predicted": 0.0},
    ]
    if rep.kind == CIRCLE_CYLINDER:
        rows.append({"quantity": "T", "measured": rep.T_measured, "predicted": rep.T})
        rows.append({"quantity": "tau", "measured": rep.tbar_end if rep.extinct else None, "predicted": rep.tau})
        rows.append({"quantity": "limit radius", "measured": float(np.mean(np.linalg.norm(final.vertices(), axis=1))), "predicted": rep.limit_radius})
    else:
        rows.append({"quantity": "extinct by tbar_max", "measured": rep.extinct, "predicted": False})
        rows.append({"quantity": "distance to Clifford (final frame)", "measured": rep.limit_fit_residual, "predicted": 0.0})
    rows.append({"quantity": "sup typeI", "measured": rep.typeI_sup, "predicted": None})
    for row in rows:
        m, p = row["measured"], row["predicted"]
        if isinstance(m, float) and isinstance(p, float) and p != 0.0 and math.isfinite(m):
            row["rel_error"] = abs(m - p) / abs(p)
    return rows


def cmd_run(args):
    path, cfg = _resolve_config(args.config)
    out = Path(args.out or cfg.output_dir)
    spec = cfg.family_spec(base_dir=path.parent)
    curve = make_family(spec)
    evo = cfg.to_evolution(curve)
    result = evolve(evo)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.export.csv:
        io.write_records(result.records, out / "records.csv")
    rep = result.report
    q = fiber_point(np.array(rep.extinction_point), 1.0) if rep.extinction_point is not None else None

    def export(item):
        k, mesh = item
        if cfg.export.mesh4d:
            io.write_v4(mesh, out / ("frame_%04d.v4" % k))
        if cfg.export.obj3d:
            io.write_obj(mesh, out / ("frame_%04d.obj" % k), q=q)

    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        list(ex.map(export, enumerate(result.frames)))

    frames = [{"index": k, "t": m.t_stamp, "tbar": tbar_of_t(m.t_stamp, cfg.r0) if m.t_stamp < cfg.r0**2 / 4 else math.inf, "R": m.R} for k, m in enumerate(result.frames)]
    io.write_json(
        {
            "name": cfg.name,
            "config": cfg.model_dump(),
            "report": rep.as_dict(),
            "measured_vs_predicted": _measured_table(result),
            "frames": frames,
        },
        out / "report.json",
    )
    print("kind = %s" % rep.kind)
    print("T predicted = %s, measured = %s" % (_fmt(rep.T), _fmt(rep.T_measured)))
    print("tbar reached = %s (t = %s)" % (_fmt(rep.tbar_end), _fmt(t_of_tbar(rep.tbar_end, cfg.r0))))
    print("limit_radius = %s, limit_fit_residual = %s, typeI_sup = %s" % (_fmt(rep.limit_radius), _fmt(rep.limit_fit_residual), _fmt(rep.typeI_sup)))
    print("wrote %d records and %d frames to %s" % (len(result.records), len(result.frames), out))
    return EXIT_OK


def _lift_curve(args):
    if args.curve_file is not None:
        pts = read_point_list(args.curve_file)
        if not is_simple(pts):
            raise CurveError("curve not simple")
        return SphereCurve(pts).canonical()
    if args.family is None:
        raise ValueError("give --family or --curve-file")
    return make_family(CurveFamilySpec(family=args.family, n=args.n, theta0=args.theta0, axis=args.axis, m=args.m, epsilon=args.eps))


def cmd_lift(args):
    curve = _lift_curve(args)
    lift = horizontal_lift(curve)
    mesh = build_torus(lift, args.n_beta, 1.0)
    residual = check_lagrangian(mesh)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_v4(mesh, out / "torus.v4")
        io.write_obj(mesh, out / "torus.obj")
    print("holonomy_phase = %.12g" % lift.holonomy_phase)
    print("enclosed_area = %.12g" % curve.area)
    print("lagrangian_residual = %.3e" % residual)
    return EXIT_OK


def cmd_verify(args):
    from .verify import format_result, run_criteria

    results = run_criteria(filter=args.filter, cfl=args.cfl, workers=worker_count())
    if not results:
        raise ValueError("no criterion matches %r" % args.filter)
    for res in results:
        print(format_result(res), flush=True)
    n_pass = sum(r.passed for r in results)
    print("%d/%d criteria passed" % (n_pass, len(results)))
    return EXIT_OK if n_pass == len(results) else EXIT_INVALID


def build_parser():
    p = argparse.ArgumentParser(prog="hopfmcf", description="Mean curvature flow of Hopf tori via curve shortening flow on S^2(1/2).")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("predict", help="singular time and limit from A0 and R0")
    sp.add_argument("--a0", type=float, help="enclosed area on S^2(1/2), in (0, pi/2]")
    sp.add_argument("--theta0", type=float, help="polar angle of a latitude circle (radians)")
    sp.add_argument("--r0", type=float, required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("run", help="run a JSON configuration")
    sp.add_argument("config", help="config file, or the name of a bundled config (clifford, cap60)")
    sp.add_argument("--out", help="output directory (overrides the config)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("lift", help="Hopf torus over a curve at R = 1")
    sp.add_argument("--family", choices=["latitude", "great_circle", "perturbed_great_circle"])
    sp.add_argument("--theta0", type=float)
    sp.add_argument("--axis", default="z", choices=["x", "y", "z"])
    sp.add_argument("--m", type=int, default=3)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--curve-file", help="text file with one 'x y z' point per line")
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--n-beta", type=int, default=64)
    sp.add_argument("--out", help="directory for torus.v4 and torus.obj")
    sp.set_defaults(func=cmd_lift)

    sp = sub.add_parser("verify", help="run the acceptance criteria")
    sp.add_argument("--filter", help="only criteria whose key contains this text (or whose number matches)")
    sp.add_argument("--cfl", type=float, default=0.25, help="CFL number used by every flow run")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CsfError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, CurveError, FlowError, HopfError, ValueError, FileNotFoundError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
