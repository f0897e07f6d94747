"""Command-line front end: ``thermolab <subcommand> --config FILE --out DIR``.

Exit codes: 0 success, 1 invalid configuration or input, 2 numerical
failure (integration breakdown), 3 selftest failure.
"""
import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import _kernels as K
from ._parallel import WORKERS_ENV, default_workers
from .analysis import (conjugate_scan, domination_estimate, green_line_exponent, grid_points,
                       lyapunov_along, random_states, transversality_scan)
from .cocycle import (SigmaCovector, cocycle_matrix, damping_m, propagate_sigma, propagate_z,
                      z_initial)
from .config import (ConfigError, build_gauge, build_point, build_system, config_hash,
                     integrator_options, load, resolve)
from .flow import IntegrationError, integrate_orbit
from .liouville import hopf_check
from .model import KAPPA_TILDE_GAUGE, System

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_SELFTEST = 0, 1, 2, 3


# ---------------------------------------------------------------- output helpers

def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    return value


def write_summary(path, command, cfg, results):
    doc = {"version": __version__, "command": command, "config_hash": config_hash(cfg),
           "config": cfg, "results": results}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- subcommands

def cmd_orbit(cfg, out, workers):
    surface, model = build_system(cfg)
    gauge = build_gauge(cfg)
    oc = cfg["orbit"]
    orbit = integrate_orbit(surface, model, build_point(oc["initial"]), (oc["t_min"], oc["t_max"]),
                            **integrator_options(cfg))
    ts = np.linspace(oc["t_min"], oc["t_max"], oc["samples"])
    states = orbit.states(ts)
    jets = orbit.jets(ts, gauge)
    rows = [(t, *s, j[K.J_LAM], j[K.J_VL], j[K.J_KP], j[K.J_BIGK], j[K.J_KT])
            for t, s, j in zip(ts, states, jets)]
    write_csv(os.path.join(out, "orbit.csv"),
              ["t", "x", "y", "theta", "lambda", "V_lambda", "kappa_p", "big_k", "kappa_tilde"], rows)
    return {"steps": orbit.stats.steps, "rejected": orbit.stats.rejected,
            "final_state": list(states[-1])}


def cmd_cocycle(cfg, out, workers):
    surface, model = build_system(cfg)
    gauge = build_gauge(cfg)
    cc = cfg["cocycle"]
    opts = integrator_options(cfg)
    orbit = integrate_orbit(surface, model, build_point(cc["initial"]), (cc["t_min"], cc["t_max"]),
                            **opts)
    xi0 = SigmaCovector(cc["covector"][0], cc["covector"][1], gauge)
    z0, zd0 = z_initial(orbit, gauge, xi0)
    rows = []
    worst = 0.0
    for t in np.linspace(cc["t_min"], cc["t_max"], cc["samples"]):
        xi = propagate_sigma(orbit, gauge, xi0, t)
        z, _ = propagate_z(orbit, z0, zd0, t)
        m = damping_m(orbit, t)
        det = cocycle_matrix(orbit, KAPPA_TILDE_GAUGE, t, "gamma").det
        worst = max(worst, abs(det - 1.0))
        rows.append((t, xi.x, xi.y, z, m, det))
    write_csv(os.path.join(out, "cocycle.csv"), ["t", "x_c", "y_c", "z", "m", "det_Gamma"], rows)
    return {"gauge": gauge.tag, "max_abs_det_gamma_minus_1": worst}


def cmd_curvature_scan(cfg, out, workers):
    surface, model = build_system(cfg)
    gauge = build_gauge(cfg)
    pts = grid_points(cfg["curvature_scan"]["grid"])
    arr = np.array([[p.x, p.y, p.theta] for p in pts])
    jets = System(surface, model, gauge).jets(arr[:, 0], arr[:, 1], arr[:, 2])
    rows, results = [], {"gauge": gauge.tag}
    for name, col in (("gaussian_curvature", K.J_KG), ("kappa_p", K.J_KP), ("big_k", K.J_BIGK),
                      ("kappa_tilde", K.J_KT)):
        v = jets[:, col]
        lo, hi, mx = float(np.min(v)), float(np.max(v)), float(np.max(np.abs(v)))
        rows.append((name, lo, hi, mx))
        results[f"max_abs_{name}"] = mx
        results[f"min_{name}"] = lo
        results[f"max_{name}"] = hi
    write_csv(os.path.join(out, "curvature.csv"), ["quantity", "min", "max", "max_abs"], rows)
    return results


def cmd_conjugate_scan(cfg, out, workers):
    surface, model = build_system(cfg)
    cs = cfg["conjugate_scan"]
    pts = random_states(cs["count"], cfg["seed"])
    opts = integrator_options(cfg)
    reports = conjugate_scan(surface, model, pts, cs["t_max"], opts["rel_tol"], opts["abs_tol"],
                             workers)
    rows = [(i, p.x, p.y, p.theta, r.time if r.found else math.nan)
            for i, (p, r) in enumerate(zip(pts, reports))]
    write_csv(os.path.join(out, "conjugate.csv"), ["index", "x", "y", "theta", "conjugate_time"], rows)
    return {"orbits": len(pts), "detections": sum(r.found for r in reports), "t_max": cs["t_max"]}


def cmd_green_scan(cfg, out, workers):
    surface, model = build_system(cfg)
    gauge = build_gauge(cfg)
    gs = cfg["green_scan"]
    opts = integrator_options(cfg)
    res = transversality_scan(surface, model, gs["grid"], gauge, gs["schedule"], gs["tol"],
                              opts["rel_tol"], opts["abs_tol"], workers)
    rows = []
    for i, p in enumerate(grid_points(gs["grid"])):
        idx = np.unravel_index(i, res.shape)
        rows.append((p.x, p.y, p.theta, res.stable[idx], res.unstable[idx], res.stable_zero[idx],
                     res.unstable_zero[idx], abs(res.stable[idx] - res.unstable[idx]),
                     res.converged[idx], res.conjugate[idx], res.monotone[idx]))
    write_csv(os.path.join(out, "green.csv"),
              ["x", "y", "theta", "r_s", "r_u", "r_s_zero", "r_u_zero", "gap", "converged",
               "conjugate", "monotone"], rows)
    return {"gauge": gauge.tag, "min_gap": res.min_gap, "min_gap_all_cells": res.min_gap_all,
            "continuity_modulus": res.continuity, "nonconverged": res.nonconverged,
            "conjugate_cells": int(np.count_nonzero(res.conjugate)), "cells": int(res.stable.size)}


def cmd_lyapunov(cfg, out, workers):
    surface, model = build_system(cfg)
    gauge = build_gauge(cfg)
    lc = cfg["lyapunov"]
    T, H = lc["t_max"], lc["horizon"]
    opts = integrator_options(cfg)
    orbit = integrate_orbit(surface, model, build_point(lc["initial"]), (-H, T + H), **opts)
    rows = [("unstable", math.nan, math.nan, green_line_exponent(orbit, "unstable", gauge, T, H)),
            ("stable", math.nan, math.nan, green_line_exponent(orbit, "stable", gauge, T, H))]
    if lc["covector"]:
        xi = SigmaCovector(lc["covector"][0], lc["covector"][1], gauge)
        rows.append(("covector", xi.x, xi.y, lyapunov_along(orbit, xi, T, lc["renorm"])))
    write_csv(os.path.join(out, "lyapunov.csv"), ["line", "x_c", "y_c", "exponent"], rows)
    return {"gauge": gauge.tag, "T": T, "exponents": {r[0]: r[3] for r in rows}}


def cmd_domination(cfg, out, workers):
    surface, model = build_system(cfg)
    dc = cfg["domination"]
    pts = random_states(dc["samples"], cfg["seed"])
    opts = integrator_options(cfg)
    fit = domination_estimate(surface, model, pts, dc["t_max"], dc["horizon"],
                              rel_tol=opts["rel_tol"], abs_tol=opts["abs_tol"], workers=workers)
    rows = [(i, p.x, p.y, p.theta, s) for i, (p, s) in enumerate(zip(pts, fit.sample_slopes))]
    write_csv(os.path.join(out, "domination.csv"), ["sample", "x", "y", "theta", "slope"], rows)
    return {"slope": fit.slope, "offset": fit.offset, "samples": len(pts), "T": dc["t_max"]}


def cmd_hopf(cfg, out, workers):
    surface, model = build_system(cfg)
    gauge = build_gauge(cfg)
    r = hopf_check(surface, model, gauge, cfg["hopf"]["grid"])
    return {"gauge": r.gauge, "int_kappa_p": r.kappa_integral,
            "int_p_minus_V_lambda_squared": r.defect_integral, "margin": r.margin,
            "euler_form": r.euler_form, "max_abs_big_k": r.max_abs_big_k, "grid": list(r.grid)}


def cmd_selftest(cfg, out, workers, criteria=None):
    from .acceptance import run_all

    rows, per = [], {}
    for n, name, checks in run_all(criteria, workers):
        ok = all(c.passed for c in checks)
        per[str(n)] = {"name": name, "passed": ok}
        print(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}")
        for c in checks:
            rows.append((c.criterion, c.check, c.value, c.threshold, c.passed))
    write_csv(os.path.join(out, "selftest.csv"),
              ["criterion", "check", "value", "threshold", "passed"], rows)
    return {"criteria": per, "passed": all(v["passed"] for v in per.values())}


COMMANDS = {
    "orbit": cmd_orbit,
    "cocycle": cmd_cocycle,
    "curvature-scan": cmd_curvature_scan,
    "conjugate-scan": cmd_conjugate_scan,
    "green-scan": cmd_green_scan,
    "lyapunov": cmd_lyapunov,
    "domination": cmd_domination,
    "hopf": cmd_hopf,
    "selftest": cmd_selftest,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="thermolab",
                                     description="Numerical experiments for thermostat flows on the torus.")
    parser.add_argument("--version", action="version", version=f"thermolab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML config, JSON config, or a previous JSON summary")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--workers", type=int, default=None,
                       help=f"worker processes (default: ${WORKERS_ENV} or 1)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if name == "selftest":
            p.add_argument("--criteria", type=int, nargs="*", default=None,
                           help="run only these criteria")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        workers = args.workers if args.workers is not None else default_workers()
        if workers < 1:
            raise ConfigError("--workers", "must be at least 1")
        if args.command == "selftest":
            cfg = resolve({})
        elif args.config is None:
            raise ConfigError("--config", f"the {args.command} subcommand needs a config file")
        else:
            cfg = load(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "must be non-negative")
            cfg["seed"] = args.seed
        os.makedirs(args.out, exist_ok=True)
        if args.command == "selftest":
            results = cmd_selftest(cfg, args.out, workers, args.criteria)
        else:
            results = COMMANDS[args.command](cfg, args.out, workers)
        write_summary(os.path.join(args.out, f"{args.command}.json"), args.command, cfg, results)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.command == "selftest" and not results["passed"]:
        return EXIT_SELFTEST
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
