"""Command-line front end.

Every subcommand writes a JSON report (with the parsed configuration) and,
where relevant, CSV figure data into --out (default $HOPFSMP_OUT or the
current directory).  Exit codes: 0 pass, 1 error, 2 verified negative
result or inapplicable construction, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2, 64
OUT_ENV = "HOPFSMP_OUT"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Output helpers: 17 significant digits everywhere
# ---------------------------------------------------------------------------

def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return "%.17g" % x


def to_json_text(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {to_json_text(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json_text(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + to_json_text(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if hasattr(obj, "value"):  # enums
        return to_json_text(obj.value, indent)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path: Path, obj) -> None:
    path.write_text(to_json_text(obj) + "\n")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([("%.17g" % float(x)) if isinstance(x, (float, np.floating, int, np.integer)) else x
                        for x in row])


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _profile_args(p):
    g = p.add_argument_group("profile")
    g.add_argument("--family", choices=["laplacian", "invlogpow", "invlogsq", "power", "flat", "tabulated"])
    g.add_argument("--k", type=float, help="exponent of the inverse-log family")
    g.add_argument("--p", type=float, help="exponent of the power family")
    g.add_argument("--T", type=float, help="flat zone [0, T]")
    g.add_argument("--ramp", type=float, default=1.0)
    g.add_argument("--t-bar", type=float, dest="t_bar")
    g.add_argument("--extension", type=float, help="constant value of g beyond t_bar")
    g.add_argument("--csv", dest="table", help="tabulated profile with columns t,g,gprime")
    g.add_argument("--profile-json", dest="profile_json", help="profile record (file or inline JSON)")


def _common(p, need_n=True):
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or .)")
    if need_n:
        p.add_argument("--n", type=int, default=2, dest="N", help="dimension N >= 2")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hopfsmp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="assumption report for a profile")
    _profile_args(p)
    _common(p)

    p = sub.add_parser("gbudget", help="budget integral G(xi)")
    _profile_args(p)
    _common(p)
    p.add_argument("--xi", type=float, nargs="+", required=True)
    p.add_argument("--scale", choices=["invn", "one"], default="invn")
    p.add_argument("--method", choices=["auto", "closed", "quadrature"], default="auto")

    p = sub.add_parser("barrier", help="radial barrier profile")
    _profile_args(p)
    _common(p)
    p.add_argument("--rho0", type=float, default=1.0)
    p.add_argument("--zeta0", type=float, default=-0.1)
    p.add_argument("--rho-max", type=float, dest="rho_max", default=None)
    p.add_argument("--scale", choices=["invn", "one"], default="invn")
    p.add_argument("--rtol", type=float, default=1e-12)

    p = sub.add_parser("counterexample", help="domain where the normal derivative vanishes")
    _profile_args(p)
    _common(p)

    p = sub.add_parser("subsolution", help="glued piecewise-radial subsolution")
    _profile_args(p)
    _common(p)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--xibar", type=float, default=None)
    p.add_argument("--K", type=float, default=None)
    p.add_argument("--samples", type=int, default=1000)

    p = sub.add_parser("verify", help="maximum-principle scenarios on lattices")
    _common(p)
    p.add_argument("--scenario", choices=["flat_g", "laplacian", "glued"], required=True)
    p.add_argument("--grid", type=int, default=None, help="nodes per axis (flat_g, laplacian)")
    p.add_argument("--method", choices=["newton", "gd"], default="newton")
    return ap


def _check_config(a) -> None:
    if getattr(a, "N", 2) < 2:
        raise UsageError("N must be at least 2")
    for name in ("rtol", "r", "ramp"):
        v = getattr(a, name, None)
        if v is not None and not v > 0:
            raise UsageError(f"--{name} must be positive")
    if getattr(a, "grid", None) is not None and a.grid < 3:
        raise UsageError("--grid must be at least 3")


def make_profile(a):
    from .profiles import FAMILIES, Tabulated, profile_from_json

    if a.profile_json:
        return profile_from_json(a.profile_json)
    if a.family is None:
        raise UsageError("a profile is required: --family or --profile-json")
    kw = {"extension_value": a.extension}
    if a.family != "tabulated":
        kw["t_bar"] = a.t_bar
    if a.family == "invlogpow":
        if a.k is None:
            raise UsageError("--k is required for invlogpow")
        return FAMILIES["invlogpow"](a.k, **kw)
    if a.family == "power":
        if a.p is None:
            raise UsageError("--p is required for power")
        return FAMILIES["power"](a.p, **kw)
    if a.family == "flat":
        if a.T is None:
            raise UsageError("--T is required for flat")
        return FAMILIES["flat"](a.T, a.ramp, **kw)
    if a.family == "tabulated":
        if not a.table:
            raise UsageError("--csv is required for tabulated")
        return Tabulated.from_csv(a.table, **kw)
    if a.family == "laplacian" and kw["t_bar"] is None:
        kw["t_bar"] = 1.0
    return FAMILIES[a.family](**kw)


def _config(a) -> dict:
    return {k: v for k, v in sorted(vars(a).items()) if k != "out"}


# ---------------------------------------------------------------------------
# Subcommands: each returns (exit code, report)
# ---------------------------------------------------------------------------

def cmd_analyze(a, out: Path):
    from .profiles import check_assumptions

    prof = make_profile(a)
    rep = check_assumptions(prof, a.N)
    return EXIT_OK, {"profile": prof.to_json(), "assumptions": rep.to_json()}


def cmd_gbudget(a, out: Path):
    from .gintegral import classify_G, compute_G

    prof = make_profile(a)
    vals = [compute_G(prof, x, a.scale, a.N, a.method).to_json() for x in a.xi]
    write_csv(out / "gbudget.csv", ["xi", "G"],
              [(v["xi"], math.inf if v["value"] is None else v["value"]) for v in vals])
    return EXIT_OK, {"profile": prof.to_json(), "classification": classify_G(prof, a.scale, a.N, a.method),
                     "values": vals}


def cmd_barrier(a, out: Path):
    from .barriers import solve_barrier_ode

    prof = make_profile(a)
    rho_max = a.rho_max
    if rho_max is None and prof.budget_divergent:
        rho_max = 10.0 * a.rho0  # the profile never exhausts its slope; pick a finite window
    b = solve_barrier_ode(prof, a.N, a.rho0, a.zeta0, a.scale, rho_max=rho_max, rtol=a.rtol)
    rows = list(b.to_csv_rows())
    write_csv(out / "barrier.csv", rows[0], rows[1:])
    res = b.implicit_residual()
    return EXIT_OK, {"profile": prof.to_json(), "rho_start": float(b.rho[0]), "rho_end": float(b.rho[-1]),
                     "rho_out": b.rho_out, "max_implicit_residual": float(np.max(np.abs(res))),
                     "nodes": len(b.rho)}


def _fig1(dom, out: Path) -> dict:
    poly = dom.boundary_polyline()
    write_csv(out / "fig1_boundary.csv", ["x1", "xN"], poly)
    z = [0.0, dom.R1]
    side = {"z": z, "normal_derivative_at_z": 0.0, "R1": dom.R1, "c_bar": dom.c_bar,
            "inner_radius": 1.0, "closed": bool(np.allclose(poly[0], poly[-1]))}
    write_json(out / "fig1.json", side)
    return side


def cmd_counterexample(a, out: Path):
    from .counterexample import (NoCounterexample, supersolution_certificate, verify_boundary_regularity,
                                 verify_interior_ball)

    prof = make_profile(a)
    try:
        from .counterexample import build_counterexample
        dom = build_counterexample(prof, a.N)
    except NoCounterexample as e:
        return EXIT_NEGATIVE, {"profile": prof.to_json(), "no_counterexample": str(e)}
    cert = supersolution_certificate(dom)
    rep = dom.to_json()
    rep["regular_boundary"] = bool(verify_boundary_regularity(dom))
    rep["interior_ball"] = bool(verify_interior_ball(dom))
    rep["supersolution"] = cert.to_json()
    rep["figure"] = _fig1(dom, out)
    write_csv(out / "counterexample_curve.csv", ["c", "R", "dRdc_formula", "dRdc_fd", "radius_eq_residual"],
              zip(dom.c, dom.R, dom.dRdc_formula, dom.dRdc_fd, dom.radius_eq_residual))
    return EXIT_OK, rep


def _quadrants(P2) -> np.ndarray:
    """Reflect first-quadrant (x1, xN) points across both axes, as one closed loop."""
    q1 = P2[np.argsort(-np.arctan2(P2[:, 1], P2[:, 0]))]  # from the xN axis down to the x1 axis
    q4 = q1[::-1] * np.array([1.0, -1.0])
    q3 = q1 * np.array([-1.0, -1.0])
    q2 = q1[::-1] * np.array([-1.0, 1.0])
    loop = np.vstack([q1, q4, q3, q2])
    return np.vstack([loop, loop[:1]])


def _figs_subsolution(sub, out: Path) -> dict:
    shift = np.array([0.0, sub.O_star_Y])
    inner = _quadrants(sub.boundary_points(4, "inner") - shift)
    outer = _quadrants(sub.boundary_points(4, "outer") - shift)
    write_csv(out / "fig2_region.csv", ["x1", "xN"], inner)
    write_csv(out / "fig2_collar.csv", ["x1", "xN"], outer)
    # level-set data of v on a plane section through the x_N axis
    ext = np.array([sub.l + sub.r, sub.l_N + sub.r])
    xs = np.linspace(-ext[0], ext[0], 121)
    ys = np.linspace(-ext[1], ext[1], 61)
    X1, XN = np.meshgrid(xs, ys, indexing="ij")
    pts = np.zeros(X1.shape + (sub.N,))
    pts[..., 0], pts[..., -1] = X1, XN
    V = np.asarray(sub(pts.reshape(-1, sub.N), outside="extend"))
    write_csv(out / "fig2_levels.csv", ["x1", "xN", "v_over_eps"],
              np.column_stack([X1.ravel(), XN.ravel(), V / sub.eps]))
    l, lN = sub.l, sub.l_N
    rect = np.array([[l, lN], [-l, lN], [-l, -lN], [l, -lN], [l, lN]])
    write_csv(out / "fig3_rectangle.csv", ["x1", "xN"], rect)
    write_csv(out / "fig3_region.csv", ["x1", "xN"], inner)
    side = {"l": l, "l_N": lN, "two_K_r": 2 * sub.K * sub.r, "quarter_r": sub.r / 4, "O_star": [0.0, 0.0]}
    write_json(out / "fig3.json", side)
    return side


def cmd_subsolution(a, out: Path):
    from .profiles import InapplicableError
    from .subsolution import SmallnessViolated, assemble_glued_subsolution, distance_check

    prof = make_profile(a)
    try:
        sub = assemble_glued_subsolution(prof, a.N, a.r, eps=a.eps, K=a.K, xibar=a.xibar)
    except (InapplicableError, SmallnessViolated) as e:
        return EXIT_NEGATIVE, {"profile": prof.to_json(), "inapplicable": str(e)}
    rep = sub.to_json()
    rep["bound_l"] = bool(sub.l <= 2 * sub.K * sub.r)
    rep["bound_l_N"] = bool(sub.l_N <= sub.r / 4)
    rep["distance_check"] = distance_check(sub, a.samples, np.random.default_rng(0))
    rep["figures"] = _figs_subsolution(sub, out)
    part = sub.partition
    write_csv(out / "partition.csv", ["alpha", "c", "s", "R", "center_s", "center_Y"],
              zip(part.alpha[:-1], part.c[:-1], part.s[:-1], part.R, sub.centers[:, 0], sub.centers[:, 1]))
    return EXIT_OK, rep


def cmd_verify(a, out: Path):
    from .verifier import smp_scenario

    kw = {}
    if a.scenario in ("flat_g", "laplacian"):
        kw["N"] = a.N
        if a.grid is not None:
            kw["n"] = a.grid
    if a.scenario in ("laplacian", "glued"):
        kw["method"] = a.method
    rep = smp_scenario(a.scenario, **kw)
    passed = {"flat_g": "violated", "laplacian": "boundary_min", "glued": "contradiction"}[a.scenario]
    return (EXIT_OK if rep[passed] else EXIT_NEGATIVE), rep


COMMANDS = {"analyze": cmd_analyze, "gbudget": cmd_gbudget, "barrier": cmd_barrier,
            "counterexample": cmd_counterexample, "subsolution": cmd_subsolution, "verify": cmd_verify}


def run(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        _check_config(a)
        out = Path(a.out or os.environ.get(OUT_ENV, "."))
        out.mkdir(parents=True, exist_ok=True)
        code, rep = COMMANDS[a.cmd](a, out)
    except UsageError as e:
        ap.print_usage(sys.stderr)
        print(f"hopfsmp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # reported, not raised: the exit code carries the outcome
        print(f"hopfsmp: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    rep = {"command": a.cmd, "config": _config(a), "exit_code": code, **rep}
    write_json(out / f"{a.cmd}.json", rep)
    print(to_json_text(rep))
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
