"""Command-line front end: ``harmonica {generate, verify, periods, report}``.

Exit codes: 0 success, 1 suite failure, 2 invalid parameters,
3 quadrature failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .catalog import FAMILIES, FamilySpec, make_family, torus_period_b
from .core import periods_vanish, real_periods, verify_immersion
from .curvature import gauss_degree, jorge_meeks_check, total_curvature
from .ends import analyze_end, flux
from .errors import (DegeneratePoint, HarmonicaError, InvalidParameters, NonConvergent, NonIntegerDegree, RootNotBracketed,
                     TailNotDecaying)
from .gauss import qc_indices, shell_points
from .identities import identity_suite
from .mesh import LogPolarGrid, MeshIOError, export_mesh, flujo_grid, sample_mesh, torus_grid
from .quadrature import QuadratureConfig

SCHEMA_VERSION = 1
EXIT_OK, EXIT_SUITE, EXIT_PARAMS, EXIT_QUAD, EXIT_IO = 0, 1, 2, 3, 4

PERIOD_TOL = 1e-8
QC_SHELLS = (1e-1, 1e-2, 1e-3, 1e-4)


# ----------------------------------------------------------------------------
# argument parsing helpers


def parse_complex(text: str) -> complex:
    """``a+bi`` literals (no spaces); ``i``/``j`` both accepted."""
    try:
        return complex(text.strip().replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex literal: {text!r}")


def parse_grid(text: str):
    try:
        n, m = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be NxM, got {text!r}")
    if n < 2 or m < 3:
        raise argparse.ArgumentTypeError("grid needs N >= 2 and M >= 3")
    return n, m


def parse_range(text: str):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must be lo:hi, got {text!r}")
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"range needs lo < hi, got {text!r}")
    return lo, hi


def parse_sweep(text: str):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"sweep must be lo:hi:n, got {text!r}")
    if n < 1 or (n > 1 and not lo < hi):
        raise argparse.ArgumentTypeError(f"sweep needs n >= 1 and lo < hi, got {text!r}")
    return lo, hi, n


def _add_family_args(p):
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--spec", type=Path, help="JSON family spec {family, params}")
    p.add_argument("--alpha", type=parse_complex)
    p.add_argument("--beta", type=parse_complex)
    p.add_argument("--r1", type=float)
    p.add_argument("--r2", type=float)
    p.add_argument("--b", type=parse_complex, help="rotational b (complex) or flujo b (real)")
    p.add_argument("--c", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--coeffs", type=parse_complex, nargs="+", help="graph polynomial coefficients")


def _add_common(p):
    p.add_argument("--tol-abs", type=float, default=1e-10)
    p.add_argument("--tol-rel", type=float, default=1e-8)
    p.add_argument("--tol-max-subdivisions", type=int, default=2 ** 16)
    p.add_argument("--tol-tail-growth", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print machine-readable JSON")


def _config(args) -> QuadratureConfig:
    return QuadratureConfig(args.tol_abs, args.tol_rel, args.tol_max_subdivisions, args.tol_tail_growth)


def _spec_from_args(args) -> FamilySpec:
    if args.spec is not None:
        try:
            obj = json.loads(args.spec.read_text())
        except OSError as exc:
            raise MeshIOError(f"cannot read {args.spec}: {exc}") from exc
        spec = FamilySpec.from_json(obj)
        params = dict(spec.params)
        name = spec.family
    elif args.family:
        name, params = args.family, {}
    else:
        raise InvalidParameters("give --family or --spec")
    for key in ("alpha", "beta", "r1", "r2", "c", "a"):
        v = getattr(args, key)
        if v is not None:
            params[key] = v
    if args.b is not None:
        b = args.b
        if name != "rotational":
            if b.imag != 0:
                raise InvalidParameters(f"--b must be real for {name}")
            b = b.real
        params["b"] = b
    if args.coeffs is not None:
        params["coeffs"] = list(args.coeffs)
    return FamilySpec(name, params)


def _cplx(x):
    x = complex(x)
    return [x.real, x.imag]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return _cplx(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _emit(report, as_json, out=None):
    report = _jsonable({"schema_version": SCHEMA_VERSION, **report})
    text = json.dumps(report, indent=2, sort_keys=False, allow_nan=False)
    if out is not None:
        try:
            Path(out).write_text(text + "\n")
        except OSError as exc:
            raise MeshIOError(f"cannot write {out}: {exc}") from exc
    if as_json:
        print(text)
    else:
        _print_summary(report)


def _print_summary(report, indent=""):
    for k, v in report.items():
        if isinstance(v, dict):
            print(f"{indent}{k}:")
            _print_summary(v, indent + "  ")
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            print(f"{indent}{k}:")
            for item in v:
                _print_summary(item, indent + "  - ")
        else:
            print(f"{indent}{k}: {v}")


# ----------------------------------------------------------------------------
# suites


def _immersion_section(fam):
    rep = verify_immersion(fam.wd, fam.sampler)
    return rep.passed, rep.to_dict()


def _periods_section(fam, cfg):
    if not fam.generators:
        return True, {"generators": 0, "real_periods": [], "tolerance": PERIOD_TOL, "passed": True}
    per = real_periods(fam.wd, fam.generators, cfg)
    ok = periods_vanish(per, PERIOD_TOL)
    return ok, {"generators": len(per), "real_periods": [list(map(float, p)) for p in per],
                "tolerance": PERIOD_TOL, "passed": bool(ok)}


def _torus_section(fam, cfg):
    tp = torus_period_b(fam.spec.params["a"], cfg, full=True)
    ok = tp.residual_gamma1 < PERIOD_TOL and tp.real_period_gamma2 < PERIOD_TOL
    return ok, {"a": tp.a, "b": tp.b, "b_used": fam.spec.params["b"],
                "residual_gamma1": tp.residual_gamma1, "residual_gamma2": tp.real_period_gamma2,
                "ratio_displayed": tp.ratio_displayed, "ratio_reciprocal": tp.ratio_reciprocal,
                "matches": tp.matches, "tolerance": PERIOD_TOL, "passed": bool(ok)}


def _qc_section(fam):
    out = []
    for chart in fam.end_charts:
        shells = [shell_points(chart, r * chart.radius) for r in QC_SHELLS]
        try:
            q = qc_indices(fam.wd, shells)
            out.append({"end": chart.label, "radii": [r * chart.radius for r in QC_SHELLS], **q.to_dict()})
        except HarmonicaError as exc:
            out.append({"end": chart.label, "error": str(exc)})
    return out


def _ends_section(fam, cfg):
    reports = []
    for chart in fam.end_charts:
        rep = analyze_end(fam.wd, chart, fam.closed_form, cfg=cfg)
        reports.append(rep.to_dict())
    out = {"ends": reports}
    if fam.generators:
        fl = flux(fam.wd, fam.generators, cfg)
        out["flux"] = fl.to_dict()
    return True, out


def _curvature_section(fam, ends, cfg):
    out = {}
    try:
        tc = total_curvature(fam.wd, cfg=cfg)
    except TailNotDecaying as exc:
        return False, {"finite_total_curvature": False, "reason": str(exc)}
    except DegeneratePoint as exc:
        # the density reached points where the normal is not resolvable in double precision
        return False, {"finite_total_curvature": False, "reason": f"curvature density unresolvable: {exc}"}
    out["total_curvature"] = {**tc.to_dict(), "over_minus_4pi": tc.value / (-4 * np.pi),
                              "tolerance": max(cfg.abs_tol, cfg.rel_tol * abs(tc.value))}
    out["finite_total_curvature"] = True
    ok = True
    try:
        d, res, _ = gauss_degree(fam.wd, cfg=cfg, total=tc)
        out["gauss_degree"] = {"degree": d, "residual": res, "tolerance": 0.05}
    except NonIntegerDegree as exc:
        out["gauss_degree"] = {"error": str(exc), "tolerance": 0.05}
        return False, out
    if ends is not None:
        weights = [e["weight"] for e in ends]
        if all(w is not None and w >= 1 for w in weights):
            jm = jorge_meeks_check(fam.genus, weights, d)
            out["jorge_meeks"] = {"genus": fam.genus, "weights": weights, "residual": jm, "tolerance": 0}
            ok = ok and jm == 0
    return ok, out


SUITES = ("identities", "ends", "curvature", "all")


def build_report(spec, suite, cfg, seed=0, n_points=10000):
    """VerificationReport dictionary and overall pass flag."""
    t0 = time.perf_counter()
    timings = {}
    fam = make_family(spec, cfg, check=False)
    report = {"family": fam.spec.to_json(), "valid": fam.valid, "reason": fam.reason}
    ok = True
    t = time.perf_counter()
    imm_ok, report["immersion"] = _immersion_section(fam)
    timings["immersion"] = time.perf_counter() - t
    ok &= imm_ok
    if not imm_ok:
        report["passed"] = False
        report["timings"] = {**timings, "total": time.perf_counter() - t0}
        return report, False
    t = time.perf_counter()
    per_ok, report["periods"] = _periods_section(fam, cfg)
    ok &= per_ok
    if fam.spec.family == "torus":
        tor_ok, report["torus_period"] = _torus_section(fam, cfg)
        ok &= tor_ok
    timings["periods"] = time.perf_counter() - t
    if suite in ("identities", "all"):
        t = time.perf_counter()
        idr = identity_suite(fam.wd, n=n_points, seed=seed)
        report["identities"] = {**idr.to_dict(), "passed": idr.ok}
        report["qc_indices"] = _qc_section(fam)
        ok &= idr.ok
        timings["identities"] = time.perf_counter() - t
    ends = None
    if suite in ("ends", "curvature", "all"):
        t = time.perf_counter()
        _, sec = _ends_section(fam, cfg)
        ends = sec["ends"]
        if suite != "curvature":
            report.update(sec)
        timings["ends"] = time.perf_counter() - t
    if suite in ("curvature", "all"):
        t = time.perf_counter()
        cur_ok, report["curvature"] = _curvature_section(fam, ends, cfg)
        ok &= cur_ok
        timings["curvature"] = time.perf_counter() - t
    report["passed"] = bool(ok)
    report["timings"] = {**timings, "total": time.perf_counter() - t0}
    return report, bool(ok)


# ----------------------------------------------------------------------------
# commands


def _default_grid(fam, grid, rho):
    n_rho, n_theta = grid or (128, 128)
    name = fam.spec.family
    if name == "flujo":
        g = flujo_grid(n_rho, n_theta)
        return g if rho is None else LogPolarGrid(rho[0], rho[1], g.n_rho, n_theta, g.moebius, g.theta_offset)
    if name == "torus":
        return torus_grid(fam.spec.params["a"], n_rho, n_theta)
    if rho is None:
        rho = {"helicoid_y2": (np.log(0.02), np.log(0.95)), "plane": (-2.0, 1.5), "graph": (-2.0, 1.0),
               "helicoid_y1": (-2.0, 1.5)}.get(name, (-3.0, 3.0))
    return LogPolarGrid(rho[0], rho[1], n_rho, n_theta)


def cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    cfg = _config(args)
    fam = make_family(spec, cfg)
    grid = _default_grid(fam, args.grid, args.rho)
    mesh = sample_mesh(fam, grid, fields=not args.no_fields)
    out = Path(args.out)
    export_mesh(mesh, out, args.format)
    info = {"family": fam.spec.to_json(), "out": str(out), "vertices": len(mesh.vertices),
            "faces": len(mesh.faces), "fields": list(mesh.vertex_fields), "area": mesh.area()}
    if args.json:
        _emit(info, True)
    else:
        print(f"wrote {out} ({len(mesh.vertices)} vertices, {len(mesh.faces)} faces)")
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = _spec_from_args(args)
    report, ok = build_report(spec, args.suite, _config(args), args.seed, args.n_points)
    _emit(report, args.json, args.out)
    return EXIT_OK if ok else EXIT_SUITE


def cmd_report(args) -> int:
    spec = _spec_from_args(args)
    report, _ = build_report(spec, "all", _config(args), args.seed, args.n_points)
    _emit(report, True, args.out)
    return EXIT_OK


def _trend(bs):
    d = np.diff(bs)
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    return "non-monotone"


def cmd_periods(args) -> int:
    if args.family not in (None, "torus"):
        raise InvalidParameters("periods is defined for the torus family only")
    if args.sweep is not None:
        lo, hi, n = args.sweep
        if n < 1:
            raise InvalidParameters("sweep needs n >= 1")
        values = np.linspace(lo, hi, n)
    elif args.a is not None:
        values = [args.a]
    else:
        raise InvalidParameters("give --a or --sweep")
    for a in values:
        if not 0 < a < 1:
            raise InvalidParameters(f"a = {a} must lie in (0, 1)")
    cfg = _config(args)
    rows = []
    for a in values:
        tp = torus_period_b(float(a), cfg, full=True)
        rows.append({"a": tp.a, "b": tp.b, "residual_gamma1": tp.residual_gamma1,
                     "residual_gamma2": tp.real_period_gamma2, "ratio_displayed": tp.ratio_displayed,
                     "ratio_reciprocal": tp.ratio_reciprocal, "matches": tp.matches,
                     "in_range": bool(-2 < tp.b < 0)})
    result = {"rows": rows, "tolerance": PERIOD_TOL}
    if len(rows) > 1:
        result["trend"] = _trend([r["b"] for r in rows])
    if args.json:
        _emit(result, True)
    else:
        print(f"{'a':>8} {'b(a)':>20} {'res_g1':>10} {'res_g2':>10} {'-2*I1/I0':>14} {'-2*I0/I1':>14}  match")
        for r in rows:
            print(f"{r['a']:8.4f} {r['b']:20.15f} {r['residual_gamma1']:10.2e} {r['residual_gamma2']:10.2e} "
                  f"{r['ratio_displayed']:14.8f} {r['ratio_reciprocal']:14.8f}  {r['matches']}")
        if "trend" in result:
            print(f"trend: {result['trend']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harmonica", description="Harmonic immersions from Weierstrass data")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a family into a mesh file")
    _add_family_args(g)
    _add_common(g)
    g.add_argument("--grid", type=parse_grid, help="NxM = rho count x theta count")
    g.add_argument("--rho", type=parse_range, help="lo:hi rho range")
    g.add_argument("--out", required=True)
    g.add_argument("--format", choices=("obj", "ply", "csv"))
    g.add_argument("--no-fields", action="store_true")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="run verification suites")
    _add_family_args(v)
    _add_common(v)
    v.add_argument("--suite", choices=SUITES, default="all")
    v.add_argument("--n-points", type=int, default=10000)
    v.add_argument("--out", help="also write the JSON report here")
    v.set_defaults(func=cmd_verify)

    p = sub.add_parser("periods", help="torus period solver")
    p.add_argument("--family", default="torus")
    p.add_argument("--a", type=float)
    p.add_argument("--sweep", type=parse_sweep, help="lo:hi:n grid of a values")
    _add_common(p)
    p.set_defaults(func=cmd_periods)

    r = sub.add_parser("report", help="full JSON report")
    _add_family_args(r)
    _add_common(r)
    r.add_argument("--n-points", type=int, default=10000)
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return parser


def _threads():
    """Cap BLAS/OpenMP threads from HARMONICA_THREADS (validated)."""
    val = os.environ.get("HARMONICA_THREADS")
    if val is None:
        return None
    try:
        n = int(val)
    except ValueError:
        raise InvalidParameters(f"HARMONICA_THREADS must be an integer, got {val!r}")
    if n < 1:
        raise InvalidParameters("HARMONICA_THREADS must be >= 1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    return n


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARAMS if exc.code not in (0, None) else EXIT_OK
    try:
        _threads()
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return args.func(args)
    except (MeshIOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NonConvergent, RootNotBracketed) as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return EXIT_QUAD
    except (InvalidParameters, ValueError, HarmonicaError) as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
