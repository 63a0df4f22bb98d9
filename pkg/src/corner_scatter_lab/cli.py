"""Command-line entry point: ``corner-scatter-lab <subcommand> ...``.

Exit status: 0 when every asserted contract holds, 1 on usage errors, 2 on a
contract violation (a ``failure.json`` record is written to ``--out``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, acceptance, cgo, corner2d, corner3d, fourier, laplace, scatter2d
from .errors import LabError
from .geometry import Cone3D, HarmonicPolynomial2D, HarmonicPolynomial3D, Sector2D
from .records import ResultRecord, dumps


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


class Outcome:
    """Files to write plus the list of asserted checks."""

    def __init__(self):
        self.json: dict[str, object] = {}
        self.csv: dict[str, tuple[list, list]] = {}
        self.checks: list[dict] = []
        self.plots: list = []

    def check(self, name: str, passed: bool, **detail):
        self.checks.append({"check": name, "passed": bool(passed), **detail})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


# ---------------------------------------------------------------- argument helpers

def parse_range(text: str) -> np.ndarray:
    """``a:b:step`` (inclusive linear), ``a:b:logN`` (N log-spaced points) or a comma list."""
    try:
        if ":" in text:
            a, b, step = text.split(":")
            a, b = float(a), float(b)
            if step.startswith("log"):
                return np.geomspace(a, b, int(step[3:]))
            count = int(round((b - a) / float(step))) + 1
            return np.linspace(a, b, count)
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}") from exc


def parse_complex_list(text: str) -> list[complex]:
    try:
        return [complex(v.strip().replace(" ", "")) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad complex list {text!r}") from exc


def angle(args, value: float) -> float:
    return math.radians(value) if args.degrees else value


# ---------------------------------------------------------------- subcommands

def run_corner2d(args) -> Outcome:
    out = Outcome()
    rows, certs = [], []
    for N in range(1, args.nmax + 1):
        cert = corner2d.verify_no_roots(N, args.eps, args.grid)
        certs.append(cert)
        for sign in corner2d.SIGNS:
            rows.append([N, sign, cert.min_abs_residual[sign], cert.certified_lower_bound[sign],
                         cert.min_abs_determinant])
    out.check("corner2d certificates", all(c.passed for c in certs), nmax=args.nmax)
    out.json["corner2d_certificates.json"] = ResultRecord(
        "corner2d", {"nmax": args.nmax, "epsilon": args.eps, "grid": args.grid},
        {"certificates": certs}, {}, {"method": "three-part proof plus Lipschitz-certified scan"})
    out.csv["corner2d_table.csv"] = (["N", "sign", "min_abs_residual", "certified_lower_bound",
                                      "min_abs_determinant"], rows)
    return out


def run_corner3d(args) -> Outcome:
    out = Outcome()
    report = corner3d.find_exceptional_angles(args.N, refine_tol=args.tol, n_grid=args.grid)
    curves = report.pop("curves")
    header = ["gamma"] + [f"abs_f{j}" for j in range(args.N + 1)]
    out.csv[f"corner3d_curves_N{args.N}.csv"] = (header, np.column_stack([curves[h] for h in header]).tolist())
    rng = np.random.default_rng(args.seed)
    brackets = [c.bracket for c in report["candidates"]]
    gammas = []
    while len(gammas) < args.certify:
        g = float(rng.uniform(0.05, corner3d.GAMMA_MAX))
        if all(not (a <= g <= b) for a, b in brackets):
            gammas.append(g)
    cert = corner3d.certify_at(args.N, gammas)
    report["certified_at"] = cert
    out.check("corner3d non-vanishing at random angles", all(c["certified"] for c in cert))
    out.json["corner3d_exceptional.json"] = ResultRecord(
        "corner3d", {"N": args.N, "grid": args.grid, "tol": args.tol, "seed": args.seed},
        report, {}, {"label": "ESTIMATE: candidates are bracketed numerical zeros, not proofs"})
    if args.plot:
        out.plots.append(("corner3d_curves.svg", "gamma", "|f_j|", [
            (curves["gamma"], curves[f"abs_f{j}"], f"j={j}") for j in range(args.N + 1)], "log"))
    return out


def _cone_and_polynomial(args):
    coeffs = parse_complex_list(args.coeffs) if args.coeffs else None
    if args.dim == 2:
        cone = Sector2D(angle(args, args.angle))
        a, b = (coeffs + [0j, 0j])[:2] if coeffs else (1.0, 0.0)
        return cone, HarmonicPolynomial2D(args.degree, a, b)
    cone = Cone3D(angle(args, args.angle))
    coeffs = coeffs or [0j] * args.degree + [1.0] + [0j] * args.degree
    return cone, HarmonicPolynomial3D(args.degree, tuple(coeffs))


def run_laplace(args) -> Outcome:
    out = Outcome()
    if args.action == "eval":
        cone, H = _cone_and_polynomial(args)
        rho = np.array(parse_complex_list(args.rho))
        d = laplace.laplace_direct(cone, H, rho)
        p = laplace.polar_reduce(cone, H, rho)
        gap = abs(d.value - p.value)
        out.check("direct and polar routes agree", gap <= d.error_estimate + p.error_estimate, gap=gap)
        gamma_factor = math.factorial(H.N + cone.dim - 1)
        recs = [{"cone": cone, "H": H, **e.to_dict(), "cap_normalized_abs": abs(e.value) / gamma_factor}
                for e in (d, p)]
        out.json["laplace_eval.json"] = ResultRecord("laplace-cone", {"cone": cone, "H": H, "rho": rho},
                                                     {"evaluations": recs}, {"gap": gap}, {})
    else:
        c5 = acceptance.criterion_5(args.configs, args.seed)
        c6 = acceptance.criterion_6(max(1, args.configs // 5), args.seed + 1)
        out.check("homogeneity law", c5["passed"])
        out.check("cross-method agreement and golden values", c6["passed"])
        out.json["laplace_check.json"] = ResultRecord("laplace-cone", {"configs": args.configs, "seed": args.seed},
                                                      {"homogeneity": c5, "cross_method": c6}, {}, {})
    return out


SHAPES = {"cone": "cone-truncated", "cone-truncated": "cone-truncated", "cylinder": "cylinder",
          "cone-weighted": "cone-weighted"}


def run_fourier(args) -> Outcome:
    out = Outcome()
    if args.shape not in SHAPES:
        raise UsageError(f"unknown shape {args.shape!r}")
    taus = [round(float(t), 12) for t in parse_range(args.tau)]
    grids = [int(g) for g in parse_range(args.grids)]
    trend = fourier.h_tau_norm_trend(fourier.Shape2D(SHAPES[args.shape], angle(args, args.angle)), taus, grids)
    fits = fourier.cylinder_decay_fits()
    dft = fourier.dft_disk_check()
    out.check("disk envelope exponent -1.5 +- 0.1", abs(fits["radial"] + 1.5) <= 0.1, value=fits["radial"])
    out.check("interval envelope exponent -1.0 +- 0.05", abs(fits["axial"] + 1.0) <= 0.05, value=fits["axial"])
    out.check("closed form vs DFT within 2%", dft["relative_error"] <= 0.02, value=dft["relative_error"])
    out.csv["fourier_trend.csv"] = (["grid", "tau", "value"],
                                    [[r["grid"], r["tau"], r["value"]] for r in trend.table])
    out.json["fourier_decay.json"] = ResultRecord(
        "fourier-sobolev", {"shape": SHAPES[args.shape], "taus": taus, "grids": grids},
        {"trend": trend, "decay_fits": fits, "dft_check": dft,
         "dyadic": fourier.dyadic_terms(2.0, angle(args, args.angle))}, {}, {})
    if args.plot:
        series = []
        for t in taus:
            ys = [r["value"] for r in trend.table if r["tau"] == t]
            series.append((grids, ys, f"tau={t:g}"))
        out.plots.append(("fourier_trend.svg", "grid", "discrete H^tau sum", series, "log"))
    return out


def run_cgo(args) -> Outcome:
    out = Outcome()
    V = cgo.sector_potential(args.half_width, args.res, angle(args, args.angle))
    study = cgo.decay_study(V, parse_range(args.retzeta), args.lam)
    above = [w for t, w in zip(study.re_zeta, study.max_contraction)
             if study.threshold is not None and t >= study.threshold]
    out.check("slope <= -1/3 - 0.05", study.slope <= -1.0 / 3.0 - 0.05, slope=study.slope)
    out.check("contraction <= 0.6 above threshold", study.threshold is not None and all(w <= 0.6 for w in above))
    out.json["cgo_decay.json"] = ResultRecord(
        "cgo", {"retzeta": args.retzeta, "lambda": args.lam, "res": args.res, "half_width": args.half_width},
        {"slopes": [study.slope], "delta_hat": study.delta_hat, "residuals": study.residuals,
         "iterations": study.iterations, "study": study}, {}, {})
    out.csv["cgo_decay.csv"] = (["re_zeta", "l6_norm", "iterations", "residual", "max_contraction"],
                                [list(r) for r in zip(study.re_zeta, study.norms, study.iterations,
                                                      study.residuals, study.max_contraction)])
    if args.plot:
        out.plots.append(("cgo_decay.svg", "|Re zeta|", "||psi||_6", [(study.re_zeta, study.norms, "psi")], "loglog"))
    return out


def run_scatter(args) -> Outcome:
    out = Outcome()
    ks = np.linspace(args.kmin, args.kmax, args.steps)
    n = scatter2d.grid_size_for(args.kmax, args.contrast, args.radius)
    if args.potential == "sector":
        pot = scatter2d.Potential2D.sector(angle(args, args.angle), args.contrast, args.radius, n)
    elif args.potential == "disk":
        pot = scatter2d.Potential2D.disk(args.contrast, args.radius, n)
    else:
        raise UsageError(f"unknown potential {args.potential!r}")
    scan = scatter2d.nonscattering_scan(pot, ks, args.ndir, args.convention)
    values = {"scan": scan}
    if args.potential == "disk" and args.convention == "acoustic":
        roots = scatter2d.disk_roots_all_orders(args.contrast, args.radius,
                                                (0.5 * args.kmin, args.kmax + 0.5 / args.radius))
        matches = scatter2d.match_dips_to_roots(scan.dips, roots) if roots else []
        values["roots"] = [{"order": o, "k": r} for o, r in roots]
        values["matches"] = matches
        out.check("every dip within 0.05 of a transmission eigenvalue", all(m["matched"] for m in matches),
                  dips=len(matches))
    out.json[f"scatter_{args.potential}.json"] = ResultRecord(
        "scatter2d", {"potential": pot, "kmin": args.kmin, "kmax": args.kmax, "steps": args.steps,
                      "ndir": args.ndir, "convention": args.convention}, values, {},
        {"metric": "Born-normalized sigma_min; dips use the comparative surrogate"})
    out.csv[f"scatter_{args.potential}.csv"] = (["k", "sigma_min"], [list(r) for r in zip(scan.ks, scan.sigma_min)])
    if args.plot:
        out.plots.append((f"scatter_{args.potential}.svg", "k", "sigma_min", [(scan.ks, scan.sigma_min, args.potential)], "log"))
    return out


def run_all(args) -> Outcome:
    out = Outcome()
    summary = []
    for cid, fn in acceptance.CRITERIA.items():
        kwargs = acceptance.QUICK.get(cid, {}) if args.quick else {}
        t0 = time.perf_counter()
        try:
            res = fn(**kwargs)
        except LabError as exc:
            res = {"id": cid, "name": fn.__name__, "passed": False, "error": f"{type(exc).__name__}: {exc}"}
        elapsed = time.perf_counter() - t0
        budget = acceptance.RUNTIME_BUDGET[cid]
        print(f"{'PASS' if res['passed'] else 'FAIL'} criterion {cid:2d} {res['name']}", flush=True)
        print(f"  criterion {cid} runtime {elapsed:.1f} s (budget {budget:.0f} s)", file=sys.stderr, flush=True)
        out.json[f"criterion_{cid:02d}.json"] = ResultRecord("acceptance", {"criterion": cid, **kwargs}, res, {}, {})
        out.check(f"criterion {cid}: {res['name']}", res["passed"])
        summary.append({"id": cid, "name": res["name"], "passed": res["passed"]})
    out.json["acceptance_summary.json"] = ResultRecord("acceptance", {"quick": args.quick},
                                                       {"criteria": summary}, {}, {})
    return out


# ---------------------------------------------------------------- parser

def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--config", help="JSON file presetting any flag")
    common.add_argument("--degrees", action="store_true", help="read angle flags in degrees")
    common.add_argument("--plot", action="store_true", help="also write SVG plots")

    p = Parser(prog="corner-scatter-lab", description="Corner scattering verification toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    c2 = sub.add_parser("corner2d", parents=[common], help="2D determinant certificates")
    c2.add_argument("action", choices=["verify"])
    c2.add_argument("--nmax", type=int, default=20)
    c2.add_argument("--eps", type=float, default=1e-3)
    c2.add_argument("--grid", type=int, default=100_000)
    c2.set_defaults(func=run_corner2d)

    c3 = sub.add_parser("corner3d", parents=[common], help="3D exceptional-angle report")
    c3.add_argument("action", choices=["exceptional"])
    c3.add_argument("--N", type=int, default=3)
    c3.add_argument("--grid", type=int, default=2000)
    c3.add_argument("--tol", type=float, default=1e-10)
    c3.add_argument("--certify", type=int, default=5)
    c3.add_argument("--seed", type=int, default=0)
    c3.set_defaults(func=run_corner3d)

    la = sub.add_parser("laplace", parents=[common], help="cone Laplace transforms")
    la.add_argument("action", choices=["eval", "check"])
    la.add_argument("--dim", type=int, choices=[2, 3], default=2)
    la.add_argument("--angle", type=float, default=1.0, help="2D opening angle or 3D cap half-angle")
    la.add_argument("--degree", type=int, default=0)
    la.add_argument("--coeffs", help="comma list: (a,b) in 2D, a_-N..a_N in 3D")
    la.add_argument("--rho", default="1,0", help="comma list of complex components")
    la.add_argument("--configs", type=int, default=100)
    la.add_argument("--seed", type=int, default=5)
    la.set_defaults(func=run_laplace)

    fo = sub.add_parser("fourier", parents=[common], help="Fourier decay and Sobolev trends")
    fo.add_argument("action", choices=["decay"])
    fo.add_argument("--shape", default="cone")
    fo.add_argument("--angle", type=float, default=1.0)
    fo.add_argument("--tau", default="0.0:1.0:0.1")
    fo.add_argument("--grids", default="128,256,512,1024")
    fo.set_defaults(func=run_fourier)

    cg = sub.add_parser("cgo", parents=[common], help="CGO remainder decay study")
    cg.add_argument("action", choices=["decay"])
    cg.add_argument("--retzeta", default="10:320:log8")
    cg.add_argument("--lambda", dest="lam", type=float, default=1.0)
    cg.add_argument("--res", type=int, default=1024)
    cg.add_argument("--half-width", dest="half_width", type=float, default=1.5)
    cg.add_argument("--angle", type=float, default=1.0)
    cg.set_defaults(func=run_cgo)

    sc = sub.add_parser("scatter", parents=[common], help="non-scattering wavenumber scans")
    sc.add_argument("action", choices=["scan"])
    sc.add_argument("--potential", choices=["sector", "disk"], default="sector")
    sc.add_argument("--angle", type=float, default=1.0)
    sc.add_argument("--contrast", type=float, default=3.0)
    sc.add_argument("--radius", type=float, default=1.0)
    sc.add_argument("--kmin", type=float, default=1.0)
    sc.add_argument("--kmax", type=float, default=8.0)
    sc.add_argument("--steps", type=int, default=200)
    sc.add_argument("--ndir", type=int, default=32)
    sc.add_argument("--convention", choices=["acoustic", "quantum"], default="acoustic")
    sc.set_defaults(func=run_scatter)

    al = sub.add_parser("all", parents=[common], help="run the acceptance suite")
    al.add_argument("--quick", action="store_true")
    al.set_defaults(func=run_all)
    return p


def _apply_config(parser: Parser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        preset = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if not isinstance(preset, dict):
        parser.error("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(preset) - known)
    if unknown:
        parser.error(f"unknown config keys: {', '.join(unknown)}")
    sub.set_defaults(**preset)
    return parser.parse_args(argv)


def _write_plot(path: Path, figure):
    import matplotlib
    matplotlib.use("svg")
    matplotlib.rcParams["svg.hashsalt"] = "corner-scatter-lab"
    import matplotlib.pyplot as plt

    _, xlabel, ylabel, series, scale = figure
    fig, ax = plt.subplots(figsize=(6, 4))
    for xs, ys, label in series:
        ax.plot(xs, ys, label=label)
    if scale in ("log", "loglog"):
        ax.set_yscale("log")
    if scale == "loglog":
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_outcome(out: Outcome, directory: Path, plot: bool):
    directory.mkdir(parents=True, exist_ok=True)
    for name, obj in out.json.items():
        (directory / name).write_text(dumps(obj))
    for name, (header, rows) in out.csv.items():
        with open(directory / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    if plot:
        for figure in out.plots:
            try:
                _write_plot(directory / figure[0], figure)
            except ImportError:
                print("matplotlib is not installed; skipping plots", file=sys.stderr)
                break


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out_dir = Path(args.out)
    try:
        out = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except LabError as exc:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "failure.json").write_text(dumps(ResultRecord(
            "cli", {"argv": argv}, {"error": type(exc).__name__, "message": str(exc)}, {}, {})))
        print(f"FAIL {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    write_outcome(out, out_dir, args.plot)
    if args.command != "all":
        for c in out.checks:
            print(f"{'PASS' if c['passed'] else 'FAIL'} {c['check']}")
    if not out.passed:
        failed = [c for c in out.checks if not c["passed"]]
        (out_dir / "failure.json").write_text(dumps(ResultRecord(
            "cli", {"argv": argv}, {"failed_checks": failed}, {}, {})))
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
