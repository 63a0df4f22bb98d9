"""Acceptance pipelines shared by the CLI ``all`` command and the test suite.

Every criterion returns a dict with ``id``, ``name``, ``passed``, the measured
quantities and the pinned thresholds. Wall-clock time is kept out of the
returned dict so that records stay byte-identical across runs; callers time
the criteria themselves.
"""

from __future__ import annotations

import math

import numpy as np

from . import cgo, corner2d, corner3d, fourier, laplace, scatter2d
from .errors import LabError
from .geometry import (Cone3D, HarmonicPolynomial2D, HarmonicPolynomial3D, Sector2D, WLambdaPoint,
                       random_orthonormal_pair, rho_from)

RUNTIME_BUDGET = {1: 10.0, 2: 5.0, 3: 30.0, 4: 30.0, 5: 60.0, 6: 30.0, 7: 60.0, 8: 120.0,
                  9: 300.0, 10: 600.0, 11: 300.0, 12: 1500.0}


def _result(cid: int, name: str, passed: bool, **measured) -> dict:
    return {"id": cid, "name": name, "passed": bool(passed), **measured}


# ---------------------------------------------------------------- 2D certificate

def criterion_1(nmax: int = 20, epsilon: float = 1e-3, grid: int = 100_000) -> dict:
    certs, ok = [], True
    for N in range(1, nmax + 1):
        try:
            certs.append(corner2d.verify_no_roots(N, epsilon, grid))
        except LabError as exc:
            ok = False
            certs.append({"N": N, "passed": False, "error": str(exc)})
    lower = min(min(c.certified_lower_bound.values()) for c in certs if hasattr(c, "certified_lower_bound"))
    return _result(1, "2D non-vanishing certificate", ok and lower > 0, nmax=nmax, epsilon=epsilon,
                   grid=grid, min_certified_lower_bound=lower, certificates=certs)


# ---------------------------------------------------------------- f_j oracles

def f0_closed_form(gamma):
    return math.pi * np.cos(gamma) * np.sin(gamma) ** 2


def criterion_2(count: int = 50, tol: float = 1e-8) -> dict:
    gammas = np.linspace(0.02, 1.5, count)
    errs = [abs(corner3d.f_j(0, 0, float(g)).value - f0_closed_form(g)) for g in gammas]
    worst = max(errs)
    return _result(2, "closed-form f_0", worst <= tol, samples=count, max_abs_error=worst, tolerance=tol)


def richardson_derivative(N: int, j: int, gamma: float, h: float = 1e-3) -> complex:
    """(4 D(h/2) - D(h)) / 3 with D the central difference of f_j."""
    def d(s):
        return (corner3d.f_j(N, j, gamma + s, 1e-14).value - corner3d.f_j(N, j, gamma - s, 1e-14).value) / (2 * s)
    return (4.0 * d(0.5 * h) - d(h)) / 3.0


DERIVATIVE_GAMMAS = tuple(np.linspace(0.2, 1.4, 10))


def criterion_3(nmax: int = 3, gammas=DERIVATIVE_GAMMAS, tol: float = 1e-6) -> dict:
    worst, rows = 0.0, []
    for N in range(nmax + 1):
        for j in range(-N, N + 1):
            exact = corner3d.f_j_prime(N, j, np.asarray(gammas))
            for g, e in zip(gammas, exact):
                fd = richardson_derivative(N, j, float(g))
                rel = abs(fd - e) / abs(e)
                worst = max(worst, rel)
                rows.append({"N": N, "j": j, "gamma": float(g), "closed_form": complex(e),
                             "finite_difference": fd, "relative_error": rel})
    return _result(3, "derivative formula", worst <= tol, max_relative_error=worst, tolerance=tol, rows=rows)


def criterion_4(nmax: int = 3, tol: float = 0.01) -> dict:
    rows, ok = [], True
    for N in range(1, nmax + 1):
        for j in range(1, N + 1):
            r = corner3d.taylor_nonvanishing_check(N, j)
            rows.append(r)
            ok = ok and r["relative_difference"] <= tol and abs(r["finite_difference"]) > 0
    return _result(4, "nu0 resonance", ok, tolerance=tol, rows=rows)


# ---------------------------------------------------------------- Laplace transform

def random_configuration(rng: np.random.Generator, dim: int | None = None, max_degree: int = 3):
    """(cone, H, WLambdaPoint, t) with omega drawn inside the admissible set."""
    dim = dim or int(rng.choice([2, 3]))
    N = int(rng.integers(0, max_degree + 1))
    if dim == 2:
        axis_angle = rng.uniform(0.0, 2.0 * math.pi)
        cone = Sector2D(float(rng.uniform(0.4, 2.4)), (math.cos(axis_angle), math.sin(axis_angle)))
        a, b = (complex(*rng.standard_normal(2)) for _ in range(2))
        H = HarmonicPolynomial2D(N, a, b)
        half = 0.5 * cone.opening_angle
    else:
        cone = Cone3D(float(rng.uniform(0.2, 1.1)))
        H = HarmonicPolynomial3D(N, tuple(complex(*rng.standard_normal(2)) for _ in range(2 * N + 1)))
        half = cone.cap_half_angle
    limit = math.acos(laplace.MARGIN_MIN) - half
    tilt = float(rng.uniform(-0.9, 0.9)) * max(limit, 0.0)
    if dim == 2:
        base = cone.axis_angle + tilt
        omega = np.array([math.cos(base), math.sin(base)])
    else:
        az = rng.uniform(0.0, 2.0 * math.pi)
        omega = np.array([math.sin(tilt) * math.cos(az), math.sin(tilt) * math.sin(az), math.cos(tilt)])
    perp = random_orthonormal_pair(rng, omega)
    point = WLambdaPoint(float(rng.uniform(0.5, 4.0)), tuple(omega), tuple(perp), float(rng.uniform(0.0, 2.0)))
    t = float(rng.uniform(0.3, 3.0))
    return cone, H, point, t


def criterion_5(count: int = 100, seed: int = 5) -> dict:
    rng = np.random.default_rng(seed)
    rows, ok, skipped = [], True, 0
    while len(rows) < count:
        cone, H, point, t = random_configuration(rng)
        try:
            r = laplace.homogeneity_check(cone, H, point, t)
        except ArithmeticError:
            # |F| at the quadrature noise level: relative discrepancy undefined, draw again
            skipped += 1
            continue
        rows.append({"cone": cone, "H": H, "point": point, "t": t, "discrepancy": r["discrepancy"],
                     "budget": r["budget"], "passes": r["passes"]})
        ok = ok and r["passes"]
    worst = max(r["discrepancy"] / r["budget"] for r in rows)
    return _result(5, "homogeneity law", ok, configurations=len(rows), skipped_below_noise=skipped,
                   max_discrepancy_over_budget=worst, factor=10.0, rows=rows)


def golden_values() -> list[dict]:
    out = []
    for L in (0.5, 1.0, 2.0, 3.0):
        cone = Sector2D(L)
        H = HarmonicPolynomial2D(0, 1.0)
        d = laplace.laplace_direct(cone, H, np.array([1.0, 0.0]))
        p = laplace.polar_reduce(cone, H, np.array([1.0, 0.0]))
        exact = 2.0 * math.tan(0.5 * L)
        out.append({"dim": 2, "angle": L, "exact": exact, "direct": d.value, "polar": p.value,
                    "direct_error": abs(d.value - exact), "direct_estimate": d.error_estimate,
                    "polar_error": abs(p.value - exact), "polar_estimate": p.error_estimate,
                    "passes": abs(d.value - exact) <= d.error_estimate and abs(p.value - exact) <= p.error_estimate})
    for g in (0.3, 0.7, 1.1):
        cone = Cone3D(g)
        H = HarmonicPolynomial3D(0, (1.0,))
        d = laplace.laplace_direct(cone, H, np.array([0.0, 0.0, 1.0]))
        p = laplace.polar_reduce(cone, H, np.array([0.0, 0.0, 1.0]))
        exact = 2.0 * math.pi * math.tan(g) ** 2
        out.append({"dim": 3, "angle": g, "exact": exact, "direct": d.value, "polar": p.value,
                    "direct_error": abs(d.value - exact), "direct_estimate": d.error_estimate,
                    "polar_error": abs(p.value - exact), "polar_estimate": p.error_estimate,
                    "passes": abs(d.value - exact) <= d.error_estimate and abs(p.value - exact) <= p.error_estimate})
    return out


def criterion_6(count: int = 20, seed: int = 6) -> dict:
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(count):
        cone, H, point, _ = random_configuration(rng)
        rho = rho_from(point)
        d = laplace.laplace_direct(cone, H, rho)
        p = laplace.polar_reduce(cone, H, rho)
        gap = abs(d.value - p.value)
        rows.append({"cone": cone, "H": H, "rho": rho, "direct": d.value, "polar": p.value, "gap": gap,
                     "budget": d.error_estimate + p.error_estimate,
                     "passes": gap <= d.error_estimate + p.error_estimate})
    gold = golden_values()
    ok = all(r["passes"] for r in rows) and all(g["passes"] for g in gold)
    return _result(6, "cross-method Laplace agreement", ok, configurations=rows, golden=gold)


# ---------------------------------------------------------------- Fourier / Sobolev

def criterion_7() -> dict:
    fits = fourier.cylinder_decay_fits()
    dft = fourier.dft_disk_check()
    ok = (abs(fits["radial"] + 1.5) <= 0.1 and abs(fits["axial"] + 1.0) <= 0.05
          and dft["relative_error"] <= 0.02)
    return _result(7, "Fourier decay", ok, radial_slope=fits["radial"], radial_target=-1.5, radial_tol=0.1,
                   interval_slope=fits["axial"], interval_target=-1.0, interval_tol=0.05,
                   dft_relative_error=dft["relative_error"], dft_tol=0.02)


def criterion_8(grids=(128, 256, 512, 1024)) -> dict:
    trend = fourier.h_tau_norm_trend("cone-truncated", taus=(0.4, 0.75), grids=grids)
    ok = trend.cauchy["0.4"] <= 0.05 and trend.growth["0.75"] > 1.15
    return _result(8, "Sobolev trend", ok, cauchy_tau_0_4=trend.cauchy["0.4"], stable_tol=0.05,
                   growth_tau_0_75=trend.growth["0.75"], divergent_ratio=1.15, trend=trend)


# ---------------------------------------------------------------- CGO

def criterion_9(resolution: int = 1024, re_max: float = 320.0, count: int = 8) -> dict:
    half_width = 1.5
    V = cgo.sector_potential(half_width, resolution)
    study = cgo.decay_study(V, np.geomspace(10.0, re_max, count))
    contraction_ok = study.threshold is not None and all(
        w <= 0.6 for t, w in zip(study.re_zeta, study.max_contraction) if t >= study.threshold)
    ok = study.slope <= -1.0 / 3.0 - 0.05 and contraction_ok
    return _result(9, "CGO decay", ok, slope=study.slope, slope_bound=-1.0 / 3.0 - 0.05,
                   contraction_bound=0.6, resolution=resolution, study=study)


# ---------------------------------------------------------------- scattering

def criterion_10(steps: int = 200, n_dir: int = 32, k_window=(1.0, 8.0)) -> dict:
    kmin, kmax = k_window
    n = scatter2d.grid_size_for(kmax, 3.0)
    ks = np.linspace(kmin, kmax, steps)
    disk = scatter2d.nonscattering_scan(scatter2d.Potential2D.disk(3.0, 1.0, n), ks, n_dir)
    sector = scatter2d.nonscattering_scan(scatter2d.Potential2D.sector(1.0, 3.0, 1.0, n), ks, n_dir)
    roots = scatter2d.disk_roots_all_orders(3.0, 1.0, (kmin - 0.5, kmax + 0.5))
    matches = scatter2d.match_dips_to_roots(disk.dips, roots)
    deepest = min(disk.sigma_min[d.index] for d in disk.dips) if disk.dips else math.nan
    ok = (len(matches) >= 2 and all(m["matched"] for m in matches)
          and sector.deepest >= 10.0 * deepest)
    return _result(10, "scattering contrast", ok, dips=len(matches), matches=matches,
                   deepest_radial_dip=deepest, sector_minimum=sector.deepest, ratio_required=10.0,
                   match_tolerance=0.05, label="operational surrogate: comparative 10x criterion",
                   disk_scan=disk, sector_scan=sector)


# ---------------------------------------------------------------- exceptional angles

def criterion_11(nmax: int = 3, samples: int = 5, seed: int = 11, n_grid: int = 2000) -> dict:
    rng = np.random.default_rng(seed)
    tables, ok = [], True
    for N in range(nmax + 1):
        rep = corner3d.find_exceptional_angles(N, n_grid=n_grid)
        brackets = [c.bracket for c in rep["candidates"]]
        gammas = []
        while len(gammas) < samples:
            g = float(rng.uniform(0.05, corner3d.GAMMA_MAX))
            if all(not (a <= g <= b) for a, b in brackets):
                gammas.append(g)
        cert = corner3d.certify_at(N, gammas)
        ok = ok and all(c["certified"] for c in cert)
        tables.append({"N": N, "candidates": rep["candidates"],
                       "certified_nonvanishing_fraction": rep["certified_nonvanishing_fraction"],
                       "certified_at": cert, "label": "ESTIMATE"})
    return _result(11, "exceptional-angle report", ok, tables=tables)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
            11: criterion_11}

QUICK = {9: {"resolution": 512, "re_max": 160.0}, 10: {"steps": 100}}
