import math

import numpy as np
import pytest
from scipy import special

from corner_scatter_lab import scatter2d as s2
from corner_scatter_lab.errors import ConvergenceError, DomainError, ResolutionError

N54 = s2.grid_size_for(8.0, 3.0)


@pytest.fixture(scope="module")
def sector():
    return s2.Potential2D.sector(opening_angle=1.0, contrast=3.0, n=N54)


@pytest.fixture(scope="module")
def disk():
    return s2.Potential2D.disk(contrast=3.0, radius=1.0, n=N54)


def test_grid_size_rule():
    assert N54 == 54
    pot = s2.Potential2D.disk(n=N54)
    assert 2 * math.pi / (8.0 * 2.0 * pot.h) >= 10.0


def test_potential_types(sector, disk):
    assert sector.kind == "sector-corner" and sector.vertex_value() == 1.0
    assert disk.kind == "radial-disk"
    X, Y = sector.coordinates()
    # compact support inside the radius, nonzero near the vertex
    r = np.hypot(X, Y)
    assert np.all(sector.profile[r > 1.0 + sector.h] == 0)
    assert sector.profile.ravel()[np.argmin(np.abs(X - 0.1) + np.abs(Y))] > 0
    with pytest.raises(DomainError):
        s2.Potential2D("triangle", {}, 1.0, 1.0, 4, np.zeros((4, 4)))
    with pytest.raises(DomainError):
        s2.Potential2D.disk(envelope="box")


def test_far_field_constant():
    k = 2.5
    assert s2.far_field_constant(k) == pytest.approx(-np.exp(1j * math.pi / 4) / math.sqrt(8 * math.pi * k))


# --- Herglotz waves ------------------------------------------------------------------------


def test_herglotz_examples():
    rng = np.random.default_rng(1)
    x = rng.uniform(-2, 2, (20, 2))
    r, phi = np.hypot(x[:, 0], x[:, 1]), np.arctan2(x[:, 1], x[:, 0])
    k = 3.7
    u = s2.herglotz_wave({0: 1.0}, k, x)
    assert np.allclose(u, 2 * math.pi * special.jv(0, k * r), atol=1e-12)
    for m in (1, -2, 5):
        um = s2.herglotz_wave({m: 1.0}, k, x)
        ref = 2 * math.pi * 1j**m * special.jv(m, k * r) * np.exp(1j * m * phi)
        assert np.allclose(um, ref, atol=1e-12)
    assert s2.herglotz_wave({0: 1.0}, k, [0.0, 0.0])[0] == pytest.approx(2 * math.pi)


def test_herglotz_methods_agree():
    rng = np.random.default_rng(2)
    x = rng.uniform(-3, 3, (30, 2))
    coeffs = {m: complex(*rng.standard_normal(2)) for m in range(-4, 5)}
    a = s2.herglotz_wave(coeffs, 5.0, x, "bessel")
    b = s2.herglotz_wave(coeffs, 5.0, x, "quadrature")
    assert np.abs(a - b).max() <= 1e-10
    with pytest.raises(DomainError):
        s2.herglotz_wave(coeffs, -1.0, x)


# --- Lippmann-Schwinger ---------------------------------------------------------------------


def test_zero_potential_returns_incident(sector):
    zero = s2.Potential2D("sector-corner", {}, 0.0, sector.half_width, sector.n, sector.profile)
    X, Y = zero.coordinates()
    u0 = np.exp(1j * 2.0 * X)
    sol = s2.ls_solve(zero, 2.0, u0)
    assert np.array_equal(sol.u, u0)
    A = s2.far_field_matrix(zero, 2.0, 8)
    assert np.all(A.matrix == 0)


def test_ls_residual_and_born(disk):
    X, Y = disk.coordinates()
    k = 2.0
    u0 = np.exp(1j * k * X)
    sol = s2.ls_solve(disk, k, u0)
    assert sol.residual <= 1e-8
    weak = disk.scaled(1e-3)
    w = s2.ls_solve(weak, k, u0)
    born = s2.born_scattered(weak, k, u0)
    scat = w.u - u0
    assert np.linalg.norm(scat - born) <= 0.05 * np.linalg.norm(born)


def test_ls_matches_direct_far_field(sector):
    k = 3.0
    a = s2.far_field_matrix(sector, k, 8, method="direct").matrix
    b = s2.far_field_matrix(sector, k, 8, method="iterative", tol=1e-10).matrix
    assert np.abs(a - b).max() <= 1e-6 * np.abs(a).max()


def test_resolution_guard(sector):
    with pytest.raises(ResolutionError):
        s2.far_field_matrix(sector, 12.0, 8)
    with pytest.raises(DomainError):
        s2.far_field_matrix(sector, 3.0, 7)


def test_stagnation_error(disk):
    X, Y = disk.coordinates()
    with pytest.raises(ConvergenceError):
        # below double-precision reach: GMRES cannot get there and must say so
        s2.ls_solve(disk, 6.0, np.exp(1j * 6.0 * X), max_iter=1, tol=1e-17)


def test_green_self_cell_consistent():
    # the disk-averaged self term stays close to the neighbouring point values scaled by area
    k, h = 4.0, 0.05
    G = s2.green_table(k, h, 3)
    assert np.isfinite(G).all()
    assert abs(G[2, 2]) > abs(G[3, 2])


# --- far-field invariants --------------------------------------------------------------------


@pytest.mark.parametrize("k", [1.5, 4.0, 7.5])
def test_reciprocity(sector, disk, k):
    assert s2.far_field_matrix(sector, k, 32).reciprocity_gap() <= 1e-6
    assert s2.far_field_matrix(disk, k, 16).reciprocity_gap() <= 1e-6


def test_radial_far_field_is_fourier_diagonal():
    pot = s2.Potential2D.disk(envelope="gaussian", n=N54)
    A = s2.far_field_matrix(pot, 3.0, 32)
    assert A.fourier_offdiagonal_ratio() <= 1e-6


def test_sector_far_field_is_not_diagonal(sector):
    assert s2.far_field_matrix(sector, 3.0, 32).fourier_offdiagonal_ratio() > 1e-2


@pytest.mark.parametrize("turns", [1, 2, 3])
def test_rotation_equivariance(sector, turns):
    n_dir, k = 32, 3.0
    A = s2.far_field_matrix(sector, k, n_dir).matrix
    B = s2.far_field_matrix(sector.rotated_quarter(turns), k, n_dir).matrix
    s = turns * n_dir // 4
    shifted = np.roll(np.roll(A, s, axis=0), s, axis=1)
    assert np.abs(B - shifted).max() <= 1e-8 * np.abs(A).max()


def test_grid_refinement_stability():
    ks = (2.0, 5.0, 7.5)
    coarse = s2.Potential2D.sector(n=N54)
    fine = s2.Potential2D.sector(n=2 * N54)
    for k in ks:
        a = s2.far_field_matrix(coarse, k, 32).normalized_sigma_min()
        b = s2.far_field_matrix(fine, k, 32).normalized_sigma_min()
        assert abs(a - b) <= 0.02 * b


def test_matrix_record_and_guards():
    with pytest.raises(DomainError):
        s2.FarFieldMatrix(1.0, 4, np.zeros((3, 3)))
    with pytest.raises(DomainError):
        s2.FarFieldMatrix(1.0, 2, np.array([[np.nan, 0], [0, 0]]))
    with pytest.raises(DomainError):
        s2.FarFieldMatrix(1.0, 2, np.eye(2)).normalized_sigma_min()
    d = s2.FarFieldMatrix(1.0, 2, np.eye(2, dtype=complex)).to_dict()
    assert d["matrix_re"] == [[1.0, 0.0], [0.0, 1.0]]


# --- dips ------------------------------------------------------------------------------------


def test_detect_dips_synthetic():
    ks = np.linspace(1, 8, 141)
    sig = 1.0 + 0.1 * np.sin(ks) - 0.0
    for c in (2.9, 5.123):
        sig = sig * np.sqrt(((ks - c) ** 2 + 1e-6) / ((ks - c) ** 2 + 0.01))
    dips, med = s2.detect_dips(ks, sig)
    assert [round(d.k, 2) for d in dips] == [2.9, 5.12]
    assert all(d.prominence >= 4 for d in dips)
    flat, _ = s2.detect_dips(ks, 1.0 + 0.01 * np.sin(5 * ks))
    assert flat == []


def test_disk_dip_near_first_root(disk):
    roots = s2.disk_roots_all_orders(3.0, 1.0, (2.5, 3.3))
    assert roots[0][0] == 1 and roots[0][1] == pytest.approx(2.9026, abs=1e-4)
    ks = np.linspace(2.7, 3.1, 21)
    scan = s2.nonscattering_scan(disk, ks, 32)
    assert scan.dips, "no dip detected near the order-1 root"
    matches = s2.match_dips_to_roots(scan.dips, roots)
    assert any(m["matched"] and m["order"] == 1 for m in matches)
    sec = s2.nonscattering_scan(s2.Potential2D.sector(n=N54), ks, 32)
    assert sec.dips == []
    assert sec.deepest >= 10 * scan.deepest


def test_scan_rejects_zero_potential(sector):
    zero = s2.Potential2D("sector-corner", {}, 3.0, sector.half_width, sector.n, np.zeros_like(sector.profile))
    with pytest.raises(DomainError):
        s2.nonscattering_scan(zero, [1.0, 2.0])


def test_scan_is_deterministic_across_workers(sector):
    ks = np.linspace(1.0, 3.0, 6)
    a = s2.nonscattering_scan(sector, ks, 16, workers=1)
    b = s2.nonscattering_scan(sector, ks, 16, workers=3)
    assert a.sigma_min == b.sigma_min
    assert a.sigma_min_raw == b.sigma_min_raw and len(a.sigma_min_raw) == 6


@pytest.mark.parametrize("k", [1.0, 3.0, 7.5])
def test_raw_sigma_min_is_at_noise_floor(sector, k):
    # evanescent angular modes push the raw value to roundoff, which is why scans use the normalized one
    A = s2.far_field_matrix(sector, k, 32)
    sv = A.singular_values()
    assert sv.min() <= 1e-12 * sv.max()
    assert A.normalized_sigma_min() >= 0.1


# --- transmission eigenvalues of the disk ---------------------------------------------------


@pytest.mark.parametrize("order", [0, 1, 2, 5])
def test_disk_roots_residuals(order):
    t = s2.disk_transmission_eigs(3.0, 1.0, order)
    assert t.roots == sorted(t.roots) and t.roots
    assert all(0 < r <= 10.0 for r in t.roots)
    assert max(t.residuals) <= 1e-10
    assert all(r <= 1e-8 * sc for r, sc in zip(t.residuals, t.scales))


def test_disk_determinant_explicit_m3():
    # k1 = 2k; d_0(k) = J_0(k) 2k J_0'(2k) - J_0(2k) k J_0'(k), with J_0' = -J_1
    k = np.linspace(0.5, 9.5, 37)
    ref = special.j0(k) * 2 * k * (-special.j1(2 * k)) - special.j0(2 * k) * k * (-special.j1(k))
    assert np.allclose(s2.disk_determinant(0, k, 3.0), ref, atol=1e-14)


def test_disk_determinant_degenerates_as_m_vanishes():
    k = np.linspace(0.5, 9.5, 50)
    prev = np.inf
    for m in (1e-2, 1e-4, 1e-6):
        cur = np.abs(s2.disk_determinant(1, k, m)).max()
        assert cur < prev
        prev = cur
    assert prev < 1e-5
    for bad in (0.0, -1.0, -2.0):
        with pytest.raises(DomainError):
            s2.disk_transmission_eigs(bad, 1.0, 0)


def test_disk_window_notice():
    t = s2.disk_transmission_eigs(3.0, 1.0, 0, window=(0.1, 0.5))
    assert t.roots == [] and t.notice
    with pytest.raises(DomainError):
        s2.TransmissionEigenvalueList(3.0, 1.0, 0, [2.0, 1.0], [0, 0], [1, 1], (0, 1))
