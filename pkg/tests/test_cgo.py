import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import fft

from corner_scatter_lab import cgo
from corner_scatter_lab.errors import (DivergenceError, DomainError, InsufficientRangeError,
                                       ResolutionError, ResonanceError)

B = 1.5


def gaussian_field(n=256, width=0.2, half_width=B):
    h = 2 * half_width / n
    x = -half_width + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return X, Y, np.exp(-((X - 0.1) ** 2 + (Y + 0.05) ** 2) / width**2).astype(complex)


# --- frequencies and fields -------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.floats(1.1, 500.0), st.floats(0.1, 4.0))
def test_frequency_invariants(re, lam):
    if re * re <= lam * 1.01:
        return
    z = cgo.CgoFrequency.along_e1(re, lam).vector
    assert abs(np.sum(z * z) - lam) <= 1e-12 * max(np.sum(np.abs(z) ** 2), 1.0)
    assert abs(z.real @ z.imag) == 0.0
    assert abs(np.sum(z.real**2) - np.sum(z.imag**2) - lam) <= 1e-12 * re * re


def test_frequency_validation():
    with pytest.raises(DomainError):
        cgo.CgoFrequency((2.0, 1j), 1.0)
    with pytest.raises(DomainError):
        cgo.CgoFrequency((2.0 + 1j, 1.0 + 2j), 1.0)
    with pytest.raises(DomainError):
        cgo.CgoFrequency.along_e1(0.5, 1.0)
    with pytest.raises(DomainError):
        cgo.CgoFrequency((1.0, 0j), -1.0)


def test_grid_field_validation():
    with pytest.raises(DomainError):
        cgo.GridField(1.0, np.zeros((64, 64)))
    with pytest.raises(DomainError):
        cgo.GridField(1.0, np.zeros((192, 192)))
    f = cgo.GridField(1.0, np.ones((128, 128)))
    assert f.l2_norm() == pytest.approx(2.0)
    assert f.lq_norm(6) == pytest.approx(4.0 ** (1 / 6))


# --- the multiplier ------------------------------------------------------------------------


@pytest.mark.parametrize("re", [5.0, 20.0, 60.0])
def test_round_trip_with_independent_forward(re):
    zeta = cgo.CgoFrequency.along_e1(cgo.snap_re_zeta(re, B), 1.0)
    z = zeta.vector
    n = 256
    X, Y, g = gaussian_field(n)
    # forward operator by plain periodic spectral differentiation (no twist)
    k = 2 * math.pi * fft.fftfreq(n, d=2 * B / n)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    f = fft.ifft2((K1**2 + K2**2 + 2 * (z[0] * K1 + z[1] * K2)) * fft.fft2(g))
    back = cgo.multiplier_apply(cgo.GridField(B, f), zeta).samples
    interior = X**2 + Y**2 <= 1.0
    assert np.abs(back - g)[interior].max() <= 1e-8


def test_zero_maps_to_zero():
    zeta = cgo.CgoFrequency.along_e1(10.0, 1.0)
    out = cgo.multiplier_apply(cgo.GridField(B, np.zeros((128, 128), dtype=complex)), zeta)
    assert np.all(out.samples == 0)


def test_single_mode_arithmetic():
    # the lowest antiperiodic mode e^{i kappa x1} stands in for a constant on the offset grid
    n, c = 128, 2.0 - 1.0j
    zeta = cgo.CgoFrequency.along_e1(cgo.snap_re_zeta(8.0, B), 1.0)
    kappa = cgo.frequency_offset(B)
    X, Y, _ = gaussian_field(n)
    f = c * np.exp(1j * kappa * X)
    sym = kappa**2 + 2 * zeta.vector[0] * kappa
    out = cgo.multiplier_apply(cgo.GridField(B, f), zeta).samples
    assert np.abs(out - f / sym).max() <= 1e-13 * abs(c / sym)


def test_unshifted_grid_hits_the_zero():
    zeta = cgo.CgoFrequency.along_e1(cgo.snap_re_zeta(8.0, B), 1.0)
    M = cgo.Multiplier(zeta, B, 128, offset=False)
    assert M.min_symbol == 0.0
    with pytest.raises(ResonanceError):
        M.check_resonance()
    shifted = cgo.Multiplier(zeta, B, 128)
    assert shifted.min_symbol >= 1e-6 * zeta.re_norm**2


def test_symbol_zero_set():
    for re in (6.0, 31.0):
        zeta = cgo.CgoFrequency.along_e1(cgo.snap_re_zeta(re, B), 1.0)
        minima = cgo.symbol_minima(zeta, B, 256)
        step = math.pi / B
        targets = [(0.0, 0.0), (-2 * zeta.re_norm, 0.0)]
        for t in targets:
            assert min(math.hypot(p[0] - t[0], p[1] - t[1]) for p in minima) <= step


def test_resolution_guard():
    with pytest.raises(ResolutionError):
        cgo.Multiplier(cgo.CgoFrequency.along_e1(100.0, 1.0), B, 128)


def test_multiplier_requires_e1_direction():
    z = cgo.CgoFrequency((3.0 / math.sqrt(2) + 2j / math.sqrt(2), 3.0 / math.sqrt(2) - 2j / math.sqrt(2)), 5.0)
    with pytest.raises(DomainError):
        cgo.Multiplier(z, B, 128)


@pytest.mark.parametrize("re", [2.0, 5.0, 8.0])
def test_conjugation_identity(re):
    assert cgo.conjugation_identity_check(cgo.CgoFrequency.along_e1(re, 1.0)) <= 1e-8


def test_conjugation_identity_random_smooth():
    # random smooth w: sum of a few shifted Gaussians
    rng = np.random.default_rng(4)
    n, hw = 256, 4.0
    h = 2 * hw / n
    x = -hw + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(x, x, indexing="ij")
    zeta = cgo.CgoFrequency.along_e1(3.0, 2.0)
    z = zeta.vector
    w = sum(rng.standard_normal() * np.exp(-((X - a) ** 2 + (Y - b) ** 2) / 0.3)
            for a, b in rng.uniform(-0.4, 0.4, (4, 2)))
    k = 2 * math.pi * fft.fftfreq(n, d=h)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    phase = np.exp(1j * (z[0] * X + z[1] * Y))
    left = (fft.ifft2((K1**2 + K2**2) * fft.fft2(phase * w)) - zeta.lam * phase * w) / phase
    right = fft.ifft2((K1**2 + K2**2 + 2 * (z[0] * K1 + z[1] * K2)) * fft.fft2(w))
    inside = X**2 + Y**2 <= 1.0
    assert np.abs(left - right)[inside].max() <= 1e-8 * np.abs(right)[inside].max()


# --- the Neumann solve ----------------------------------------------------------------------


def test_zero_potential():
    V = cgo.GridField(B, np.zeros((128, 128), dtype=complex))
    out = cgo.cgo_solve(V, cgo.CgoFrequency.along_e1(10.0, 1.0))
    assert out.iterations == 1 and np.all(out.psi.samples == 0) and out.residual == 0.0


@pytest.fixture(scope="module")
def V256():
    return cgo.sector_potential(B, 256)


def test_solution_residual_and_contraction(V256):
    zeta = cgo.CgoFrequency.along_e1(cgo.snap_re_zeta(40.0, B), 1.0)
    out = cgo.cgo_solve(V256, zeta, tol=1e-10)
    assert out.residual <= 1e-10
    assert max(out.contraction_ratios) <= 0.6
    # independent residual of the psi equation, recomputed from scratch
    M = cgo.Multiplier(zeta, B, 256)
    v, psi = V256.samples, out.psi.samples
    r = np.linalg.norm(M.forward(psi) + v * psi + v) / np.linalg.norm(v)
    assert r <= 10 * 1e-10


def test_cgo_solution_solves_schrodinger(V256):
    # (-Delta + V - lambda) u = 0 for u = e^{i zeta.x}(1 + psi), via the conjugation identity
    zeta = cgo.CgoFrequency.along_e1(cgo.snap_re_zeta(20.0, B), 1.0)
    out = cgo.cgo_solve(V256, zeta, tol=1e-10)
    M = cgo.Multiplier(zeta, B, 256)
    one_plus = 1.0 + out.psi.samples
    # e^{-i zeta x}(-Delta - lambda) e^{i zeta x} annihilates the constant, so only psi contributes
    lhs = M.forward(out.psi.samples) + V256.samples * one_plus
    assert np.linalg.norm(lhs) / np.linalg.norm(V256.samples) <= 10 * 1e-10


def test_halving_the_potential_halves_psi():
    V = cgo.sector_potential(B, 256)
    half = cgo.sector_potential(B, 256, amplitude=0.5)
    zeta = cgo.CgoFrequency.along_e1(cgo.snap_re_zeta(60.0, B), 1.0)
    a = cgo.cgo_solve(V, zeta).psi.lq_norm(6)
    b = cgo.cgo_solve(half, zeta).psi.lq_norm(6)
    assert b / a == pytest.approx(0.5, rel=0.02)


def test_lambda_stability(V256):
    re = cgo.snap_re_zeta(40.0, B)
    norms = [cgo.cgo_solve(V256, cgo.CgoFrequency.along_e1(re, lam)).psi.lq_norm(6)
             for lam in (1.0, 2.0, 3.0, 4.0)]
    assert (max(norms) - min(norms)) / min(norms) <= 0.2


def test_divergence_is_reported():
    V = cgo.sector_potential(B, 128, amplitude=1000.0)
    with pytest.raises(DivergenceError, match="Re zeta"):
        cgo.cgo_solve(V, cgo.CgoFrequency.along_e1(cgo.snap_re_zeta(2.0, B), 1.0), max_iter=60)


def test_sector_potential_truncation():
    with pytest.raises(ResolutionError):
        cgo.sector_potential(0.5, 128, sigma=0.25)
    V = cgo.sector_potential(B, 128)
    assert np.all(V.samples.imag == 0) and V.samples.real.max() <= 1.0


def test_snap_re_zeta():
    step = math.pi / (2 * B)
    assert cgo.snap_re_zeta(10.0, B) / step == pytest.approx(round(10.0 / step))
    assert cgo.snap_re_zeta(0.01, B) == pytest.approx(step)


# --- decay study ---------------------------------------------------------------------------


def test_decay_study_quick(V256):
    study = cgo.decay_study(V256, np.geomspace(10, 100, 8))
    assert study.slope <= -1 / 3 - 0.05
    assert study.delta_hat == pytest.approx(-study.slope - 1 / 3)
    assert all(r <= 1e-10 for r in study.residuals)
    assert study.threshold is not None
    assert study.to_dict()["target"] == pytest.approx(-1 / 3 - 0.05)


def test_decay_study_range_guard(V256):
    with pytest.raises(InsufficientRangeError):
        cgo.decay_study(V256, np.geomspace(10, 50, 8))
    with pytest.raises(InsufficientRangeError):
        cgo.decay_study(V256, np.geomspace(10, 320, 5))
