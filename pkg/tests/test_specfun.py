import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from corner_scatter_lab.errors import DomainError, IndexOrderError
from corner_scatter_lab.specfun import (SWITCHOVER, LegendreIndex, SphericalHarmonicIndex, assoc_legendre,
                                        bessel_j, bessel_j_asymptotic, bessel_j_series, bessel_y,
                                        bessel_y0_series, factorial, hankel1, sph_harm)
from corner_scatter_lab.quadrature import gauss_legendre


def test_bessel_trivial_values():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


def test_half_order_closed_form_against_series():
    x = math.pi / 2
    closed = math.sqrt(2 / (math.pi * x)) * math.sin(x)
    assert closed == pytest.approx(2 / math.pi, rel=1e-15)
    assert bessel_j(0.5, x) == pytest.approx(closed, rel=1e-13)
    assert bessel_j_series(0.5, x) == pytest.approx(closed, rel=1e-13)


@pytest.mark.parametrize("nu", [0, 1, 2.5, 5, 10, 20.5])
def test_series_branch_below_switchover(nu):
    for x in np.linspace(0.05, SWITCHOVER, 25):
        ref = bessel_j_series(nu, x)
        assert abs(bessel_j(nu, x) - ref) <= 1e-12 * max(1.0, abs(ref)) + 1e-13


@pytest.mark.parametrize("nu", [0, 1, 1.5, 3])
def test_asymptotic_branch_above_switchover(nu):
    for x in np.geomspace(50, 1000, 20):
        ref = bessel_j_asymptotic(nu, x)
        assert abs(bessel_j(nu, x) - ref) <= 1e-12 * math.sqrt(2 / (math.pi * x))
    # at the switchover itself the truncated expansion still agrees to ~1e-9
    x = float(SWITCHOVER)
    assert abs(bessel_j(nu, x) - bessel_j_asymptotic(nu, x)) < 1e-8


def test_bessel_domain_errors():
    with pytest.raises(DomainError):
        bessel_j(0, -1.0)
    with pytest.raises(DomainError):
        bessel_j(0.3, 1.0)
    with pytest.raises(DomainError):
        bessel_j(51, 1.0)
    with pytest.raises(DomainError):
        hankel1(0, 0.0)


def test_hankel_imag_part_against_series():
    for x in (0.01, 0.5, 2.0, 7.5):
        assert hankel1(0, x).imag == pytest.approx(bessel_y0_series(x), rel=1e-11, abs=1e-12)
        assert hankel1(0, x).real == pytest.approx(bessel_j(0, x), rel=1e-13)


def test_hankel_large_argument_modulus():
    x = 100.0
    assert abs(hankel1(0, x)) == pytest.approx(math.sqrt(2 / (math.pi * x)), rel=0.01)


def test_hankel_relative_accuracy_range():
    mpmath = pytest.importorskip("mpmath")
    for x in np.geomspace(1e-3, 1e3, 15):
        ref = complex(mpmath.hankel1(0, x))
        assert abs(hankel1(0, x) - ref) <= 1e-10 * abs(ref)


def test_wronskian():
    for x in np.geomspace(0.05, 200, 30):
        j0, y0 = bessel_j(0, x), bessel_y(0, x)
        j0p, y0p = -bessel_j(1, x), -bessel_y(1, x)
        assert j0 * y0p - j0p * y0 == pytest.approx(2 / (math.pi * x), rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.floats(0.1, 100))
def test_three_term_recurrence(nu, x):
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    rhs = 2 * nu / x * bessel_j(nu, x)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


@pytest.mark.parametrize("nu", [0.5, 1, 2, 3.5])
def test_derivative_identity(nu):
    h = 1e-5
    for x in (0.7, 3.0, 11.0):
        f = lambda s: s**nu * bessel_j(nu, s)
        fd = (f(x + h) - f(x - h)) / (2 * h)
        exact = x**nu * (bessel_j(nu - 1, x) if nu >= 1 else math.sqrt(2 / (math.pi * x)) * math.cos(x))
        assert fd == pytest.approx(exact, rel=1e-6)


def test_legendre_explicit_forms():
    t = np.linspace(-1, 1, 41)
    assert np.all(assoc_legendre(0, 0, t) == 1.0)
    assert np.allclose(assoc_legendre(2, 0, t), (3 * t**2 - 1) / 2, atol=1e-15)
    assert assoc_legendre(1, 1, 0.0) == 1.0
    assert np.allclose(assoc_legendre(1, 1, t), np.sqrt(1 - t**2), atol=1e-15)
    assert np.allclose(assoc_legendre(2, 1, t), 3 * t * np.sqrt(1 - t**2), atol=1e-14)


@pytest.mark.parametrize("N,m", [(3, 0), (4, 2), (7, 5), (12, 3), (20, 20)])
def test_legendre_against_scipy_without_phase(N, m):
    t = np.linspace(-0.99, 0.99, 31)
    ref = (-1) ** m * special.lpmv(m, N, t)
    assert np.allclose(assoc_legendre(N, m, t), ref, rtol=1e-11, atol=1e-11 * np.abs(ref).max())


@pytest.mark.parametrize("m", [0, 1, 3])
def test_legendre_orthogonality(m):
    x, w = gauss_legendre(64)
    for N in range(m, m + 5):
        for Np in range(N + 1, m + 6):
            val = np.sum(w * assoc_legendre(N, m, x) * assoc_legendre(Np, m, x))
            assert abs(val) <= 1e-10


def test_index_validation():
    with pytest.raises(IndexOrderError):
        LegendreIndex(2, 3)
    with pytest.raises(IndexOrderError):
        SphericalHarmonicIndex(2, -3)
    with pytest.raises(DomainError):
        assoc_legendre(2, 1, 1.5)


def test_sph_harm_examples_and_conjugation():
    assert sph_harm(0, 0, 0.3, 1.2) == 1.0
    assert sph_harm(1, 0, 0.0, 0.4) == pytest.approx(1.0)
    p21 = 3 * 0.0 * 1.0
    assert sph_harm(2, 1, math.pi / 2, math.pi) == pytest.approx(p21 * np.exp(1j * math.pi), abs=1e-15)
    assert sph_harm(3, 2, 1.0, 0.7) == pytest.approx(15 * math.cos(1.0) * math.sin(1.0) ** 2 * np.exp(1.4j))
    a, b = np.meshgrid(np.linspace(0, math.pi, 7), np.linspace(0, 2 * math.pi, 9))
    for j in range(1, 4):
        assert np.allclose(sph_harm(3, -j, a, b), np.conj(sph_harm(3, j, a, b)))


def test_factorial():
    assert factorial(0) == 1
    assert factorial(5) == 120
    prod = 1
    for k in range(2, 13):
        prod *= k
    assert factorial(12) == prod == 479001600
    assert factorial(40) == math.factorial(40)
    with pytest.raises(OverflowError):
        factorial(41)
