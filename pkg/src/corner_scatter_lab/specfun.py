"""Special functions: Bessel/Hankel, Ferrers functions, spherical harmonics.

Ferrers functions are used without the Condon-Shortley phase, so that
``P_1^1(t) = sqrt(1 - t^2)`` and every ``P_N^m`` is nonnegative near ``t = 1``.
Spherical harmonics are unnormalized: ``Y_j^N(alpha, beta) = P_N^{|j|}(cos alpha) e^{i j beta}``.

Integer-order Bessel and Hankel values come from :mod:`scipy.special`;
half-integer orders go through the spherical Bessel reduction. The float
power series and the Hankel asymptotic expansion below are independent
routes used to cross-validate those values on either side of ``x = 12``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, IndexOrderError

SWITCHOVER = 12.0
MAX_ORDER = 50
MAX_FACTORIAL = 40
EULER_GAMMA = 0.57721566490153286060651209


@dataclass(frozen=True)
class LegendreIndex:
    N: int
    m: int

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and isinstance(self.m, (int, np.integer))):
            raise IndexOrderError("Legendre indices must be integers")
        if self.N < 0 or self.m < 0 or self.m > self.N:
            raise IndexOrderError(f"invalid Legendre index N={self.N}, m={self.m}")


@dataclass(frozen=True)
class SphericalHarmonicIndex:
    N: int
    j: int

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and isinstance(self.j, (int, np.integer))):
            raise IndexOrderError("harmonic indices must be integers")
        if self.N < 0 or abs(self.j) > self.N:
            raise IndexOrderError(f"invalid harmonic index N={self.N}, j={self.j}")


def _check_order(nu) -> tuple[bool, int]:
    """Return (is_half_integer, integer part) or raise for unsupported orders."""
    twice = 2.0 * float(nu)
    if nu < 0 or nu > MAX_ORDER or twice != round(twice):
        raise DomainError(f"unsupported Bessel order {nu}")
    k = int(round(twice))
    return k % 2 == 1, k // 2


def bessel_j(nu, x):
    """J_nu(x) for integer or half-integer 0 <= nu <= 50 and x >= 0."""
    half, n = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise DomainError("bessel_j requires finite x >= 0")
    if half:
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.sqrt(2.0 * x / np.pi) * special.spherical_jn(n, x)
        val = np.where(x == 0, 0.0, val)
    else:
        val = special.jv(n, x)
    return val[()] if val.ndim == 0 else val


def bessel_y(nu: int, x):
    """Y_nu(x) for integer nu and x > 0."""
    half, n = _check_order(nu)
    if half:
        raise DomainError("bessel_y supports integer orders only")
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("bessel_y requires finite x > 0")
    val = special.yv(n, x)
    return val[()] if val.ndim == 0 else val


def hankel1(nu: int, x):
    """Outgoing Hankel function H^(1)_nu(x) = J_nu(x) + i Y_nu(x), x > 0."""
    half, n = _check_order(nu)
    if half:
        raise DomainError("hankel1 supports integer orders only")
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("hankel1 has a logarithmic singularity at x = 0; need x > 0")
    val = special.hankel1(n, x)
    return val[()] if val.ndim == 0 else val


def bessel_j_series(nu: float, x: float) -> float:
    """Power series of J_nu(x), summed with compensated addition.

    Reliable to roughly 1e-12 absolute for x <= 12, the regime below the
    switchover; cancellation grows like e^x beyond it.
    """
    if x == 0:
        return 1.0 if nu == 0 else 0.0
    half = 0.5 * x
    terms = []
    k = 0
    lead = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0))
    term = lead
    while True:
        terms.append(term)
        k += 1
        term *= -(half * half) / (k * (k + nu))
        if abs(term) < 1e-18 * max(abs(lead), 1e-300) and k > half:
            break
        if k > 500:
            break
    return math.fsum(terms)


def bessel_j_asymptotic(nu: float, x: float) -> float:
    """Hankel asymptotic expansion of J_nu(x), truncated at its smallest term."""
    P, Q = _pq_asymptotic(nu, x)
    chi = x - (0.5 * nu + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (P * math.cos(chi) - Q * math.sin(chi))


def bessel_y_asymptotic(nu: float, x: float) -> float:
    P, Q = _pq_asymptotic(nu, x)
    chi = x - (0.5 * nu + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (P * math.sin(chi) + Q * math.cos(chi))


def _pq_asymptotic(nu: float, x: float) -> tuple[float, float]:
    mu = 4.0 * nu * nu
    # a_k(nu) / x^k terms of the combined series sum_k i^k a_k / x^k
    terms = [1.0]
    a = 1.0
    last = 1.0
    for k in range(1, 60):
        a *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(a) > abs(last) or a == 0.0:
            break
        terms.append(a)
        last = a
    P = math.fsum(t * (-1) ** (k // 2) for k, t in enumerate(terms) if k % 2 == 0)
    Q = math.fsum(t * (-1) ** (k // 2) for k, t in enumerate(terms) if k % 2 == 1)
    return P, Q


def bessel_y0_series(x: float) -> float:
    """Neumann series of Y_0(x) for moderate x > 0."""
    if x <= 0:
        raise DomainError("Y_0 needs x > 0")
    q = 0.25 * x * x
    acc = []
    term = 1.0
    harmonic = 0.0
    for k in range(1, 200):
        term *= -q / (k * k)
        harmonic += 1.0 / k
        acc.append(-term * harmonic)
        if abs(term * harmonic) < 1e-18 and k > q:
            break
    j0 = bessel_j_series(0.0, x)
    return (2.0 / math.pi) * ((math.log(0.5 * x) + EULER_GAMMA) * j0 + math.fsum(acc))


def assoc_legendre(N: int, m: int, t):
    """Ferrers function P_N^m(t) without the Condon-Shortley phase.

    Computed by the upward three-term recurrence in the degree starting from
    ``P_m^m = (2m-1)!! (1-t^2)^{m/2}``.
    """
    LegendreIndex(N, m)
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + 1e-14):
        raise DomainError("assoc_legendre requires |t| <= 1")
    t = np.clip(t, -1.0, 1.0)
    s = np.sqrt((1.0 - t) * (1.0 + t))
    pmm = np.ones_like(t)
    for k in range(1, m + 1):
        pmm = pmm * (2 * k - 1) * s
    if N == m:
        return pmm[()] if pmm.ndim == 0 else pmm
    prev, cur = pmm, (2 * m + 1) * t * pmm
    for ell in range(m + 1, N):
        prev, cur = cur, ((2 * ell + 1) * t * cur - (ell + m) * prev) / (ell - m + 1)
    return cur[()] if cur.ndim == 0 else cur


def sph_harm(N: int, j: int, alpha, beta):
    """Unnormalized spherical harmonic P_N^{|j|}(cos alpha) e^{i j beta}."""
    SphericalHarmonicIndex(N, j)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return assoc_legendre(N, abs(j), np.cos(alpha)) * np.exp(1j * j * beta)


def factorial(n: int) -> int:
    """Exact n! for 0 <= n <= 40."""
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise DomainError("factorial needs a nonnegative integer")
    if n > MAX_FACTORIAL:
        raise OverflowError(f"factorial supported up to n = {MAX_FACTORIAL}")
    return math.factorial(int(n))
