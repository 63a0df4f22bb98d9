"""Independent reference values shared by the test modules."""
import math

import mpmath
import numpy as np
import sympy as sp
from scipy.integrate import quad
from scipy.special import lpmv


def derive_f0_closed_form():
    """Re-derive f_0(gamma) symbolically and return it as a sympy expression in gamma.

    The inner azimuthal integral int_0^{2pi} (A + B cos b)^(-3) db follows
    from I_1 = 2 pi (A^2 - B^2)^(-1/2) by differentiating twice in A, since
    d^2/dA^2 (A + B cos b)^(-1) = 2 (A + B cos b)^(-3). The integrand has
    A = cos a, B = i sin a, so A^2 - B^2 = 1 and I_3 = pi (3 cos^2 a - 1).
    I_1 itself is checked by numerical quadrature at a few real points.
    """
    A, B, a, g = sp.symbols("A B alpha gamma", positive=True)
    I1 = 2 * sp.pi / sp.sqrt(A**2 - B**2)
    for Av, Bv in ((2.0, 1.0), (3.0, -2.5), (1.5, 0.2)):
        num = mpmath.quad(lambda b: 1 / (Av + Bv * mpmath.cos(b)), [0, 2 * mpmath.pi])
        assert abs(num - float(I1.subs({A: Av, B: Bv}))) < 1e-12
    I3 = sp.simplify(sp.diff(I1, A, 2) / 2)
    inner = sp.simplify(I3.subs({A: sp.cos(a), B: sp.I * sp.sin(a)}))
    inner = sp.trigsimp(inner)
    f0 = sp.integrate(inner * sp.sin(a), (a, 0, g))
    return sp.simplify(f0)


def f_j_legendre(N: int, j: int, gamma: float) -> complex:
    """f_j(gamma) = 2 pi (-i)^m (N+2-m)!/(N+2)! int_{cos gamma}^1 P_N^m P_{N+2}^m dt, m = |j|.

    Uses scipy's Legendre functions; the phase convention cancels in the product.
    """
    m = abs(j)
    val, _ = quad(lambda t: lpmv(m, N, t) * lpmv(m, N + 2, t), math.cos(gamma), 1.0,
                  epsabs=1e-14, epsrel=1e-12, limit=200)
    return complex(2 * math.pi * (-1j) ** m * math.factorial(N + 2 - m) / math.factorial(N + 2) * val)


def f_j_brute(N: int, j: int, gamma: float, n: int = 400) -> complex:
    """Tensor Gauss-Legendre x trapezoid rule straight from the defining cap integral."""
    x, w = np.polynomial.legendre.leggauss(n)
    alpha = 0.5 * gamma * (x + 1)
    beta = 2 * np.pi * np.arange(2 * n) / (2 * n)
    A, Bt = np.meshgrid(alpha, beta, indexing="ij")
    m = abs(j)
    P = lpmv(m, N, np.cos(A)) * (-1) ** m
    f = (np.cos(A) + 1j * np.sin(A) * np.cos(Bt)) ** (-N - 3) * P * np.exp(1j * j * Bt) * np.sin(A)
    return complex(0.5 * gamma * (w @ f.mean(axis=1)) * 2 * np.pi)
