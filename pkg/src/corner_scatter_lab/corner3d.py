"""Cap integrals f_j for the 3D cone and the exceptional-angle analysis.

    f_j(gamma) = int_0^gamma int_0^{2 pi} (cos a + i sin a cos b)^(-N-3)
                 P_N^{|j|}(cos a) e^{i j b} sin a db da

Symmetries used throughout: ``b -> -b`` gives ``f_{-j} = f_j``, and
``b -> b + pi`` gives ``conj(f_j) = (-1)^j f_j``, so ``(-i)^j f_j`` is real.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import quadrature as quad
from .errors import DisagreementError, DomainError, RankAmbiguityError
from .specfun import SphericalHarmonicIndex, assoc_legendre, sph_harm

EPS = np.finfo(float).eps
GAMMA_MAX = 1.5


@dataclass(frozen=True)
class FjValue:
    N: int
    j: int
    gamma: float
    value: complex
    error_estimate: float

    def __post_init__(self):
        SphericalHarmonicIndex(self.N, self.j)
        if not 0.0 <= self.gamma < 0.5 * math.pi:
            raise DomainError("gamma must lie in [0, pi/2)")

    def to_dict(self) -> dict:
        return {"N": self.N, "j": self.j, "gamma": self.gamma, "value": self.value,
                "error_estimate": self.error_estimate}


@dataclass(frozen=True)
class ExceptionalCandidate:
    N: int
    j: int
    gamma: float
    bracket: tuple
    residual: float
    kind: str = "sign-change"
    label: str = "ESTIMATE"

    @property
    def bracket_width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    def __post_init__(self):
        if not self.bracket[1] > self.bracket[0]:
            raise DomainError("bracket width must be positive")

    def to_dict(self) -> dict:
        return {"N": self.N, "j": self.j, "gamma": self.gamma, "bracket": list(self.bracket),
                "bracket_width": self.bracket_width, "residual": self.residual,
                "kind": self.kind, "label": self.label}


def _check(N: int, j: int, gamma: float):
    SphericalHarmonicIndex(N, j)
    if not 0.0 <= gamma < 0.5 * math.pi:
        raise DomainError("gamma must lie in [0, pi/2)")


def _p(alpha, beta):
    return np.cos(alpha) + 1j * np.sin(alpha) * np.cos(beta)


def _assert_modulus(p, gamma: float):
    # |p|^2 = cos^2 a + sin^2 a cos^2 b >= cos^2 gamma on the cap
    if np.min(np.abs(p)) < math.cos(gamma) * (1.0 - 1e-12):
        raise AssertionError("cap integrand modulus fell below cos(gamma)")


def f_j(N: int, j: int, gamma: float, tol: float = 1e-12) -> FjValue:
    """f_j(gamma) by adaptive product quadrature on the cap."""
    _check(N, j, gamma)
    m = abs(j)
    if gamma == 0.0:
        return FjValue(N, j, 0.0, 0j, 0.0)

    def integrand(alpha, beta):
        p = _p(alpha, beta)
        _assert_modulus(p, gamma)
        return p ** (-N - 3) * assoc_legendre(N, m, np.cos(alpha)) * np.cos(m * beta) * np.sin(alpha)

    # e^{i m b} may be replaced by cos(m b): the sin(m b) part is odd under b -> -b
    res = quad.integrate_cap(integrand, gamma, tol=tol)
    return FjValue(N, j, gamma, res.value, res.error_estimate)


def beta_integral(N: int, j: int, gamma, tol: float = 1e-14) -> np.ndarray:
    """B_j(gamma) = int_0^{2 pi} (cos g + i sin g cos b)^(-N-3) e^{i j b} db, vectorized in gamma."""
    g = np.atleast_1d(np.asarray(gamma, dtype=float))

    def f(alpha, beta):
        return _p(alpha, beta) ** (-N - 3) * np.cos(j * beta)

    flat = g.ravel()
    order = np.argsort(flat, kind="stable")
    vals = np.empty(flat.size, dtype=complex)
    # chunks in increasing gamma so each refines its azimuthal rule independently
    for start in range(0, flat.size, 256):
        idx = order[start:start + 256]
        scale = float(np.min(np.abs(np.cos(flat[idx])))) ** (-N - 3)
        vals[idx], _, _ = quad.circle_mean_batch(f, flat[idx], 32, tol * scale)
    vals = vals.reshape(g.shape)
    return vals if np.ndim(gamma) else vals[0]


def f_j_prime(N: int, j: int, gamma) -> np.ndarray:
    """f_j'(gamma) = P_N^{|j|}(cos gamma) sin gamma B_j(gamma)."""
    SphericalHarmonicIndex(N, j)
    g = np.asarray(gamma, dtype=float)
    return assoc_legendre(N, abs(j), np.cos(g)) * np.sin(g) * beta_integral(N, j, g)


def f_j_curve(N: int, j: int, gammas, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """f_j on an increasing grid by cumulative Gauss-Legendre integration of f_j'.

    Returns (values, error estimates); each cell error is the difference
    between ``order``-point and ``order - 4``-point rules, accumulated.
    """
    g = np.asarray(gammas, dtype=float)
    if g.ndim != 1 or np.any(np.diff(g) <= 0) or g[0] < 0 or g[-1] >= 0.5 * math.pi:
        raise DomainError("gamma grid must increase within [0, pi/2)")
    edges = np.concatenate([[0.0], g])
    cells = []
    for n_gl in (order, order - 4):
        x, w = quad.gauss_legendre(n_gl)
        lo, hi = edges[:-1, None], edges[1:, None]
        nodes = lo + 0.5 * (hi - lo) * (x + 1.0)
        vals = f_j_prime(N, j, nodes.ravel()).reshape(nodes.shape)
        cells.append((vals * w).sum(axis=1) * 0.5 * (hi - lo)[:, 0])
        if n_gl == order:
            absint = (np.abs(vals) * w).sum(axis=1) * 0.5 * (hi - lo)[:, 0]
    values = np.cumsum(cells[0])
    errors = np.cumsum(np.abs(cells[0] - cells[1]) + 64.0 * EPS * absint)
    return values, errors


def f_j_rotated(N: int, j: int, gamma: float, theta: float, method: str = "phase",
                tol: float = 1e-12) -> complex:
    """f_j^N(gamma; R_theta): phase form e^{i j theta} f_j, or direct quadrature.

    The direct route evaluates ``Y_j^N`` at the azimuthally rotated point
    ``((sin a) R_theta w', cos a)`` inside the cap integral.
    """
    _check(N, j, gamma)
    if method == "phase":
        return complex(np.exp(1j * j * theta) * f_j(N, j, gamma, tol).value)
    if method != "quadrature":
        raise DomainError("method must be 'phase' or 'quadrature'")

    def integrand(alpha, beta):
        p = _p(alpha, beta)
        _assert_modulus(p, gamma)
        return p ** (-N - 3) * sph_harm(N, j, alpha, beta + theta) * np.sin(alpha)

    return complex(quad.integrate_cap(integrand, gamma, tol=tol).value)


# --- Taylor structure at gamma = 0 ------------------------------------------------


def nu0(N: int, j: int) -> int:
    """(-1)^{|j|} (N+3)(N+4)...(N+3+|j|-1)."""
    m = abs(j)
    return (-1) ** m * math.prod(N + 3 + t for t in range(m))


def resonance_formula(N: int, j: int) -> complex:
    """|j|-th derivative at 0 of B_j predicted by the single resonant term.

    Only ``(i gamma cos b)^{|j|}`` in the expansion of ``p^(-N-3)`` pairs with
    ``e^{i j b}`` at order ``|j|``, and ``int cos^m b e^{i m b} db = 2 pi / 2^m``.
    """
    m = abs(j)
    return nu0(N, j) * (1j**m) * 2.0 * math.pi / 2.0**m


def central_weights(order: int, radius: int) -> np.ndarray:
    """Weights of the central stencil -radius..radius for the order-th derivative (unit spacing)."""
    x = np.arange(-radius, radius + 1, dtype=float)
    V = np.vander(x, increasing=True).T
    rhs = np.zeros(x.size)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def taylor_nonvanishing_check(N: int, j: int, h: float = 0.08) -> dict:
    """|j|-th derivative at 0 of B_j by Richardson-extrapolated finite differences vs the formula."""
    SphericalHarmonicIndex(N, j)
    m = abs(j)
    if m < 1:
        raise DomainError("the resonance check needs 1 <= |j| <= N")
    radius = m // 2 + 4
    w = central_weights(m, radius)
    offsets = np.arange(-radius, radius + 1)

    def fd(step):
        return np.sum(w * beta_integral(N, j, offsets * step)) / step**m

    d1, d2 = fd(h), fd(0.5 * h)
    # leading error power of a symmetric stencil: first h^(q-m) with q > 2 radius, q = m mod 2
    p = 2 * radius + 1 - m if (2 * radius + 1 - m) % 2 == 0 else 2 * radius + 2 - m
    fd_value = (2**p * d2 - d1) / (2**p - 1)
    formula = resonance_formula(N, j)
    rel = abs(fd_value - formula) / abs(formula)
    if rel > 0.01:
        raise DisagreementError(f"finite differences {fd_value} vs resonance formula {formula}")
    return {"N": N, "j": j, "nu0": nu0(N, j), "finite_difference": complex(fd_value),
            "formula": formula, "relative_difference": rel, "nonzero": abs(fd_value) > 0}


# --- determinant and coefficient system ------------------------------------------


def default_thetas(N: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(2 * N + 1) / (2 * N + 1)


def _check_thetas(N: int, thetas) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape != (2 * N + 1,):
        raise DomainError("need 2N+1 rotation angles")
    z = np.exp(1j * thetas)
    gap = np.abs(z[:, None] - z[None, :]) + np.eye(z.size)
    if gap.min() < 1e-12:
        raise DomainError("rotation angles must be distinct modulo 2 pi")
    return thetas


def f_values(N: int, gamma: float, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """f_j and error estimates for j = -N..N (negative j by symmetry)."""
    half = [f_j(N, j, gamma, tol) for j in range(N + 1)]
    vals = np.array([half[abs(j)].value for j in range(-N, N + 1)])
    errs = np.array([half[abs(j)].error_estimate for j in range(-N, N + 1)])
    return vals, errs


def vandermonde_factor(N: int, thetas) -> complex:
    """det[e^{i j theta_k}]_{j=-N..N, k} = prod_k z_k^{-N} prod_{k<l} (z_l - z_k)."""
    z = np.exp(1j * np.asarray(thetas, dtype=float))
    prod = np.prod(z ** (-N))
    for k in range(z.size):
        prod *= np.prod(z[k + 1:] - z[k])
    return complex(prod)


def g_determinant(N: int, gamma: float, thetas=None, fvals=None, rtol: float = 1e-10) -> dict:
    """Direct determinant of (e^{i j theta_k} f_j) and its factored form."""
    thetas = _check_thetas(N, default_thetas(N) if thetas is None else thetas)
    if fvals is None:
        fvals, _ = f_values(N, gamma)
    fvals = np.asarray(fvals, dtype=complex)
    jj = np.arange(-N, N + 1)
    M = np.exp(1j * jj[:, None] * thetas[None, :]) * fvals[:, None]
    direct = complex(np.linalg.det(M))
    factored = complex(np.prod(fvals) * vandermonde_factor(N, thetas))
    hadamard = float(np.prod(np.linalg.norm(M, axis=1)))
    if abs(direct - factored) > rtol * abs(factored) + 100.0 * EPS * hadamard:
        raise DisagreementError(f"determinant {direct} vs factored {factored}")
    return {"direct": direct, "factored": factored, "vandermonde": vandermonde_factor(N, thetas)}


def full_pivot_elimination(A: np.ndarray, tol: float) -> tuple[int, list, np.ndarray]:
    """Gaussian elimination with full pivoting; returns rank, pivot moduli and a kernel basis."""
    U = np.array(A, dtype=complex)
    m, n = U.shape
    perm = np.arange(n)
    pivots = []
    r = 0
    while r < min(m, n):
        sub = np.abs(U[r:, r:])
        i, k = np.unravel_index(int(np.argmax(sub)), sub.shape)
        if sub[i, k] <= tol:
            break
        pivots.append(float(sub[i, k]))
        U[[r, r + i]] = U[[r + i, r]]
        U[:, [r, r + k]] = U[:, [r + k, r]]
        perm[[r, r + k]] = perm[[r + k, r]]
        U[r + 1:, r:] -= np.outer(U[r + 1:, r] / U[r, r], U[r, r:])
        r += 1
    free = n - r
    kernel = np.zeros((n, free), dtype=complex)
    if free:
        X = np.zeros((n, free), dtype=complex)
        X[r:] = np.eye(free)
        for row in range(r - 1, -1, -1):
            X[row] = -(U[row, row + 1:] @ X[row + 1:]) / U[row, row]
        kernel[perm] = X
        kernel /= np.linalg.norm(kernel, axis=0)
    return r, pivots, kernel


def solve_coefficients_3d(N: int, gamma: float, thetas=None, fvals=None, ferrs=None,
                          noise: float = 1e-12) -> dict:
    """Kernel of sum_j a_j e^{i j theta_k} f_j(gamma) = 0, k = 0..2N.

    Columns are scaled to unit max-modulus before full-pivot elimination. A
    column with ``|f_j| <= err_j`` is treated as vanishing; ratios in between
    that and 10 are ambiguous, as is a pivot within 10x of the noise floor.
    """
    thetas = _check_thetas(N, default_thetas(N) if thetas is None else thetas)
    if fvals is None:
        fvals, ferrs = f_values(N, gamma)
    fvals = np.asarray(fvals, dtype=complex)
    ferrs = np.zeros(fvals.size) if ferrs is None else np.asarray(ferrs, dtype=float)
    jj = np.arange(-N, N + 1)
    A = np.exp(1j * thetas[:, None] * jj[None, :]) * fvals[None, :]
    mags = np.abs(fvals)
    floor = np.maximum(ferrs, noise * max(mags.max(), 1e-300))
    ratio = mags / floor
    if np.any((ratio > 1.0) & (ratio < 10.0)):
        raise RankAmbiguityError("some |f_j| lies within 10x of its noise floor")
    live = ratio >= 10.0
    kernel_cols = [np.eye(fvals.size)[:, i] for i in np.flatnonzero(~live)]
    pivots: list = []
    if live.any():
        As = A[:, live] / np.abs(A[:, live]).max(axis=0)
        tol = noise * fvals.size
        rank, pivots, ker = full_pivot_elimination(As, tol)
        if pivots and min(pivots) < 10.0 * tol:
            raise RankAmbiguityError("smallest pivot within 10x of the noise floor")
        for c in ker.T:
            full = np.zeros(fvals.size, dtype=complex)
            full[live] = c
            kernel_cols.append(full)
    kernel = np.array(kernel_cols).T if kernel_cols else np.zeros((fvals.size, 0), dtype=complex)
    return {"kernel": kernel, "dimension": kernel.shape[1], "pivots": pivots,
            "vanishing_orders": [int(j) for j in jj[~live]]}


# --- exceptional-angle scan -------------------------------------------------------


def phase_reduced(j: int, values: np.ndarray) -> np.ndarray:
    """(-i)^j f_j, real up to quadrature error by the conjugation symmetry."""
    return (-1j) ** abs(j) * np.asarray(values)


def refine_sign_change(f, fprime, lo: float, hi: float, tol: float, max_iter: int = 200) -> float:
    """Root of a real function in [lo, hi] with a sign change: Newton steps safeguarded by bisection."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise DomainError("no sign change in bracket")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x)
        if fx == 0:
            return x
        if np.sign(fx) == np.sign(flo):
            lo, flo = x, fx
        else:
            hi = x
        if hi - lo < tol:
            break
        d = fprime(x)
        step = x - fx / d if d != 0 else None
        x = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def golden_section_min(g, lo: float, hi: float, tol: float, max_iter: int = 300) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = g(d)
    return 0.5 * (a + b)


def bracket_candidates(gammas: np.ndarray, values: np.ndarray, errors: np.ndarray,
                       j: int, window: int = 50, depth: float = 1e-3) -> list[tuple]:
    """Brackets (lo_idx, hi_idx, kind) for zeros of f_j on a grid.

    Sign changes of the phase-reduced real part give ``sign-change`` brackets;
    local minima of |f_j|^2 below ``depth`` times the local maximum of |f_j|
    give ``minimum`` brackets.
    """
    real = phase_reduced(j, values).real
    mag = np.abs(values)
    out = []
    sign = np.sign(real)
    for i in np.flatnonzero(sign[:-1] * sign[1:] < 0):
        out.append((int(i), int(i + 1), "sign-change"))
    for i in range(1, mag.size - 1):
        if mag[i] <= mag[i - 1] and mag[i] <= mag[i + 1]:
            local = mag[max(0, i - window): i + window + 1].max()
            if mag[i] < depth * local and not any(lo <= i <= hi + 1 for lo, hi, _ in out):
                out.append((i - 1, i + 1, "minimum"))
                if errors[i] > mag[i]:
                    warnings.warn(f"unresolved minimum of |f_{j}| near gamma={gammas[i]:.6g}: "
                                  "quadrature error exceeds the dip depth")
    return sorted(out)


def find_exceptional_angles(N: int, gammas=None, refine_tol: float = 1e-10,
                            n_grid: int = 2000, gamma_max: float = GAMMA_MAX) -> dict:
    """Scan |f_j| for j = 0..N on a gamma grid and refine candidate zeros.

    Every candidate is an ESTIMATE: a bracketed numerical zero, not a proven
    member of the exceptional set.
    """
    if N < 0 or N > 6:
        raise DomainError("find_exceptional_angles supports 0 <= N <= 6")
    g = np.linspace(gamma_max / n_grid, gamma_max, n_grid) if gammas is None else np.asarray(gammas)
    curves, errs = {}, {}
    candidates = []
    phase_residual = 0.0
    for j in range(N + 1):
        vals, err = f_j_curve(N, j, g)
        curves[j], errs[j] = vals, err
        reduced = phase_reduced(j, vals)
        phase_residual = max(phase_residual, float(np.max(np.abs(reduced.imag) / np.maximum(np.abs(vals), 1e-300))))
        for lo, hi, kind in bracket_candidates(g, vals, err, j):
            a, b = float(g[lo]), float(g[hi])
            if kind == "sign-change":
                def real_f(x, j=j):
                    return phase_reduced(j, f_j(N, j, x).value).real

                def real_fp(x, j=j):
                    return phase_reduced(j, f_j_prime(N, j, x)).real

                root = refine_sign_change(real_f, real_fp, a, b, refine_tol)
            else:
                root = golden_section_min(lambda x, j=j: abs(f_j(N, j, x).value) ** 2, a, b, refine_tol)
            res = abs(f_j(N, j, root).value)
            candidates.append(ExceptionalCandidate(N, j, root, (a, b), res, kind))
    mags = np.array([np.abs(curves[j]) for j in range(N + 1)])
    errors = np.array([errs[j] for j in range(N + 1)])
    certified = np.all(mags > 10.0 * errors, axis=0)
    return {"N": N, "label": "ESTIMATE", "gamma_range": [float(g[0]), float(g[-1])],
            "grid": int(g.size), "candidates": candidates,
            "certified_nonvanishing_fraction": float(certified.mean()),
            "max_phase_reduction_residual": phase_residual,
            "curves": {"gamma": g, **{f"abs_f{j}": np.abs(curves[j]) for j in range(N + 1)}}}


def certify_at(N: int, gammas, tol: float = 1e-12) -> list[dict]:
    """min_j |f_j| versus 10x the error estimate at individual angles."""
    out = []
    for gamma in gammas:
        vals, errs = f_values(N, float(gamma), tol)
        ratio = np.abs(vals) / np.maximum(errs, 1e-300)
        out.append({"gamma": float(gamma), "min_abs_f": float(np.abs(vals).min()),
                    "max_error": float(errs.max()),
                    "certified": bool(np.all(np.abs(vals) > 10.0 * errs)),
                    "min_ratio": float(ratio.min())})
    return out
