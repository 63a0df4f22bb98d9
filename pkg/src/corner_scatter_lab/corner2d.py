"""Determinant certificate for the 2D corner system.

For ``H = a (x1 + i x2)^N + b (x1 - i x2)^N`` on a sector of opening ``L``,
vanishing of the Laplace transform on ``W_0`` is the 2x2 system

    [[chi(2), chi(2N+2)], [chi(2N+2), chi(2)]] @ (a, b) = 0,

with ``chi(k) = 2 sin(kL/2)/k``. Its determinant factors into
``residual(N, L, +) * residual(N, L, -)`` and has no zero in ``(0, pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateError, DomainError

EPS = np.finfo(float).eps
SIGNS = ("+", "-")


def _check_L(L):
    L = np.asarray(L, dtype=float)
    if np.any((L <= 0) | (L >= math.pi)):
        raise DomainError("L must lie in (0, pi)")
    return L


def chi_hat(L: float, k):
    """Fourier coefficient of the indicator of [-L/2, L/2]: 2 sin(kL/2)/k, and L at k = 0."""
    _check_L(L)
    k = np.asarray(k, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(k == 0, L, 2.0 * np.sin(0.5 * k * L) / np.where(k == 0, 1.0, k))
    return val[()] if val.ndim == 0 else val


def coefficient_matrix(N: int, L: float) -> np.ndarray:
    """Rows are the equations for omega' = +e_perp and omega' = -e_perp."""
    if N == 0:
        return np.array([[chi_hat(L, 2.0)]])
    c2, cn = chi_hat(L, 2.0), chi_hat(L, 2.0 * N + 2.0)
    return np.array([[c2, cn], [cn, c2]])


def system_determinant(N: int, L):
    if N < 1:
        raise DomainError("the 2x2 system needs N >= 1")
    L = _check_L(L)
    return chi_hat_array(L, 2.0) ** 2 - chi_hat_array(L, 2.0 * N + 2.0) ** 2


def chi_hat_array(L, k: float):
    return 2.0 * np.sin(0.5 * k * np.asarray(L)) / k


def residual(N: int, L, sign: str):
    """sin L - s sin((N+1)L)/(N+1) with s = +1 for sign '+' and s = -1 for '-'."""
    if N < 1:
        raise DomainError("residual needs N >= 1")
    s = _sign(sign)
    L = np.asarray(L, dtype=float)
    return np.sin(L) - s * np.sin((N + 1) * L) / (N + 1)


def _sign(sign: str) -> float:
    if sign not in SIGNS:
        raise DomainError("sign must be '+' or '-'")
    return 1.0 if sign == "+" else -1.0


def residual_derivative(N: int, L, sign: str):
    return np.cos(L) - _sign(sign) * np.cos((N + 1) * np.asarray(L, dtype=float))


def _sin_abs_max(c: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Rigorous max of |sin(c L)| for L in [lo, hi] (cellwise)."""
    a, b = c * lo, c * hi
    # |sin| peaks at pi/2 + k pi
    k = np.ceil((a - 0.5 * math.pi) / math.pi)
    peak = 0.5 * math.pi + k * math.pi <= b
    return np.where(peak, 1.0, np.maximum(np.abs(np.sin(a)), np.abs(np.sin(b))))


def _cos_abs_max(c: float, lo, hi):
    a, b = c * lo, c * hi
    k = np.ceil(a / math.pi)
    peak = k * math.pi <= b
    return np.where(peak, 1.0, np.maximum(np.abs(np.cos(a)), np.abs(np.cos(b))))


def derivative_bound(N: int, sign: str, lo, hi) -> np.ndarray:
    """Cellwise upper bound of |d/dL residual| from the product forms

    cos L - cos((N+1)L) = 2 sin((N+2)L/2) sin(NL/2),
    cos L + cos((N+1)L) = 2 cos((N+2)L/2) cos(NL/2).
    """
    if sign == "+":
        bound = 2.0 * _sin_abs_max(0.5 * (N + 2), lo, hi) * _sin_abs_max(0.5 * N, lo, hi)
    else:
        bound = 2.0 * _cos_abs_max(0.5 * (N + 2), lo, hi) * _cos_abs_max(0.5 * N, lo, hi)
    return np.minimum(bound, 2.0)


@dataclass
class Certificate:
    N: int
    epsilon: float
    grid: int
    parts: dict = field(default_factory=dict)
    min_abs_residual: dict = field(default_factory=dict)
    certified_lower_bound: dict = field(default_factory=dict)
    min_abs_determinant: float = float("nan")
    passed: bool = False

    def to_dict(self) -> dict:
        return {"N": self.N, "epsilon": self.epsilon, "grid": self.grid, "parts": self.parts,
                "min_abs_residual": self.min_abs_residual,
                "certified_lower_bound": self.certified_lower_bound,
                "min_abs_determinant": self.min_abs_determinant, "passed": self.passed}


def _part_i(N: int, sign: str, eps: float, grid: int) -> dict:
    """Positivity of the residual on (0, pi/(N+1)]."""
    end = math.pi / (N + 1)
    edges = np.linspace(min(eps, 0.5 * end), end, grid + 1)
    lo, hi = edges[:-1], edges[1:]
    if sign == "+":
        # D = 2 sin((N+2)L/2) sin(NL/2); both arguments stay in (0, pi) on the
        # interval, and |sin| is concave there, so each cell minimum sits at an endpoint.
        f1 = np.minimum(np.sin(0.5 * (N + 2) * lo), np.sin(0.5 * (N + 2) * hi))
        f2 = np.minimum(np.sin(0.5 * N * lo), np.sin(0.5 * N * hi))
        lower = 2.0 * f1 * f2
        sampled = residual_derivative(N, edges, sign)
        ok = bool(np.all(lower > 0) and np.all(sampled > 0))
        return {"argument": "derivative cos L - cos((N+1)L) > 0 from residual(0) = 0",
                "min_sampled": float(sampled.min()), "min_cell_bound": float(lower.min()), "holds": ok}
    # sin L > 0 and sin((N+1)L) >= 0 on (0, pi/(N+1)]: termwise nonnegativity
    t1 = np.minimum(np.sin(lo), np.sin(hi))
    t2 = np.minimum(np.sin((N + 1) * lo), np.sin((N + 1) * hi))
    t2 = np.where(np.abs(t2) < 4 * EPS, 0.0, t2)
    sampled = residual(N, edges, sign)
    ok = bool(np.all(t1 > 0) and np.all(t2 >= 0) and np.all(sampled > 0))
    return {"argument": "sin L > 0 and sin((N+1)L) >= 0 termwise",
            "min_sampled": float(sampled.min()), "min_cell_bound": float(t1.min()), "holds": ok}


def _part_ii(N: int, grid: int) -> dict:
    """sin L > 1/(N+1) on [pi/(N+1), N pi/(N+1)], hence |residual| >= sin L - 1/(N+1) > 0."""
    a, b = math.pi / (N + 1), N * math.pi / (N + 1)
    edges = np.linspace(a, b, grid + 1)
    # sin is concave on [0, pi]: cell minima at endpoints
    lower = np.minimum(np.sin(edges[:-1]), np.sin(edges[1:])) if N > 1 else np.sin(edges)
    margin = float(lower.min() - 1.0 / (N + 1))
    return {"argument": "sin L > 1/(N+1)", "min_margin": margin, "holds": margin > 0}


def _part_iii(N: int, rng: np.random.Generator, samples: int = 64) -> dict:
    """residual(N, pi - L, s) = residual(N, L, s (-1)^N): reduces [N pi/(N+1), pi) to part (i)."""
    L = rng.uniform(0.0, math.pi, samples)
    worst = 0.0
    for sign in SIGNS:
        mapped = sign if N % 2 == 0 else ("-" if sign == "+" else "+")
        worst = max(worst, float(np.abs(residual(N, math.pi - L, sign) - residual(N, L, mapped)).max()))
    return {"argument": "L -> pi - L maps the last interval onto the first", "max_identity_error": worst,
            "holds": worst <= 1e-14}


def verify_no_roots(N: int, epsilon: float = 1e-3, grid: int = 100_000, seed: int = 0) -> Certificate:
    """Three-part certificate plus a Lipschitz-certified brute-force scan on [eps, pi - eps]."""
    if N < 1:
        raise DomainError("verify_no_roots needs N >= 1")
    if not 0 < epsilon < 0.5 * math.pi:
        raise DomainError("epsilon must lie in (0, pi/2)")
    cert = Certificate(N, epsilon, grid)
    rng = np.random.default_rng(seed)
    cert.parts["ii"] = _part_ii(N, grid)
    cert.parts["iii"] = _part_iii(N, rng)
    edges = np.linspace(epsilon, math.pi - epsilon, grid + 1)
    lo, hi = edges[:-1], edges[1:]
    dets = []
    ok = cert.parts["ii"]["holds"] and cert.parts["iii"]["holds"]
    for sign in SIGNS:
        part = _part_i(N, sign, epsilon, grid)
        cert.parts[f"i{sign}"] = part
        ok = ok and part["holds"]
        r = np.abs(residual(N, edges, sign))
        M = derivative_bound(N, sign, lo, hi)
        slack = 8.0 * EPS
        bound = 0.5 * (r[:-1] + r[1:] - M * (hi - lo)) - slack
        cert.min_abs_residual[sign] = float(r.min())
        cert.certified_lower_bound[sign] = float(bound.min())
        ok = ok and bound.min() > 0
        dets.append(r)
    cert.min_abs_determinant = float((dets[0] * dets[1]).min())
    cert.passed = bool(ok and cert.min_abs_determinant > 0)
    if not cert.passed:
        raise CertificateError(f"certificate failed for N={N}: {cert.to_dict()}")
    return cert


def kernel_basis(M: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal kernel basis (columns) of a small matrix via SVD."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    _, s, vh = np.linalg.svd(M)
    scale = max(s.max() if s.size else 0.0, 1.0)
    rank = int(np.sum(s > rtol * scale))
    return vh[rank:].conj().T


def solve_coefficients(N: int, L: float, matrix: np.ndarray | None = None) -> np.ndarray:
    """Kernel of the coefficient system; shape (unknowns, kernel dimension)."""
    M = coefficient_matrix(N, L) if matrix is None else matrix
    return kernel_basis(M)
