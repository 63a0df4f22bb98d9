"""Complex geometrical optics solutions u = e^{i zeta.x}(1 + psi) in 2D.

The remainder solves ``(-Delta + 2 zeta.D + V) psi = -V`` with ``D = -i grad``.
It is computed on a periodic box by Neumann iteration with the inverse
Fourier multiplier ``G_zeta`` of symbol ``|xi|^2 + 2 zeta.xi``. The symbol
vanishes at ``xi = 0`` and ``xi = -2 Re zeta``; the grid is shifted by half a
frequency step along ``Re zeta`` (antiperiodic fields), so neither zero is
ever sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .errors import DivergenceError, DomainError, InsufficientRangeError, ResolutionError, ResonanceError


@dataclass(frozen=True)
class CgoFrequency:
    zeta: tuple
    lam: float

    def __post_init__(self):
        z = np.asarray(self.zeta, dtype=complex)
        if z.shape != (2,):
            raise DomainError("zeta must be a complex 2-vector")
        if self.lam <= 0:
            raise DomainError("lambda must be positive")
        scale = max(float(np.sum(np.abs(z) ** 2)), 1.0)
        if abs(np.sum(z * z) - self.lam) > 1e-12 * scale:
            raise DomainError("zeta . zeta must equal lambda")
        if abs(float(z.real @ z.imag)) > 1e-12 * scale:
            raise DomainError("Re zeta and Im zeta must be orthogonal")
        object.__setattr__(self, "zeta", tuple(complex(c) for c in z))

    @classmethod
    def along_e1(cls, re: float, lam: float) -> "CgoFrequency":
        """zeta = re e1 + i sqrt(re^2 - lam) e2."""
        if re * re <= lam:
            raise DomainError("need |Re zeta|^2 > lambda")
        return cls((re, 1j * math.sqrt(re * re - lam)), lam)

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.zeta, dtype=complex)

    @property
    def re_norm(self) -> float:
        return float(np.linalg.norm(self.vector.real))

    def to_dict(self) -> dict:
        return {"zeta": list(self.zeta), "lambda": self.lam}


@dataclass
class GridField:
    half_width: float
    samples: np.ndarray

    def __post_init__(self):
        n = self.samples.shape[0]
        if self.samples.shape != (n, n) or n < 128 or n & (n - 1):
            raise DomainError("grid fields are square with a power-of-two resolution >= 128")

    @property
    def resolution(self) -> int:
        return self.samples.shape[0]

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.resolution

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x = -self.half_width + self.h * (np.arange(self.resolution) + 0.5)
        return np.meshgrid(x, x, indexing="ij")

    def lq_norm(self, q: float) -> float:
        return float((np.sum(np.abs(self.samples) ** q) * self.h**2) ** (1.0 / q))

    def l2_norm(self) -> float:
        return self.lq_norm(2.0)


def frequency_offset(half_width: float) -> float:
    """Half a frequency step, pi / (2 B)."""
    return math.pi / (2.0 * half_width)


class Multiplier:
    """Forward and inverse twisted-grid multipliers for one (zeta, grid) pair."""

    def __init__(self, zeta: CgoFrequency, half_width: float, n: int, offset: bool = True):
        z = zeta.vector
        if abs(z.real[1]) > 1e-12 * max(abs(z.real[0]), 1.0):
            raise DomainError("the grid offset is implemented for Re zeta along e1")
        self.zeta, self.half_width, self.n = zeta, half_width, n
        h = 2.0 * half_width / n
        x = -half_width + h * (np.arange(n) + 0.5)
        self.kappa = frequency_offset(half_width) if offset else 0.0
        k = 2.0 * math.pi * fft.fftfreq(n, d=h)
        nyquist = math.pi / h
        if 2.0 * zeta.re_norm > 0.8 * nyquist:
            raise ResolutionError(f"2|Re zeta| = {2 * zeta.re_norm:.4g} exceeds 0.8 x Nyquist {nyquist:.4g}")
        K1, K2 = np.meshgrid(k + self.kappa, k, indexing="ij")
        self.xi1, self.xi2 = K1, K2
        self.symbol = K1 * K1 + K2 * K2 + 2.0 * (z[0] * K1 + z[1] * K2)
        self.twist = np.exp(-1j * self.kappa * x)[:, None]
        self.min_symbol = float(np.abs(self.symbol).min())

    def check_resonance(self):
        if self.min_symbol < 1e-6 * self.zeta.re_norm**2:
            raise ResonanceError(f"min |symbol| = {self.min_symbol:.3g} on the grid")

    def inverse(self, f: np.ndarray) -> np.ndarray:
        self.check_resonance()
        return fft.ifft2(fft.fft2(f * self.twist) / self.symbol) / self.twist

    def forward(self, g: np.ndarray) -> np.ndarray:
        return fft.ifft2(fft.fft2(g * self.twist) * self.symbol) / self.twist


def multiplier_apply(f: GridField, zeta: CgoFrequency) -> GridField:
    """G_zeta f: inverse multiplier with symbol 1/(|xi|^2 + 2 zeta.xi) on the offset grid."""
    M = Multiplier(zeta, f.half_width, f.resolution)
    return GridField(f.half_width, M.inverse(f.samples))


def symbol_minima(zeta: CgoFrequency, half_width: float, n: int) -> list[tuple[float, float]]:
    """Frequencies of the two smallest local minima of |symbol| on the unshifted grid."""
    M = Multiplier(zeta, half_width, n, offset=False)
    a = np.abs(M.symbol)
    order = np.argsort(a, axis=None)
    found: list[tuple[float, float]] = []
    step = 2.0 * math.pi / (2.0 * half_width)
    for idx in order:
        i, j = np.unravel_index(idx, a.shape)
        p = (float(M.xi1[i, j]), float(M.xi2[i, j]))
        if all(math.hypot(p[0] - q[0], p[1] - q[1]) > 2.5 * step for q in found):
            found.append(p)
        if len(found) == 2:
            break
    return found


def sector_potential(half_width: float, n: int, opening_angle: float = 1.0, axis_angle: float = 0.7,
                     sigma: float = 0.25, amplitude: float = 1.0) -> GridField:
    """amplitude * chi_C(x) * exp(-(|x|/sigma)^2), truncated where the Gaussian drops below 1e-14."""
    cut = sigma * math.sqrt(14.0 * math.log(10.0))
    if cut >= half_width:
        raise ResolutionError("Gaussian truncation radius does not fit in the box")
    x = -half_width + (2.0 * half_width / n) * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(x, x, indexing="ij")
    r = np.hypot(X, Y)
    d = np.angle(np.exp(1j * (np.arctan2(Y, X) - axis_angle)))
    V = amplitude * ((np.abs(d) <= 0.5 * opening_angle) & (r <= cut)) * np.exp(-(r / sigma) ** 2)
    return GridField(half_width, V.astype(complex))


@dataclass
class CgoResult:
    psi: GridField
    zeta: CgoFrequency
    iterations: int
    residual: float
    contraction_ratios: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"zeta": self.zeta, "iterations": self.iterations, "residual": self.residual,
                "contraction_ratios": self.contraction_ratios, "residual_history": self.residual_history}


def cgo_solve(V: GridField, zeta: CgoFrequency, max_iter: int = 100, tol: float = 1e-10) -> CgoResult:
    """Neumann iteration psi <- G_zeta(-V - V psi) until the relative residual is below tol."""
    M = Multiplier(zeta, V.half_width, V.resolution)
    v = V.samples
    vnorm = float(np.linalg.norm(v))
    psi = np.zeros_like(v, dtype=complex)
    if vnorm == 0.0:
        return CgoResult(GridField(V.half_width, psi), zeta, 1, 0.0)
    ratios, history = [], []
    prev_step = None
    rising = 0
    for it in range(1, max_iter + 1):
        new = M.inverse(-v - v * psi)
        step = float(np.linalg.norm(new - psi))
        if prev_step:
            ratios.append(step / prev_step)
        prev_step = step
        psi = new
        res = float(np.linalg.norm(M.forward(psi) + v * psi + v)) / vnorm
        if history and res > history[-1]:
            rising += 1
            if rising >= 3:
                raise DivergenceError(f"Neumann series diverges at |Re zeta| = {zeta.re_norm:.4g}")
        else:
            rising = 0
        history.append(res)
        if res <= tol:
            break
    return CgoResult(GridField(V.half_width, psi), zeta, it, history[-1], ratios, history)


def snap_re_zeta(t: float, half_width: float) -> float:
    """Nearest positive multiple of pi/(2B): keeps -2 Re zeta farthest from the offset grid."""
    step = frequency_offset(half_width)
    return max(1, round(t / step)) * step


@dataclass
class DecayStudy:
    re_zeta: list
    norms: list
    slope: float
    delta_hat: float
    iterations: list
    residuals: list
    max_contraction: list
    threshold: float | None
    q: float = 6.0

    def to_dict(self) -> dict:
        return {"re_zeta": self.re_zeta, "norms": self.norms, "slope": self.slope,
                "delta_hat": self.delta_hat, "iterations": self.iterations,
                "residuals": self.residuals, "max_contraction": self.max_contraction,
                "contraction_threshold_re_zeta": self.threshold, "q": self.q,
                "target": -1.0 / 3.0 - 0.05}


def decay_study(V: GridField, re_zetas, lam: float = 1.0, q: float = 6.0, tol: float = 1e-10,
                max_iter: int = 100) -> DecayStudy:
    """Slope of log ||psi||_{L^q} against log |Re zeta| over the given list."""
    re_zetas = np.asarray(re_zetas, dtype=float)
    if re_zetas.size < 8 or re_zetas.max() / re_zetas.min() < 10.0:
        raise InsufficientRangeError("need at least 8 values of |Re zeta| spanning a decade")
    snapped = [snap_re_zeta(t, V.half_width) for t in re_zetas]
    norms, its, res, worst = [], [], [], []
    for t in snapped:
        out = cgo_solve(V, CgoFrequency.along_e1(t, lam), max_iter, tol)
        norms.append(out.psi.lq_norm(q))
        its.append(out.iterations)
        res.append(out.residual)
        worst.append(max(out.contraction_ratios) if out.contraction_ratios else 0.0)
    slope = float(np.polyfit(np.log(snapped), np.log(norms), 1)[0])
    threshold = None
    for i in range(len(snapped)):
        if all(w <= 0.6 for w in worst[i:]):
            threshold = snapped[i]
            break
    return DecayStudy(snapped, norms, slope, -slope - 2.0 / q, its, res, worst, threshold, q)


def conjugation_identity_check(zeta: CgoFrequency, half_width: float = 4.0, n: int = 256,
                               width: float = 0.5) -> float:
    """Relative gap between e^{-i zeta.x}(-Delta - lambda)(e^{i zeta.x} w) and (-Delta + 2 zeta.D) w.

    Both sides are computed with periodic spectral derivatives for the
    Gaussian ``w = exp(-|x|^2/width^2)``; the exponential weight must stay
    small at the box boundary, so only moderate |zeta| are meaningful.
    """
    h = 2.0 * half_width / n
    x = -half_width + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(x, x, indexing="ij")
    z = zeta.vector
    w = np.exp(-(X * X + Y * Y) / width**2)
    phase = np.exp(1j * (z[0] * X + z[1] * Y))
    k = 2.0 * math.pi * fft.fftfreq(n, d=h)
    K1, K2 = np.meshgrid(k, k, indexing="ij")

    def neg_laplacian(f):
        return fft.ifft2((K1 * K1 + K2 * K2) * fft.fft2(f))

    left = (neg_laplacian(phase * w) - zeta.lam * phase * w) / phase
    right = fft.ifft2((K1 * K1 + K2 * K2 + 2.0 * (z[0] * K1 + z[1] * K2)) * fft.fft2(w))
    interior = X * X + Y * Y <= (2.0 * width) ** 2
    return float(np.abs(left - right)[interior].max() / np.abs(right)[interior].max())
