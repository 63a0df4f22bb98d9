"""Fourier transforms of balls, intervals and cylinders; discrete Sobolev trends.

Transforms use ``f^(xi) = int f(x) e^{-i x . xi} dx``. Discrete H^{tau,2}
sums are grid surrogates: only their trend across a grid ladder is
meaningful, never the absolute value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .errors import DomainError, InsufficientRangeError, ResolutionError
from .specfun import bessel_j


def ball_volume(m: int) -> float:
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def chi_ball_hat_radial(m: int, r):
    """Transform of the unit-ball indicator in R^m as a function of |xi|."""
    if m < 2:
        raise DomainError("chi_ball_hat needs m >= 2")
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    val = (2 * math.pi) ** (m / 2) * safe ** (-m / 2) * bessel_j(m / 2, safe)
    val = np.where(r > 0, val, ball_volume(m))
    return val[()] if val.ndim == 0 else val


def chi_ball_hat(m: int, xi):
    """(2 pi)^{m/2} |xi|^{-m/2} J_{m/2}(|xi|); the ball volume at xi = 0."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != m:
        raise DomainError("frequency dimension does not match m")
    return chi_ball_hat_radial(m, np.linalg.norm(xi, axis=-1))


def chi_interval_hat(xi):
    """2 sin(xi)/xi, with the value 2 at xi = 0."""
    xi = np.asarray(xi, dtype=float)
    val = 2.0 * np.sinc(xi / math.pi)
    return val[()] if val.ndim == 0 else val


def cylinder_hat(xi_prime, xi_n):
    """Transform of B^m x [-1, 1] (unit ball times interval)."""
    xi_prime = np.atleast_1d(np.asarray(xi_prime, dtype=float))
    return chi_ball_hat(xi_prime.shape[-1], xi_prime) * chi_interval_hat(xi_n)


def envelope_decay_fit(func, r_min: float, r_max: float, samples: int = 200_000) -> dict:
    """Slope of log(local maxima of |func|) against log r over [r_min, r_max]."""
    if r_max / r_min < 10:
        raise InsufficientRangeError("decay fit needs at least one decade")
    r = np.geomspace(r_min, r_max, samples)
    a = np.abs(func(r))
    peaks = np.flatnonzero((a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:])) + 1
    if peaks.size < 4:
        raise InsufficientRangeError("too few oscillation maxima to fit an envelope")
    slope, intercept = np.polyfit(np.log(r[peaks]), np.log(a[peaks]), 1)
    return {"slope": float(slope), "intercept": float(intercept), "maxima": int(peaks.size)}


def cylinder_decay_fits(r_min: float = 10.0, r_max: float = 1e3, m: int = 2) -> dict:
    """Radial (ball factor) and axial (interval factor) envelope exponents."""
    radial = envelope_decay_fit(lambda r: chi_ball_hat_radial(m, r), r_min, r_max)
    axial = envelope_decay_fit(chi_interval_hat, r_min, r_max)
    return {"radial": radial["slope"], "axial": axial["slope"],
            "radial_target": -m / 2 - 0.5, "axial_target": -1.0}


# --- gridded indicators -----------------------------------------------------------


@dataclass(frozen=True)
class Shape2D:
    """A planar set used for Sobolev trends.

    kinds: ``cone-truncated`` (sector of radius 1), ``cylinder`` (the square
    [-1,1]^2, a 2D ball-times-interval), ``cone-weighted`` (``<x>^-alpha``
    times the sector, cut off at ``radius``).
    """

    kind: str = "cone-truncated"
    opening_angle: float = 1.0
    alpha: float = 2.0
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("cone-truncated", "cylinder", "cone-weighted"):
            raise DomainError(f"unknown shape {self.kind!r}")

    def bounding_box(self) -> tuple[float, float, float, float]:
        if self.kind == "cylinder":
            return -1.0, 1.0, -1.0, 1.0
        R = self.radius
        half = 0.5 * self.opening_angle
        return 0.0, R, -R * math.sin(half), R * math.sin(half)

    def values(self, x, y) -> np.ndarray:
        if self.kind == "cylinder":
            return ((np.abs(x) <= 1.0) & (np.abs(y) <= 1.0)).astype(float)
        r = np.hypot(x, y)
        inside = (np.abs(np.arctan2(y, x)) <= 0.5 * self.opening_angle) & (r <= self.radius)
        if self.kind == "cone-truncated":
            return inside.astype(float)
        return inside * (1.0 + r * r) ** (-0.5 * self.alpha)

    def box(self) -> tuple[float, float, float]:
        """Centre and side of the square box, twice the support diameter."""
        x0, x1, y0, y1 = self.bounding_box()
        diameter = max(x1 - x0, y1 - y0)
        return 0.5 * (x0 + x1), 0.5 * (y0 + y1), 2.0 * diameter


def sample_on_grid(shape: Shape2D, n: int) -> tuple[np.ndarray, float, float]:
    """Cell-centre samples on an n x n grid over the shape's box: (samples, h, side)."""
    cx, cy, side = shape.box()
    h = side / n
    t = -0.5 * side + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(cx + t, cy + t, indexing="ij")
    return shape.values(X, Y), h, side


def discrete_spectrum(samples: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """(|xi|^2 on the DFT grid, h^2 |DFT|^2)."""
    n = samples.shape[0]
    F = h * h * fft.fft2(samples)
    k = 2.0 * math.pi * fft.fftfreq(n, d=h)
    K2 = k[:, None] ** 2 + k[None, :] ** 2
    return K2, np.abs(F) ** 2


def sobolev_sum(samples: np.ndarray, h: float, taus) -> np.ndarray:
    """Sum of <xi>^{2 tau} |h^2 DFT|^2 / side^2 for each tau (Parseval-normalized)."""
    K2, P = discrete_spectrum(samples, h)
    side2 = (samples.shape[0] * h) ** 2
    weights = 1.0 + K2
    return np.array([np.sum(weights**t * P) / side2 for t in np.atleast_1d(taus)])


def parseval_gap(samples: np.ndarray, h: float) -> float:
    physical = np.sum(np.abs(samples) ** 2) * h * h
    spectral = sobolev_sum(samples, h, [0.0])[0]
    return abs(physical - spectral) / max(physical, 1e-300)


@dataclass
class SobolevTrend:
    shape: str
    taus: list
    grids: list
    table: list
    cauchy: dict = field(default_factory=dict)
    growth: dict = field(default_factory=dict)
    verdict: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"shape": self.shape, "taus": self.taus, "grids": self.grids, "table": self.table,
                "cauchy": self.cauchy, "growth": self.growth, "verdict": self.verdict}


def h_tau_norm_trend(shape: Shape2D | str = "cone-truncated", taus=(0.0, 0.4, 0.75),
                     grids=(128, 256, 512, 1024), stable: float = 0.05,
                     divergent: float = 1.15) -> SobolevTrend:
    """Discrete H^{tau,2} sums across a grid ladder with per-tau verdicts.

    ``stable`` if the last Cauchy difference is within ``stable``; ``divergent``
    if the last growth ratio exceeds ``divergent``; otherwise ``inconclusive``.
    """
    if isinstance(shape, str):
        shape = Shape2D(shape)
    grids = sorted(int(g) for g in grids)
    if len(grids) < 2:
        raise InsufficientRangeError("need at least two grid sizes")
    taus = [float(t) for t in taus]
    rows = []
    sums = {}
    for n in grids:
        samples, h, _ = sample_on_grid(shape, n)
        vals = sobolev_sum(samples, h, taus)
        for t, v in zip(taus, vals):
            sums[(n, t)] = float(v)
            rows.append({"grid": n, "tau": t, "value": float(v)})
    trend = SobolevTrend(shape.kind, taus, grids, rows)
    for t in taus:
        last, prev = sums[(grids[-1], t)], sums[(grids[-2], t)]
        key = f"{t:g}"
        trend.cauchy[key] = abs(last - prev) / last
        trend.growth[key] = last / prev
        if trend.cauchy[key] <= stable:
            trend.verdict[key] = "stable"
        elif trend.growth[key] > divergent:
            trend.verdict[key] = "divergent"
        else:
            trend.verdict[key] = "inconclusive"
    return trend


# --- dilation scaling -------------------------------------------------------------


def smooth_bump(x, y) -> np.ndarray:
    r2 = x * x + y * y
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def disk_indicator(x, y) -> np.ndarray:
    return (x * x + y * y <= 1.0).astype(float)


def dilation_scaling_check(psi=smooth_bump, lambdas=(1, 2, 4, 8, 16), tau: float = 0.0,
                           n: int = 512, method: str = "rescaled") -> dict:
    """Slope of log ||psi(lambda .)||_{H^{tau,2}} against log lambda (n = 2).

    ``rescaled``: sample psi once on the box [-2, 2]^2 and use
    ``||psi(l .)||^2 = l^-n sum <l eta>^{2 tau} |psi^(eta)|^2 d eta``, which is
    exact for the discrete transform. ``grid``: sample ``psi(l x)`` directly,
    which requires the dilated support to span at least 8 cells.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas < 1.0) or lambdas.max() > 16.0:
        raise DomainError("dilation factors must lie in [1, 16]")
    side = 4.0
    h = side / n
    t = -0.5 * side + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(t, t, indexing="ij")
    dim = 2
    norms = []
    if method == "rescaled":
        K2, P = discrete_spectrum(psi(X, Y), h)
        for lam in lambdas:
            s = lam ** (-dim) * np.sum((1.0 + lam * lam * K2) ** tau * P) / side**2
            norms.append(math.sqrt(s))
    elif method == "grid":
        for lam in lambdas:
            if 2.0 / lam < 8.0 * h:
                raise ResolutionError("dilated support spans fewer than 8 cells")
            norms.append(math.sqrt(sobolev_sum(psi(lam * X, lam * Y), h, [tau])[0]))
    else:
        raise DomainError("method must be 'rescaled' or 'grid'")
    slope = float(np.polyfit(np.log(lambdas), np.log(norms), 1)[0])
    return {"slope": slope, "norms": norms, "lambdas": lambdas.tolist(),
            "bound": tau - dim / 2 + 0.1, "passes": slope <= tau - dim / 2 + 0.1}


def dyadic_terms(alpha: float = 2.0, opening_angle: float = 1.0, count: int = 8) -> dict:
    """L^2 norms of <x>^-alpha chi_{C(1,2)}(x / 2^j) in 2D and their ratios.

    ``C(1,2)`` is the sector between radii 1 and 2; the norms are exact:
    ``int_{2^j}^{2^{j+1}} (1+r^2)^-alpha r dr`` in closed form times the opening angle.
    """
    def radial(a, b):
        if alpha == 1.0:
            return 0.5 * math.log((1 + b * b) / (1 + a * a))
        return ((1 + b * b) ** (1 - alpha) - (1 + a * a) ** (1 - alpha)) / (2 * (1 - alpha))

    terms = [math.sqrt(opening_angle * radial(2.0**j, 2.0 ** (j + 1))) for j in range(count)]
    ratios = [terms[j + 1] / terms[j] for j in range(count - 1)]
    limit = 2.0 ** (1.0 - alpha)
    return {"terms": terms, "ratios": ratios, "limit": limit, "partial_sums": np.cumsum(terms).tolist()}


def dft_disk_check(xi_norm: float = 10.0, n: int = 1024, directions: int = 8) -> dict:
    """Riemann-sum transform of the gridded unit-disk indicator vs the closed form.

    The sum is evaluated directly at ``|xi| = xi_norm`` (separably, so any
    direction is allowed) and averaged over a few directions.
    """
    side = 4.0
    h = side / n
    t = -0.5 * side + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(t, t, indexing="ij")
    chi = disk_indicator(X, Y)
    vals = []
    for phi in math.pi * np.arange(directions) / (2 * directions):
        e1 = np.exp(-1j * xi_norm * math.cos(phi) * t)
        e2 = np.exp(-1j * xi_norm * math.sin(phi) * t)
        vals.append((e1 @ chi @ e2) * h * h)
    numeric = complex(np.mean(vals))
    exact = float(chi_ball_hat_radial(2, xi_norm))
    return {"numeric": numeric, "exact": exact, "relative_error": abs(numeric - exact) / abs(exact),
            "spread": float(np.ptp(np.real(vals)))}
