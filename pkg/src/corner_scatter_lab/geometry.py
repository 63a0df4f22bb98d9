"""Cones, harmonic polynomials and admissible complex frequencies.

Conventions
-----------
* A 2D sector opens symmetrically about its axis (default ``e1``) with
  full opening angle ``L`` in (0, pi).
* A 3D circular cone is stored by its cap half-angle ``gamma`` in (0, pi/2)
  about its axis (default ``e3``); the opening angle is derived as ``2 gamma``.
* ``rho`` vectors are complex and dotted bilinearly (no conjugation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .specfun import assoc_legendre

ORTHO_TOL = 1e-14
UNIT_TOL = 1e-12


def _unit(v, dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise DomainError(f"expected a vector of length {dim}")
    n = np.linalg.norm(v)
    if abs(n - 1.0) > UNIT_TOL:
        raise DomainError("axis/direction must be a unit vector")
    return v


def rotation_2d(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def rotation_to(axis) -> np.ndarray:
    """Rotation matrix of SO(3) taking ``e3`` to the unit vector ``axis``."""
    axis = np.asarray(axis, dtype=float)
    e3 = np.array([0.0, 0.0, 1.0])
    c = float(axis @ e3)
    v = np.cross(e3, axis)
    s = np.linalg.norm(v)
    if s < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    k = v / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * K @ K


def e1_to_en(dim: int) -> np.ndarray:
    """Rotation taking ``e1`` to ``e_n`` (maps the 2D sector convention to the n-dimensional one)."""
    if dim == 2:
        return rotation_2d(0.5 * math.pi)
    return rotation_to(np.array([1.0, 0.0, 0.0])).T


@dataclass(frozen=True)
class Sector2D:
    opening_angle: float
    axis: tuple = (1.0, 0.0)

    def __post_init__(self):
        if not 0.0 < self.opening_angle < math.pi:
            raise DomainError("sector opening angle must lie in (0, pi)")
        object.__setattr__(self, "axis", tuple(float(c) for c in _unit(self.axis, 2)))

    dim = 2

    @property
    def axis_angle(self) -> float:
        return math.atan2(self.axis[1], self.axis[0])

    def direction(self, psi) -> np.ndarray:
        """Unit vectors at angular offset ``psi`` from the axis, shape (..., 2)."""
        phi = self.axis_angle + np.asarray(psi, dtype=float)
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = np.angle(np.exp(1j * (np.arctan2(x[..., 1], x[..., 0]) - self.axis_angle)))
        return np.abs(d) <= 0.5 * self.opening_angle

    def measure(self) -> float:
        """Length of the arc cut out on the unit circle."""
        return self.opening_angle

    def to_dict(self) -> dict:
        return {"kind": "sector2d", "opening_angle": self.opening_angle, "axis": list(self.axis)}


@dataclass(frozen=True)
class Cone3D:
    cap_half_angle: float
    axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not 0.0 < self.cap_half_angle < 0.5 * math.pi:
            raise DomainError("cap half-angle must lie in (0, pi/2)")
        object.__setattr__(self, "axis", tuple(float(c) for c in _unit(self.axis, 3)))

    dim = 3

    @property
    def opening_angle(self) -> float:
        return 2.0 * self.cap_half_angle

    @classmethod
    def from_opening_angle(cls, opening_angle: float, axis=(0.0, 0.0, 1.0)) -> "Cone3D":
        return cls(0.5 * opening_angle, axis)

    def direction(self, alpha, beta) -> np.ndarray:
        """Unit vectors at polar angle ``alpha`` and azimuth ``beta`` about the axis."""
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        sa = np.sin(alpha)
        local = np.stack(np.broadcast_arrays(sa * np.cos(beta), sa * np.sin(beta), np.cos(alpha)), axis=-1)
        if self.axis == (0.0, 0.0, 1.0):
            return local
        return local @ rotation_to(self.axis).T

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return x @ np.asarray(self.axis) >= np.cos(self.cap_half_angle) * r

    def measure(self) -> float:
        """Area of the spherical cap."""
        return 2.0 * math.pi * (1.0 - math.cos(self.cap_half_angle))

    def to_dict(self) -> dict:
        return {"kind": "cone3d", "cap_half_angle": self.cap_half_angle,
                "opening_angle": self.opening_angle, "axis": list(self.axis)}


def cone_from_dict(d: dict):
    if d["kind"] == "sector2d":
        return Sector2D(d["opening_angle"], tuple(d["axis"]))
    if d["kind"] == "cone3d":
        return Cone3D(d["cap_half_angle"], tuple(d["axis"]))
    raise DomainError(f"unknown cone kind {d['kind']!r}")


@dataclass(frozen=True)
class HarmonicPolynomial2D:
    """``a (x1 + i x2)^N + b (x1 - i x2)^N``; for ``N = 0`` just the constant ``a``."""

    N: int
    a: complex = 1.0
    b: complex = 0.0

    dim = 2

    def __post_init__(self):
        if self.N < 0:
            raise DomainError("degree must be nonnegative")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", 0j if self.N == 0 else complex(self.b))

    def on_sphere(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if self.N == 0:
            return np.full(phi.shape, self.a, dtype=complex)
        return self.a * np.exp(1j * self.N * phi) + self.b * np.exp(-1j * self.N * phi)

    def coefficients(self) -> np.ndarray:
        return np.array([self.a, self.b])

    def scaled(self, c: complex) -> "HarmonicPolynomial2D":
        return HarmonicPolynomial2D(self.N, c * self.a, c * self.b)

    def to_dict(self) -> dict:
        return {"kind": "harmonic2d", "N": self.N, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class HarmonicPolynomial3D:
    """``sum_j a_j r^N P_N^{|j|}(cos alpha) e^{i j beta}`` in spherical coordinates about ``e3``.

    ``coeffs`` holds ``a_{-N}, ..., a_N``.
    """

    N: int
    coeffs: tuple = field(default=(1.0,))

    dim = 3

    def __post_init__(self):
        if self.N < 0:
            raise DomainError("degree must be nonnegative")
        c = tuple(complex(v) for v in self.coeffs)
        if len(c) != 2 * self.N + 1:
            raise DomainError("need 2N+1 coefficients a_{-N}..a_N")
        object.__setattr__(self, "coeffs", c)

    def coefficient(self, j: int) -> complex:
        return self.coeffs[j + self.N]

    def on_sphere_angles(self, alpha, beta) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        t = np.cos(alpha)
        out = np.zeros(np.broadcast_shapes(alpha.shape, beta.shape), dtype=complex)
        legendre = {}
        for j in range(-self.N, self.N + 1):
            a = self.coefficient(j)
            if a == 0:
                continue
            m = abs(j)
            if m not in legendre:
                legendre[m] = assoc_legendre(self.N, m, t)
            out = out + a * legendre[m] * np.exp(1j * j * beta)
        return out

    def on_sphere(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        alpha = np.arccos(np.clip(theta[..., 2], -1.0, 1.0))
        beta = np.arctan2(theta[..., 1], theta[..., 0])
        return self.on_sphere_angles(alpha, beta)

    def coefficients(self) -> np.ndarray:
        return np.array(self.coeffs)

    def scaled(self, c: complex) -> "HarmonicPolynomial3D":
        return HarmonicPolynomial3D(self.N, tuple(c * v for v in self.coeffs))

    def to_dict(self) -> dict:
        return {"kind": "harmonic3d", "N": self.N, "coeffs": list(self.coeffs)}


def harmonic_from_dict(d: dict):
    def cplx(v):
        return complex(v["re"], v["im"]) if isinstance(v, dict) else complex(v)

    if d["kind"] == "harmonic2d":
        return HarmonicPolynomial2D(d["N"], cplx(d["a"]), cplx(d["b"]))
    if d["kind"] == "harmonic3d":
        return HarmonicPolynomial3D(d["N"], tuple(cplx(v) for v in d["coeffs"]))
    raise DomainError(f"unknown polynomial kind {d['kind']!r}")


def eval_harmonic(H, x) -> np.ndarray:
    """Value of the harmonic polynomial at points ``x`` of shape (..., dim)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != H.dim:
        raise DomainError("point dimension does not match the polynomial")
    if H.dim == 2:
        if H.N == 0:
            out = np.full(x.shape[:-1], H.a, dtype=complex)
        else:
            z = x[..., 0] + 1j * x[..., 1]
            out = H.a * z**H.N + H.b * np.conj(z) ** H.N
    else:
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        theta = x / safe[..., None]
        theta = np.where((r > 0)[..., None], theta, np.array([0.0, 0.0, 1.0]))
        out = H.on_sphere(theta) * r**H.N
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class WLambdaPoint:
    """Admissible frequency ``rho = tau omega + i sqrt(tau^2 + lambda) omega_perp``."""

    tau: float
    omega: tuple
    omega_perp: tuple
    lam: float = 0.0

    def __post_init__(self):
        if self.tau <= 0:
            raise DomainError("tau must be positive")
        if self.lam < 0:
            raise DomainError("lambda must be nonnegative")
        w = np.asarray(self.omega, dtype=float)
        wp = np.asarray(self.omega_perp, dtype=float)
        if w.shape != wp.shape or w.ndim != 1:
            raise DomainError("omega and omega_perp must be vectors of equal length")
        _unit(w, w.size)
        _unit(wp, wp.size)
        if abs(float(w @ wp)) > ORTHO_TOL:
            raise DomainError("omega and omega_perp are not orthogonal")
        object.__setattr__(self, "omega", tuple(float(c) for c in w))
        object.__setattr__(self, "omega_perp", tuple(float(c) for c in wp))

    @property
    def dim(self) -> int:
        return len(self.omega)

    def to_dict(self) -> dict:
        return {"tau": self.tau, "omega": list(self.omega),
                "omega_perp": list(self.omega_perp), "lambda": self.lam}


def rho_from(point: WLambdaPoint) -> np.ndarray:
    w = np.asarray(point.omega)
    wp = np.asarray(point.omega_perp)
    if abs(float(w @ wp)) > ORTHO_TOL:
        raise DomainError("omega and omega_perp are not orthogonal")
    return point.tau * w + 1j * math.sqrt(point.tau**2 + point.lam) * wp


def bilinear_dot(u, v) -> complex:
    return complex(np.sum(np.asarray(u) * np.asarray(v)))


def decay_margin(cone, omega) -> float:
    """Minimum of ``omega . theta`` over the cone's directions ``theta``."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (cone.dim,):
        raise DomainError("direction and cone dimensions differ")
    scale = float(np.linalg.norm(omega))
    if scale == 0:
        raise DomainError("direction must be nonzero")
    axis = np.asarray(cone.axis)
    angle = math.acos(max(-1.0, min(1.0, float(omega @ axis) / scale)))
    half = 0.5 * cone.opening_angle if cone.dim == 2 else cone.cap_half_angle
    return scale * math.cos(min(angle + half, math.pi))


def random_orthonormal_pair(rng: np.random.Generator, omega) -> np.ndarray:
    """A unit vector orthogonal to ``omega`` drawn from ``rng``."""
    omega = np.asarray(omega, dtype=float)
    if omega.size == 2:
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return sign * np.array([-omega[1], omega[0]])
    v = rng.standard_normal(omega.size)
    v -= (v @ omega) * omega
    v /= np.linalg.norm(v)
    v -= (v @ omega) * omega
    return v / np.linalg.norm(v)
