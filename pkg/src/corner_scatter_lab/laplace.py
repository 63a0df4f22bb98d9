"""Laplace transforms of harmonic polynomials over cones.

``F(rho) = int_C exp(-rho . x) H(x) dx`` for a sector or circular cone ``C``
and a homogeneous harmonic polynomial ``H`` of degree ``N``. Two independent
routes are provided: numeric radial-times-angular quadrature, and the polar
reduction ``F(rho) = Gamma(N+n) int_S (rho . theta)^(-N-n) H(theta) dtheta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import quadrature as quad
from .errors import ConvergenceError, DomainError, InadmissibleError, InsufficientRangeError
from .geometry import (Cone3D, Sector2D, WLambdaPoint, decay_margin, eval_harmonic,
                       rho_from)

EPS = np.finfo(float).eps
MARGIN_MIN = 0.05
TERM_KINDS = ("contrast-Hölder", "psi-H", "psi-remainder", "remainder")


@dataclass(frozen=True)
class LaplaceEvaluation:
    rho: tuple
    value: complex
    error_estimate: float
    method: str

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("negative error estimate")

    def to_dict(self) -> dict:
        return {"rho": [complex(r) for r in self.rho], "value_re": self.value.real,
                "value_im": self.value.imag, "error_estimate": self.error_estimate,
                "method": self.method}


def _check_admissible(cone, rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (cone.dim,):
        raise DomainError("rho and cone dimensions differ")
    re = rho.real
    if not np.any(re):
        raise InadmissibleError("Re rho = 0: the integrand does not decay on the cone")
    margin = decay_margin(cone, re / np.linalg.norm(re))
    if margin <= 0:
        raise InadmissibleError(f"decay margin {margin:.3g} <= 0 for Re rho")
    return margin


def angular_nodes(cone, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature on the cone's directions: unit vectors and weights.

    2D: ``n`` Gauss-Legendre nodes in the angle. 3D: ``n`` nodes in the polar
    angle (with the ``sin alpha`` Jacobian) times ``2n`` trapezoid nodes in azimuth.
    """
    if cone.dim == 2:
        half = 0.5 * cone.opening_angle
        psi, w = quad.gl_panels(np.linspace(-half, half, n // 8 + 1), 8)
        return cone.direction(psi), w
    alpha, wa = quad.gl_panels(np.linspace(0.0, cone.cap_half_angle, n // 8 + 1), 8)
    nb = 2 * n
    beta = 2.0 * np.pi * np.arange(nb) / nb
    A, B = np.meshgrid(alpha, beta, indexing="ij")
    w = (wa * np.sin(alpha))[:, None] * np.full(nb, 2.0 * np.pi / nb)
    return cone.direction(A, B).reshape(-1, 3), w.ravel()


def _harmonic_on_directions(H, theta) -> np.ndarray:
    if H.dim == 2:
        return H.on_sphere(np.arctan2(theta[:, 1], theta[:, 0]))
    return H.on_sphere(theta)


def _radial_panels(k: int, b_max: float, S: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Panels in the scaled radial variable s on [0, S] for s^k e^{-s(1 + i b)}."""
    s_sig = min(2.0 * k + 60.0, S)
    h = min(4.0, 6.0 / (1.0 + b_max))
    m = max(1, int(math.ceil(s_sig / h)))
    edges = list(np.linspace(0.0, s_sig, m + 1))
    width = h
    while edges[-1] < S:
        width *= 2.0
        edges.append(min(S, edges[-1] + width))
    return quad.gl_panels(np.array(edges), order)


def _direct_sum(cone, H, rho, n_ang: int, order: int) -> tuple[complex, float, float]:
    """One product-rule evaluation: value, tail bound, roundoff floor."""
    n = cone.dim
    k = H.N + n - 1
    theta, w = angular_nodes(cone, n_ang)
    a = theta @ rho
    c = a.real
    if np.any(c <= 0):
        raise InadmissibleError("Re(rho . theta) <= 0 on the cone")
    b = a.imag / c
    hw = w * _harmonic_on_directions(H, theta)
    S = 50.0 * (H.N + n)
    s, ws = _radial_panels(k, float(np.abs(b).max()), S, order)
    radial_w = ws * s**k
    total = 0j
    for start in range(0, a.size, 256):
        sl = slice(start, start + 256)
        E = np.exp(-np.outer(1.0 + 1j * b[sl], s))
        I = (E @ radial_w) / c[sl] ** (k + 1)
        total += np.sum(hw[sl] * I)
    gamma_k = math.factorial(k)
    mag = np.abs(hw) / c ** (k + 1)
    tail = float(np.sum(mag) * special.gammaincc(k + 1, S) * gamma_k)
    floor = float(64.0 * EPS * np.sum(mag) * gamma_k)
    return complex(total), tail, floor


def laplace_direct(cone, H, rho, tol: float = 1e-10, max_level: int = 6) -> LaplaceEvaluation:
    """F(rho) by truncated radial quadrature times an angular product rule.

    Angular resolution doubles until two levels agree to ``tol`` (relative).
    The radial rule is checked by repeating the previous level at a higher
    Gauss order: its directions span the same range of oscillation, at a
    quarter of the cost. Error = angular change + radial change + tail + floor.
    """
    _check_admissible(cone, rho)
    rho = np.asarray(rho, dtype=complex)
    if H.dim != cone.dim:
        raise DomainError("polynomial and cone dimensions differ")
    n_ang = 16 if cone.dim == 3 else 32
    prev, _, _ = _direct_sum(cone, H, rho, n_ang, 12)
    for _ in range(max_level):
        n_ang *= 2
        cur, tail, floor = _direct_sum(cone, H, rho, n_ang, 12)
        ang_err = abs(cur - prev)
        if ang_err <= max(tol * abs(cur), floor):
            break
        prev = cur
    else:
        raise ConvergenceError("laplace_direct: angular refinement did not settle")
    hi, _, _ = _direct_sum(cone, H, rho, n_ang // 2, 20)
    err = ang_err + abs(hi - prev) + tail + floor
    return LaplaceEvaluation(tuple(rho), cur, err, "direct-quadrature")


def polar_reduce(cone, H, rho, tol: float = 1e-12) -> LaplaceEvaluation:
    """F(rho) = Gamma(N+n) * int_S (rho . theta)^(-N-n) H(theta) dtheta.

    Valid for every ``rho`` with ``Re(rho . theta) > 0`` on the cone's
    directions, in particular ``rho = omega + i omega'`` with ``omega`` in ``U``.
    """
    _check_admissible(cone, rho)
    rho = np.asarray(rho, dtype=complex)
    if H.dim != cone.dim:
        raise DomainError("polynomial and cone dimensions differ")
    p = H.N + cone.dim
    gamma_factor = math.factorial(p - 1)
    if cone.dim == 2:
        def f(psi):
            theta = cone.direction(psi)
            return (theta @ rho) ** (-p) * H.on_sphere(cone.axis_angle + psi)

        res = quad.integrate_interval(f, -0.5 * cone.opening_angle, 0.5 * cone.opening_angle, tol=tol)
    else:
        def f(alpha, beta):
            theta = cone.direction(alpha, beta)
            return (theta @ rho) ** (-p) * H.on_sphere(theta) * np.sin(alpha)

        res = quad.integrate_cap(f, cone.cap_half_angle, tol=tol)
    value = gamma_factor * res.value
    err = gamma_factor * res.error_estimate + 64.0 * EPS * abs(value)
    return LaplaceEvaluation(tuple(rho), complex(value), float(err), "polar-reduced")


def homogeneity_check(cone, H, point: WLambdaPoint, t: float, method: str = "direct",
                      tol: float = 1e-10) -> dict:
    """Relative discrepancy |F(t rho) - t^(-N-n) F(rho)| / |F(rho)| and its error budget."""
    if t <= 0:
        raise DomainError("scale must be positive")
    rho = rho_from(point)
    evaluate = laplace_direct if method == "direct" else polar_reduce
    F1 = evaluate(cone, H, rho, tol)
    if t == 1.0:
        return {"discrepancy": 0.0, "budget": 0.0, "value": F1.value, "scaled_value": F1.value}
    Ft = evaluate(cone, H, t * rho, tol)
    p = H.N + cone.dim
    if abs(F1.value) <= 100.0 * F1.error_estimate or abs(F1.value) == 0.0:
        raise ArithmeticError("|F(rho)| is below the quadrature noise floor")
    disc = abs(Ft.value - t ** (-p) * F1.value) / abs(F1.value)
    budget = (t**p * Ft.error_estimate + F1.error_estimate) / abs(F1.value)
    return {"discrepancy": disc, "budget": budget, "value": F1.value, "scaled_value": Ft.value,
            "passes": disc <= 10.0 * budget}


# --- scaling probes of the non-homogeneous terms ---------------------------------


@dataclass(frozen=True)
class ProbeData:
    """Synthetic inputs for the remainder-decay probes.

    ``phi`` is either ``"holder"``: ``(1 + |x|^s) exp(-|x|^2)``, or ``"flat"``:
    identically 1 on ``|x| <= flat_radius`` with a Gaussian fall-off outside.
    The synthetic remainder is ``psi(x) = |rho|^(-delta) exp(-|rho x|^2 / 4)``.
    """

    holder_s: float = 0.5
    delta: float = 0.25
    remainder_coeff: float = 1.0
    phi: str = "holder"
    flat_radius: float = 0.5
    lam: float = 1.0
    omega: tuple | None = None
    omega_perp: tuple | None = None

    def phi_values(self, r: np.ndarray) -> np.ndarray:
        if self.phi == "holder":
            return (1.0 + r**self.holder_s) * np.exp(-r * r)
        if self.phi == "flat":
            d = np.maximum(r - self.flat_radius, 0.0)
            return np.exp(-d * d)
        raise DomainError(f"unknown phi kind {self.phi!r}")


@dataclass
class ProbeResult:
    term_kind: str
    taus: list
    magnitudes: list
    slope: float
    target: float
    exterior_rate: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"term_kind": self.term_kind, "taus": self.taus, "magnitudes": self.magnitudes,
                "slope": self.slope, "target": self.target, "exterior_rate": self.exterior_rate,
                **self.extra}


def _graded_edges(s_max: float, k: float, b_max: float) -> np.ndarray:
    """Geometric grading toward s = 0, uniform in the bulk, geometric in the tail."""
    near = [2.0 ** (-j) for j in range(40, 0, -1)]
    s_sig = min(2.0 * k + 60.0, s_max)
    h = min(2.0, 6.0 / (1.0 + b_max))
    m = max(1, int(math.ceil((s_sig - 1.0) / h)))
    edges = [0.0] + near + list(np.linspace(1.0, s_sig, m + 1))
    width = h
    while edges[-1] < s_max:
        width *= 2.0
        edges.append(min(s_max, edges[-1] + width))
    return np.unique(np.array(edges))


def cone_integral(cone, g, rho, n_ang: int | None = None, order: int = 16,
                  power_hint: float = 0.0) -> complex:
    """int_C exp(-rho . x) g(r, theta) dx by graded radial times angular quadrature.

    ``g`` receives radii of shape (M, Q) and directions of shape (M, dim).
    The radial variable is scaled by |rho| so the exponential lives on O(1) scales.
    """
    rho = np.asarray(rho, dtype=complex)
    _check_admissible(cone, rho)
    n = cone.dim
    if n_ang is None:
        n_ang = 128 if n == 2 else 32
    scale = float(np.linalg.norm(rho))
    theta, w = angular_nodes(cone, n_ang)
    a = (theta @ rho) / scale
    b = a.imag / a.real
    S = 50.0 * (n + power_hint + 2) / float(a.real.min())
    s, ws = quad.gl_panels(_graded_edges(S, n + power_hint, float(np.abs(b).max())), order)
    r = s / scale
    total = 0j
    for start in range(0, a.size, 128):
        sl = slice(start, start + 128)
        R = np.broadcast_to(r, (theta[sl].shape[0], r.size))
        vals = np.exp(-np.outer(a[sl], s)) * g(R, theta[sl]) * r ** (n - 1)
        total += np.sum(w[sl] * (vals @ ws)) / scale
    return complex(total)


def _term_integrand(cone, H, kind: str, data: ProbeData, rho_norm: float):
    N = H.N

    def harmonic(R, theta):
        return _harmonic_on_directions(H, theta)[:, None] * R**N

    def psi(R):
        return rho_norm ** (-data.delta) * np.exp(-0.25 * (rho_norm * R) ** 2)

    if kind == "contrast-Hölder":
        return lambda R, th: (data.phi_values(R) - 1.0) * harmonic(R, th)
    if kind == "psi-H":
        return lambda R, th: psi(R) * data.phi_values(R) * harmonic(R, th)
    if kind == "psi-remainder":
        return lambda R, th: psi(R) * data.phi_values(R) * data.remainder_coeff * R ** (N + 1)
    if kind == "remainder":
        return lambda R, th: data.phi_values(R) * data.remainder_coeff * R ** (N + 1)
    raise DomainError(f"unknown term kind {kind!r}; expected one of {TERM_KINDS}")


def target_exponent(kind: str, N: int, n: int, data: ProbeData) -> float:
    return {
        "contrast-Hölder": -N - n - data.holder_s,
        "psi-H": -N - n - data.delta,
        "psi-remainder": -N - n - 1 - data.delta,
        "remainder": -N - n - 1,
    }[kind]


def default_taus() -> np.ndarray:
    return np.geomspace(10.0, 320.0, 16)


def remainder_scaling_probe(cone, H, term_kind: str, data: ProbeData | None = None,
                            taus=None) -> ProbeResult:
    """Least-squares slope of log|integral| against log tau for one remainder term."""
    data = data or ProbeData()
    taus = default_taus() if taus is None else np.asarray(taus, dtype=float)
    if taus.size < 2 or taus.max() / taus.min() < 10.0:
        raise InsufficientRangeError("tau list must span at least one decade")
    omega = np.asarray(data.omega if data.omega is not None else cone.axis)
    if data.omega_perp is not None:
        omega_perp = np.asarray(data.omega_perp)
    elif cone.dim == 2:
        omega_perp = np.array([-omega[1], omega[0]])
    else:
        omega_perp = np.cross(omega, [1.0, 0.0, 0.0] if abs(omega[0]) < 0.9 else [0.0, 1.0, 0.0])
        omega_perp /= np.linalg.norm(omega_perp)
    mags = []
    for tau in taus:
        rho = rho_from(WLambdaPoint(float(tau), tuple(omega), tuple(omega_perp), data.lam))
        g = _term_integrand(cone, H, term_kind, data, float(np.linalg.norm(rho)))
        mags.append(abs(cone_integral(cone, g, rho, power_hint=H.N + 1)))
    mags = np.array(mags)
    tiny = mags <= 1e-300
    logs = np.log(np.where(tiny, 1e-300, mags))
    slope = float(np.polyfit(np.log(taus), logs, 1)[0])
    exterior = None
    if term_kind == "contrast-Hölder" and data.phi == "flat":
        # exponential regime: fit log|I| ~ -d * tau * flat_radius
        exterior = float(-np.polyfit(taus * data.flat_radius, logs, 1)[0])
    return ProbeResult(term_kind, [float(t) for t in taus], [float(m) for m in mags], slope,
                       target_exponent(term_kind, H.N, cone.dim, data), exterior)


def holder_lemma_check(cone, N: int, rho, q: float, f_kind: str = "gaussian") -> dict:
    """Both sides of |int_C e^{-rho x} |x|^N f dx| <= |rho|^{n/q-N-n} ||e^{-rho^ y}|y|^N||_{q'} ||f||_q.

    ``f(x) = exp(-|x|^2)`` whose L^q norm over R^n is ``(pi/q)^{n/(2q)}``.
    The right-hand side follows from Hölder's inequality after ``y = x/|rho|``,
    so it holds with constant one.
    """
    if f_kind != "gaussian":
        raise DomainError("only the Gaussian sample is available")
    if q <= 1:
        raise DomainError("need q > 1")
    rho = np.asarray(rho, dtype=complex)
    n = cone.dim
    qp = q / (q - 1.0)
    lhs = abs(cone_integral(cone, lambda R, th: R**N * np.exp(-R * R), rho, power_hint=N))
    rho_norm = float(np.linalg.norm(rho))
    unit = rho.real / rho_norm
    # ||e^{-Re(rho^) y} |y|^N||_{q'}^{q'} over the cone, in polar form
    theta, w = angular_nodes(cone, 128)
    c = qp * (theta @ unit)
    integral = math.gamma(N * qp + n) * float(np.sum(w * c ** (-(N * qp + n))))
    kernel_norm = integral ** (1.0 / qp)
    f_norm = (math.pi / q) ** (n / (2.0 * q))
    rhs = rho_norm ** (n / q - N - n) * kernel_norm * f_norm
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs * (1 + 1e-10)}


# --- vanishing on W_0 --------------------------------------------------------------


def admissible_directions(cone, count: int = 9, margin_min: float = MARGIN_MIN) -> list[np.ndarray]:
    """A deterministic grid of directions omega in U = {decay margin > margin_min}."""
    axis = np.asarray(cone.axis)
    half = 0.5 * cone.opening_angle if cone.dim == 2 else cone.cap_half_angle
    limit = math.acos(margin_min) - half
    if limit <= 0:
        return [axis]
    spread = 0.9 * limit
    if cone.dim == 2:
        base = math.atan2(axis[1], axis[0])
        return [np.array([math.cos(base + d), math.sin(base + d)])
                for d in np.linspace(-spread, spread, count)]
    from .geometry import rotation_to
    Rm = rotation_to(axis)
    out = [axis]
    for tilt in np.linspace(spread / 2, spread, 2):
        for az in 2 * np.pi * np.arange(count // 2) / max(count // 2, 1):
            local = np.array([math.sin(tilt) * math.cos(az), math.sin(tilt) * math.sin(az), math.cos(tilt)])
            out.append(Rm @ local)
    return out


def perpendicular_choices(omega, count: int = 4) -> list[np.ndarray]:
    omega = np.asarray(omega, dtype=float)
    if omega.size == 2:
        p = np.array([-omega[1], omega[0]])
        return [p, -p]
    e = np.cross(omega, [1.0, 0.0, 0.0] if abs(omega[0]) < 0.9 else [0.0, 1.0, 0.0])
    e /= np.linalg.norm(e)
    f = np.cross(omega, e)
    return [math.cos(t) * e + math.sin(t) * f for t in 2 * np.pi * np.arange(count) / count]


def w0_vanishing_scan(cone, H, omegas=None, perp_count: int = 4) -> dict:
    """max |F(omega + i omega')| over a grid of admissible omega and perpendicular omega'.

    Also reports the maximum of |F| / Gamma(N+n), the cap-integral normalization.
    """
    omegas = admissible_directions(cone) if omegas is None else omegas
    values = []
    for omega in omegas:
        omega = np.asarray(omega, dtype=float)
        if decay_margin(cone, omega) <= MARGIN_MIN:
            raise InadmissibleError("omega outside the admissible set U")
        for perp in perpendicular_choices(omega, perp_count):
            ev = polar_reduce(cone, H, omega + 1j * perp)
            values.append({"omega": omega, "omega_perp": perp, "value": ev.value,
                           "error_estimate": ev.error_estimate})
    mags = [abs(v["value"]) for v in values]
    gamma_factor = math.factorial(H.N + cone.dim - 1)
    return {"max_abs": max(mags), "max_abs_cap_normalized": max(mags) / gamma_factor,
            "min_abs": min(mags), "points": values}
