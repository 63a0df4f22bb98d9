"""Deterministic quadrature on intervals, circles and spherical caps.

All integrands are vectorized: they receive numpy arrays of nodes and
return arrays of (possibly complex) values of the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError

EPS = np.finfo(float).eps
MAX_DEPTH = 40
MAX_CIRCLE = 2**16


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.error_estimate < 0 or self.evaluations <= 0:
            raise ValueError("invalid quadrature result")


@lru_cache(maxsize=64)
def _gl_cached(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], 1 <= n <= 512."""
    if not 1 <= n <= 512:
        raise DomainError("gauss_legendre supports 1 <= n <= 512")
    x, w = _gl_cached(int(n))
    return x.copy(), w.copy()


def gl_panels(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on consecutive panels."""
    x, w = _gl_cached(order)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (x + 1.0)).ravel(), (half * w).ravel()


def integrate_interval(f, a: float, b: float, tol: float = 1e-10, order: int = 10,
                       max_depth: int = MAX_DEPTH) -> QuadResult:
    """Adaptive Gauss-Legendre quadrature with level-synchronous bisection.

    Every active panel is compared with the sum over its two halves; panels
    whose discrepancy exceeds their share of ``tol`` are split. All halves of
    one level are evaluated in a single vectorized call to ``f``. Accepted
    contributions are summed in left-endpoint order, so the result does not
    depend on the order in which panels were refined.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    a, b = float(a), float(b)
    if a == b:
        return QuadResult(0.0, 0.0, 1)
    x, w = _gl_cached(order)
    length = abs(b - a)

    def panel_sums(lo, hi):
        half = 0.5 * (hi - lo)
        vals = np.asarray(f(lo[:, None] + half[:, None] * (x + 1.0)), dtype=complex)
        return (vals * w).sum(axis=1) * half, (np.abs(vals) * w).sum(axis=1) * np.abs(half)

    lo, hi = np.array([a]), np.array([b])
    coarse, _ = panel_sums(lo, hi)
    evaluations = order
    lefts, values, errors = [], [], []
    for _ in range(max_depth):
        mid = 0.5 * (lo + hi)
        m = lo.size
        sums, abs_sums = panel_sums(np.concatenate([lo, mid]), np.concatenate([mid, hi]))
        evaluations += 2 * order * m
        fine = sums[:m] + sums[m:]
        diff = np.abs(fine - coarse)
        floor = 64.0 * EPS * (abs_sums[:m] + abs_sums[m:])
        done = diff <= np.maximum(tol * np.abs(hi - lo) / length, floor)
        lefts.append(lo[done])
        values.append(fine[done])
        errors.append(np.maximum(diff[done], floor[done]))
        if done.all():
            break
        keep = ~done
        coarse = np.concatenate([sums[:m][keep], sums[m:][keep]])
        lo, hi = np.concatenate([lo[keep], mid[keep]]), np.concatenate([mid[keep], hi[keep]])
    else:
        raise ConvergenceError(f"integrate_interval hit subdivision depth {max_depth}")
    idx = np.argsort(np.concatenate(lefts), kind="stable")
    value = np.concatenate(values)[idx].sum()
    err = float(np.concatenate(errors)[idx].sum())
    return QuadResult(complex(value), err, evaluations)


def radial_tail_bound(power: float, decay: float, R: float) -> float:
    """Bound for the tail of the integral of r^power e^{-decay r} over [R, inf)."""
    if decay <= 0:
        raise DomainError("decay rate must be positive")
    k = power + 1.0
    return float(special.gammaincc(k, decay * R) * special.gamma(k) / decay**k)


def integrate_radial(f, power: float, decay: float, N: int, tol: float = 1e-10) -> QuadResult:
    """Integral over [0, inf) of f, where |f(r)| <= r^power e^{-decay r}.

    The range is truncated at ``R = 50 (N + 2) / decay`` and the analytic
    incomplete-Gamma tail is added to the error estimate.
    """
    R = 50.0 * (N + 2) / decay
    res = integrate_interval(f, 0.0, R, tol=tol)
    tail = radial_tail_bound(power, decay, R)
    return QuadResult(res.value, res.error_estimate + tail, res.evaluations)


def integrate_circle(f, n: int = 8, tol: float = 1e-13, phase: float = 0.0) -> QuadResult:
    """Trapezoid rule on [0, 2 pi), doubling n until successive values agree.

    ``f`` receives an array of angles and may return an array with extra
    trailing or leading axes, as long as the angle axis is the last one.
    """
    if n < 8:
        raise DomainError("integrate_circle needs n >= 8")
    beta = phase + 2.0 * np.pi * np.arange(n) / n
    vals = np.asarray(f(beta), dtype=complex)
    cur = 2.0 * np.pi * vals.mean(axis=-1)
    evaluations = n
    while True:
        if 2 * n > MAX_CIRCLE:
            raise ConvergenceError("integrate_circle did not converge by n = 2^16")
        odd = phase + 2.0 * np.pi * (np.arange(n) + 0.5) / n
        ovals = np.asarray(f(odd), dtype=complex)
        new = 0.5 * (cur + 2.0 * np.pi * ovals.mean(axis=-1))
        evaluations += n
        n *= 2
        diff = np.max(np.abs(new - cur))
        scale = max(np.max(np.abs(new)), 1.0)
        if diff <= tol * scale:
            # the doubled rule converges geometrically; diff bounds the old error
            return QuadResult(complex(new) if np.ndim(new) == 0 else new, float(diff), evaluations)
        cur = new


def circle_mean_batch(f, alpha: np.ndarray, n: int, tol: float) -> tuple[np.ndarray, float, int]:
    """Trapezoid integrals over beta for a batch of alpha values (internal).

    The stopping test uses ``max(tol, roundoff floor)`` where the floor scales
    with the integral of |f|, which matters when the mean cancels strongly.
    """
    beta = 2.0 * np.pi * np.arange(n) / n
    vals = np.asarray(f(alpha[..., None], beta), dtype=complex)
    cur = 2.0 * np.pi * vals.mean(axis=-1)
    absmean = 2.0 * np.pi * np.abs(vals).mean(axis=-1)
    evaluations = alpha.size * n
    while True:
        if 2 * n > MAX_CIRCLE:
            raise ConvergenceError("azimuthal trapezoid did not converge by n = 2^16")
        odd = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        ovals = np.asarray(f(alpha[..., None], odd), dtype=complex)
        new = 0.5 * (cur + 2.0 * np.pi * ovals.mean(axis=-1))
        absmean = 0.5 * (absmean + 2.0 * np.pi * np.abs(ovals).mean(axis=-1))
        evaluations += alpha.size * n
        n *= 2
        if not new.size:
            return new, 0.0, evaluations
        diff = float(np.max(np.abs(new - cur)))
        floor = 64.0 * EPS * float(np.max(absmean))
        if diff <= max(tol, floor):
            return new, max(diff, floor), evaluations
        cur = new


def integrate_cap(f, gamma: float, tol: float = 1e-10, n_beta: int = 32) -> QuadResult:
    """Product rule on the cap [0, gamma] x [0, 2 pi).

    ``f(alpha, beta)`` must already include the Jacobian (``sin alpha`` in 3D).
    The inner trapezoid rule is refined per batch of alpha nodes until it
    settles to a small fraction of ``tol``; ``gamma`` times the largest inner
    discrepancy is added to the reported error.
    """
    if not 0.0 <= gamma < 0.5 * np.pi:
        raise DomainError("cap half-angle must lie in [0, pi/2)")
    if gamma == 0.0:
        return QuadResult(0.0, 0.0, 1)
    inner_tol = 0.01 * tol / gamma
    # the inner rule cannot beat its roundoff floor; probe it so the outer
    # bisection does not chase noise
    _, probe_err, probe_evals = circle_mean_batch(f, np.linspace(0.0, gamma, 9), n_beta, inner_tol)
    tol = max(tol, 100.0 * gamma * probe_err)
    inner_err = [probe_err]
    inner_evals = [probe_evals]

    def outer(alpha):
        vals, err, ev = circle_mean_batch(f, alpha, n_beta, inner_tol)
        inner_err[0] = max(inner_err[0], err)
        inner_evals[0] += ev
        return vals

    res = integrate_interval(outer, 0.0, gamma, tol=tol)
    return QuadResult(res.value, res.error_estimate + gamma * inner_err[0], inner_evals[0])
