"""Desk-scale 2D scattering: Herglotz waves, Lippmann-Schwinger solves, far-field matrices.

Fields are sampled at cell centres of a square grid on ``[-B, B]^2``. The
volume potential is discretized by the piecewise-constant collocation rule:
off-diagonal Green weights ``(i/4) H0(k r) h^2`` and the self cell replaced by
the disk of equal area, whose exact integral is
``(i pi a / (2k)) H1(k a) - 1/k^2`` with ``a = h / sqrt(pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft, linalg, special
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConvergenceError, DomainError, ResolutionError
from .parallel import parallel_map
from .specfun import bessel_j

FAR_FIELD_PHASE = -np.exp(1j * math.pi / 4.0)


def far_field_constant(k: float) -> complex:
    """-e^{i pi/4} / sqrt(8 pi k)."""
    return complex(FAR_FIELD_PHASE / math.sqrt(8.0 * math.pi * k))


# ---------------------------------------------------------------- potentials

def _coverage(profile, X, Y, h, sub):
    if sub <= 1:
        return profile(X, Y)
    acc = np.zeros_like(X)
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    for a in offs:
        for b in offs:
            acc += profile(X + a * h, Y + b * h)
    return acc / sub**2


def holder_gaussian_envelope(r, radius=1.0):
    """exp(-r^2) sqrt(1 - (r/R)^2)_+: equal to 1 at the vertex, 1/2-Hoelder at r = R."""
    return np.exp(-r * r) * np.sqrt(np.clip(1.0 - (r / radius) ** 2, 0.0, None))


@dataclass
class Potential2D:
    """Contrast profile q(x) >= 0 sampled on a cell-centred grid.

    The scattering potential is ``V = -k^2 m q`` in the acoustic convention and
    ``V = m q`` in the quantum convention, where ``m = contrast``.
    """

    kind: str
    parameters: dict
    contrast: float
    half_width: float
    n: int
    profile: np.ndarray = field(repr=False)

    KINDS = ("sector-corner", "radial-disk")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown potential kind {self.kind!r}")
        if self.profile.shape != (self.n, self.n):
            raise DomainError("profile shape does not match the grid")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    def coordinates(self):
        x = -self.half_width + self.h * (np.arange(self.n) + 0.5)
        return np.meshgrid(x, x, indexing="ij")

    def support(self):
        """Flat indices, coordinates and profile values of the cells where q != 0."""
        idx = np.flatnonzero(self.profile.ravel())
        X, Y = self.coordinates()
        return idx, X.ravel()[idx], Y.ravel()[idx], self.profile.ravel()[idx]

    def samples(self, k: float, convention: str = "acoustic") -> np.ndarray:
        if convention == "acoustic":
            return -k * k * self.contrast * self.profile
        if convention == "quantum":
            return self.contrast * self.profile
        raise DomainError(f"unknown convention {convention!r}")

    def vertex_value(self) -> float:
        return float(self.parameters.get("phi0", 1.0))

    def scaled(self, factor: float) -> "Potential2D":
        return Potential2D(self.kind, dict(self.parameters), self.contrast * factor,
                           self.half_width, self.n, self.profile)

    def rotated_quarter(self, turns: int = 1) -> "Potential2D":
        """Exact rotation by turns * pi/2 (the cell-centred grid maps onto itself)."""
        p = dict(self.parameters)
        if "axis_angle" in p:
            p["axis_angle"] = p["axis_angle"] + turns * math.pi / 2.0
        return Potential2D(self.kind, p, self.contrast, self.half_width, self.n,
                           np.rot90(self.profile, turns))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "parameters": self.parameters, "contrast": self.contrast,
                "half_width": self.half_width, "n": self.n,
                "support_cells": int(np.count_nonzero(self.profile))}

    @classmethod
    def sector(cls, opening_angle: float = 1.0, contrast: float = 3.0, radius: float = 1.0,
               n: int = 54, axis_angle: float = 0.0, subsample: int = 6) -> "Potential2D":
        """chi_C times the Hoelder-Gaussian envelope, truncated at ``radius``."""
        if not 0.0 < opening_angle < 2.0 * math.pi:
            raise DomainError("opening angle must lie in (0, 2 pi)")
        B = 1.05 * radius
        h = 2.0 * B / n
        x = -B + h * (np.arange(n) + 0.5)
        X, Y = np.meshgrid(x, x, indexing="ij")

        def prof(a, b):
            r = np.hypot(a, b)
            d = np.angle(np.exp(1j * (np.arctan2(b, a) - axis_angle)))
            return (np.abs(d) <= 0.5 * opening_angle) * holder_gaussian_envelope(r, radius)

        q = _coverage(prof, X, Y, h, subsample)
        params = {"opening_angle": opening_angle, "radius": radius, "axis_angle": axis_angle,
                  "envelope": "exp(-r^2) sqrt(1-(r/R)^2)", "phi0": 1.0, "subsample": subsample}
        return cls("sector-corner", params, contrast, B, n, q)

    @classmethod
    def disk(cls, contrast: float = 3.0, radius: float = 1.0, n: int = 54,
             envelope: str = "flat", subsample: int = 6) -> "Potential2D":
        """Constant disk (cell-coverage sampled) or a point-sampled Gaussian exp(-(4r/R)^2) cut at R."""
        B = 1.05 * radius
        h = 2.0 * B / n
        x = -B + h * (np.arange(n) + 0.5)
        X, Y = np.meshgrid(x, x, indexing="ij")
        if envelope == "flat":
            q = _coverage(lambda a, b: (np.hypot(a, b) <= radius).astype(float), X, Y, h, subsample)
        elif envelope == "gaussian":
            r = np.hypot(X, Y)
            q = np.where(r <= radius, np.exp(-(4.0 * r / radius) ** 2), 0.0)
            subsample = 1
        else:
            raise DomainError(f"unknown envelope {envelope!r}")
        params = {"radius": radius, "envelope": envelope, "subsample": subsample}
        return cls("radial-disk", params, contrast, B, n, q)


def grid_size_for(k_max: float, contrast: float, radius: float = 1.0, ppw: float = 10.0) -> int:
    """Smallest even n giving ``ppw`` points per interior wavelength at k_max."""
    k1 = k_max * math.sqrt(max(1.0 + contrast, 1.0))
    h = 2.0 * math.pi / (ppw * k1)
    n = math.ceil(2.0 * 1.05 * radius / h)
    return n + (n % 2)


def _check_resolution(pot: Potential2D, k: float, convention: str):
    if convention == "acoustic":
        k_in = k * math.sqrt(max(1.0 + pot.contrast * float(pot.profile.max()), 1.0))
    else:
        k_in = math.sqrt(k * k + abs(pot.contrast) * float(pot.profile.max()))
    if 2.0 * math.pi / (k_in * pot.h) < 10.0 - 1e-9:
        raise ResolutionError(f"grid gives {2 * math.pi / (k_in * pot.h):.2f} < 10 points per wavelength")


# ---------------------------------------------------------------- incident waves

def herglotz_wave(coeffs: dict, k: float, x, method: str = "bessel", nodes: int | None = None):
    """u0(x) = int_{S^1} e^{i k x.omega} g(omega) d omega for g(theta) = sum_m c_m e^{i m theta}."""
    if k <= 0:
        raise DomainError("k must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.hypot(x[:, 0], x[:, 1])
    phi = np.arctan2(x[:, 1], x[:, 0])
    if method == "bessel":
        u = np.zeros(len(r), dtype=complex)
        for m, c in coeffs.items():
            jm = bessel_j(abs(m), k * r) * (1.0 if m >= 0 or m % 2 == 0 else -1.0)
            u += c * 2.0 * math.pi * (1j**m) * jm * np.exp(1j * m * phi)
        return u
    if method == "quadrature":
        mmax = max((abs(m) for m in coeffs), default=0)
        n = nodes or int(2 * (k * r.max() + mmax) + 64)
        th = 2.0 * math.pi * np.arange(n) / n
        g = sum(c * np.exp(1j * m * th) for m, c in coeffs.items())
        ph = np.exp(1j * k * (np.outer(x[:, 0], np.cos(th)) + np.outer(x[:, 1], np.sin(th))))
        return ph @ g * (2.0 * math.pi / n)
    raise DomainError(f"unknown method {method!r}")


def plane_waves(k: float, X, Y, n_dir: int) -> np.ndarray:
    th = 2.0 * math.pi * np.arange(n_dir) / n_dir
    return np.exp(1j * k * (np.outer(X, np.cos(th)) + np.outer(Y, np.sin(th))))


# ---------------------------------------------------------------- Green function

def green_table(k: float, h: float, n: int) -> np.ndarray:
    """Weights G[dx + n - 1, dy + n - 1] for integer cell offsets |dx|, |dy| < n."""
    d = np.arange(-(n - 1), n) * h
    DX, DY = np.meshgrid(d, d, indexing="ij")
    r = np.hypot(DX, DY)
    r[n - 1, n - 1] = 1.0
    G = 0.25j * special.hankel1(0, k * r) * h * h
    a = h / math.sqrt(math.pi)
    G[n - 1, n - 1] = 1j * math.pi * a / (2.0 * k) * special.hankel1(1, k * a) - 1.0 / k**2
    return G


class VolumeOperator:
    """w -> int Phi_k(x - y) w(y) dy on the grid, by zero-padded FFT convolution."""

    def __init__(self, k: float, h: float, n: int):
        self.n = n
        self.m = fft.next_fast_len(2 * n - 1)
        G = green_table(k, h, n)
        pad = np.zeros((self.m, self.m), dtype=complex)
        pad[: 2 * n - 1, : 2 * n - 1] = G
        self.kernel = fft.fft2(pad)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        n = self.n
        pad = np.zeros((self.m, self.m), dtype=complex)
        pad[:n, :n] = w
        out = fft.ifft2(fft.fft2(pad) * self.kernel)
        return out[n - 1: 2 * n - 1, n - 1: 2 * n - 1]


@dataclass
class LsSolution:
    u: np.ndarray
    residual: float
    iterations: int


def ls_solve(pot: Potential2D, k: float, u0: np.ndarray, convention: str = "acoustic",
             tol: float = 1e-8, max_iter: int = 500) -> LsSolution:
    """Solve u + K(V u) = u0 by GMRES with FFT-accelerated convolution."""
    if k <= 0:
        raise DomainError("k must be positive")
    _check_resolution(pot, k, convention)
    n = pot.n
    u0 = np.asarray(u0, dtype=complex).reshape(n, n)
    V = pot.samples(k, convention)
    if not np.any(V):
        return LsSolution(u0.copy(), 0.0, 0)
    K = VolumeOperator(k, pot.h, n)

    def apply(v):
        w = v.reshape(n, n)
        return (w + K(V * w)).ravel()

    A = LinearOperator((n * n, n * n), matvec=apply, dtype=complex)
    count = [0]

    def cb(_):
        count[0] += 1

    sol, info = gmres(A, u0.ravel(), rtol=0.1 * tol, atol=0.0, restart=200, maxiter=max_iter,
                      callback=cb, callback_type="pr_norm")
    res = float(np.linalg.norm(apply(sol) - u0.ravel()) / np.linalg.norm(u0))
    if res > tol:
        raise ConvergenceError(f"GMRES stagnated at relative residual {res:.3g} (info={info})")
    return LsSolution(sol.reshape(n, n), res, count[0])


def born_scattered(pot: Potential2D, k: float, u0: np.ndarray, convention: str = "acoustic") -> np.ndarray:
    """First Born term -K(V u0)."""
    K = VolumeOperator(k, pot.h, pot.n)
    return -K(pot.samples(k, convention) * np.asarray(u0).reshape(pot.n, pot.n))


# ---------------------------------------------------------------- far field

@dataclass
class FarFieldMatrix:
    k: float
    n_dir: int
    matrix: np.ndarray
    gram: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.matrix.shape != (self.n_dir, self.n_dir):
            raise DomainError("far-field matrix must be n_dir x n_dir")
        if not np.all(np.isfinite(self.matrix)):
            raise DomainError("far-field matrix has non-finite entries")

    def reciprocity_gap(self) -> float:
        """max |A[p][q] - A[q+n/2][p+n/2]| / max |A|: A(xhat, d) = A(-d, -xhat)."""
        A = self.matrix
        s = self.n_dir // 2
        B = np.roll(np.roll(A.T, s, axis=0), s, axis=1)
        scale = np.abs(A).max()
        return float(np.abs(A - B).max() / scale) if scale else 0.0

    def fourier_offdiagonal_ratio(self) -> float:
        """Energy of A outside the diagonal of its discrete Fourier representation."""
        F = np.fft.fft(np.fft.ifft(self.matrix, axis=0), axis=1)
        total = float(np.sum(np.abs(F) ** 2))
        off = float(np.sum(np.abs(F - np.diag(np.diag(F))) ** 2))
        return off / total if total else 0.0

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def normalized_sigma_min(self, eps: float = 1e-10) -> float:
        """Smallest singular value of A in the Born-energy metric, divided by |c_k|.

        With ``G = H^* |V| H h^2`` the Gram matrix of the incident plane waves
        on the support, ``A`` is compressed to the range of ``G`` and whitened
        there, so the weak-scattering part of ``A`` has unit scale at every k.
        """
        if self.gram is None:
            raise DomainError("normalized sigma_min needs the Born Gram matrix")
        w, U = linalg.eigh(self.gram)
        keep = w > eps * w.max()
        W = U[:, keep] / np.sqrt(w[keep])
        At = W.conj().T @ self.matrix @ W / abs(far_field_constant(self.k))
        return float(np.linalg.svd(At, compute_uv=False).min())

    def to_dict(self) -> dict:
        return {"k": self.k, "n_dir": self.n_dir,
                "matrix_re": self.matrix.real.tolist(), "matrix_im": self.matrix.imag.tolist()}


def far_field_matrix(pot: Potential2D, k: float, n_dir: int = 32, convention: str = "acoustic",
                     method: str = "direct", tol: float = 1e-8) -> FarFieldMatrix:
    """A[p][q] = c_k sum_y e^{-i k omega_p.y} V(y) u_q(y) h^2 for incident e^{i k omega_q.x}."""
    if n_dir < 2 or n_dir % 2:
        raise DomainError("n_dir must be an even integer >= 2")
    _check_resolution(pot, k, convention)
    c = far_field_constant(k)
    h2 = pot.h**2
    V = pot.samples(k, convention).ravel()
    idx, X, Y, _ = pot.support()
    if idx.size == 0:
        return FarFieldMatrix(k, n_dir, np.zeros((n_dir, n_dir), dtype=complex),
                              np.zeros((n_dir, n_dir), dtype=complex))
    Hs = plane_waves(k, X, Y, n_dir)
    Vs = V[idx]
    if method == "direct":
        n = pot.n
        G = green_table(k, pot.h, n)
        ix, iy = np.unravel_index(idx, (n, n))
        Kss = G[ix[:, None] - ix[None, :] + n - 1, iy[:, None] - iy[None, :] + n - 1]
        Kss *= Vs[None, :]
        Kss[np.diag_indices_from(Kss)] += 1.0
        U = linalg.lu_solve(linalg.lu_factor(Kss, check_finite=False), Hs, check_finite=False)
    elif method == "iterative":
        Xf, Yf = (a.ravel() for a in pot.coordinates())
        Hfull = plane_waves(k, Xf, Yf, n_dir)
        U = np.stack([ls_solve(pot, k, Hfull[:, q], convention, tol).u.ravel()[idx]
                      for q in range(n_dir)], axis=1)
    else:
        raise DomainError(f"unknown method {method!r}")
    A = c * h2 * (Hs.conj().T @ (Vs[:, None] * U))
    gram = h2 * (Hs.conj().T @ (np.abs(Vs)[:, None] * Hs))
    return FarFieldMatrix(k, n_dir, A, gram)


# ---------------------------------------------------------------- scans

@dataclass
class Dip:
    k: float
    sigma: float
    prominence: float
    index: int


@dataclass
class ScanResult:
    ks: list
    sigma_min: list
    dips: list
    median: float
    potential: dict
    n_dir: int
    convention: str
    sigma_min_raw: list = field(default_factory=list)

    @property
    def deepest(self) -> float:
        return min(self.sigma_min)

    def to_dict(self) -> dict:
        return {"potential": self.potential, "n_dir": self.n_dir, "convention": self.convention,
                "k": self.ks, "sigma_min": self.sigma_min, "median": self.median,
                "dips": [d.__dict__ for d in self.dips], "minimum": self.deepest,
                "sigma_min_raw": self.sigma_min_raw,
                "metric": "Born-normalized smallest singular value of the far-field matrix"}


def detect_dips(ks, sig, prominence: float = 4.0, depth: float = 0.25) -> tuple[list[Dip], float]:
    """Local minima at least ``prominence`` times below both neighbouring maxima and below depth*median.

    The centre is refined by a parabola through the three samples of sigma^2
    around the minimum; sigma^2 is smooth across a simple zero of sigma.
    """
    ks = np.asarray(ks, dtype=float)
    s = np.asarray(sig, dtype=float)
    med = float(np.median(s))
    dips = []
    for i in range(1, len(s) - 1):
        if not (s[i] <= s[i - 1] and s[i] < s[i + 1]):
            continue
        j = i
        while j > 0 and s[j - 1] >= s[j]:
            j -= 1
        left = s[j:i + 1].max()
        j = i
        while j < len(s) - 1 and s[j + 1] >= s[j]:
            j += 1
        right = s[i:j + 1].max()
        prom = min(left, right) / s[i] if s[i] > 0 else math.inf
        if prom < prominence or s[i] > depth * med:
            continue
        y0, y1, y2 = s[i - 1] ** 2, s[i] ** 2, s[i + 1] ** 2
        dk = ks[i + 1] - ks[i]
        den = y0 - 2.0 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den > 0 else 0.0
        kc = float(ks[i] + np.clip(shift, -1.0, 1.0) * dk)
        sc = float(math.sqrt(max(y1 - 0.25 * (y0 - y2) * shift, 0.0)))
        dips.append(Dip(kc, sc, float(prom), i))
    return dips, med


def nonscattering_scan(pot: Potential2D, ks, n_dir: int = 32, convention: str = "acoustic",
                       workers: int | None = None) -> ScanResult:
    """Born-normalized sigma_min(A(k)) over the k list and the detected dips."""
    ks = [float(k) for k in ks]
    if not np.any(pot.profile):
        raise DomainError("the scan needs a nonzero potential")
    def one(k):
        A = far_field_matrix(pot, k, n_dir, convention)
        return A.normalized_sigma_min(), float(A.singular_values().min())

    pairs = parallel_map(one, ks, workers)
    sig = [float(p[0]) for p in pairs]
    dips, med = detect_dips(ks, sig)
    # the raw value sits at the evanescent-mode noise floor; kept for reference only
    return ScanResult(ks, sig, dips, med, pot.to_dict(), n_dir, convention, [p[1] for p in pairs])


# ---------------------------------------------------------------- disk oracle

def _jn_prime(n: int, x):
    return 0.5 * (special.jv(n - 1, x) - special.jv(n + 1, x))


def disk_determinant(n: int, k, contrast: float, radius: float = 1.0):
    """det [[J_n(kR), J_n(k1 R)], [k J_n'(kR), k1 J_n'(k1 R)]] with k1 = k sqrt(1+m)."""
    k = np.asarray(k, dtype=float)
    k1 = k * math.sqrt(1.0 + contrast)
    return (special.jv(n, k * radius) * k1 * _jn_prime(n, k1 * radius)
            - special.jv(n, k1 * radius) * k * _jn_prime(n, k * radius))


@dataclass
class TransmissionEigenvalueList:
    contrast: float
    radius: float
    order: int
    roots: list
    residuals: list
    scales: list
    window: tuple
    notice: str = ""

    def __post_init__(self):
        if list(self.roots) != sorted(self.roots):
            raise DomainError("roots must be sorted")

    def to_dict(self) -> dict:
        return {"contrast": self.contrast, "radius": self.radius, "order": self.order,
                "roots": self.roots, "residuals": self.residuals, "local_scales": self.scales,
                "window": list(self.window), "notice": self.notice}


def disk_transmission_eigs(contrast: float, radius: float, order: int, window=(0.0, None),
                           grid: int = 4000, tol: float = 1e-10) -> TransmissionEigenvalueList:
    """Sign changes of the disk determinant on a fine grid, refined by bisection."""
    if contrast <= -1.0 or contrast == 0.0:
        raise DomainError("contrast must satisfy m > -1 and m != 0")
    if radius <= 0 or order < 0:
        raise DomainError("need R > 0 and n >= 0")
    lo, hi = window
    hi = 10.0 / radius if hi is None else hi
    lo = max(lo, 1e-6)
    ks = np.linspace(lo, hi, grid + 1)
    d = disk_determinant(order, ks, contrast, radius)
    roots, res, scales = [], [], []
    f = lambda k: float(disk_determinant(order, k, contrast, radius))
    for i in range(grid):
        if d[i] == 0.0:
            a = b = ks[i]
        elif d[i] * d[i + 1] < 0:
            a, b = ks[i], ks[i + 1]
            fa = d[i]
            while b - a > tol:
                mid = 0.5 * (a + b)
                fm = f(mid)
                if fm == 0.0:
                    a = b = mid
                    break
                if (fm < 0) == (fa < 0):
                    a, fa = mid, fm
                else:
                    b = mid
        else:
            continue
        r = 0.5 * (a + b)
        roots.append(float(r))
        res.append(abs(f(r)))
        scales.append(float(np.abs(d[max(i - 5, 0): i + 7]).max()))
    notice = "" if roots else "no roots in the window"
    return TransmissionEigenvalueList(contrast, radius, order, roots, res, scales, (lo, hi), notice)


def disk_roots_all_orders(contrast: float, radius: float, window, max_order: int = 30) -> list[tuple[int, float]]:
    out = []
    for n in range(max_order + 1):
        out += [(n, r) for r in disk_transmission_eigs(contrast, radius, n, window).roots]
    return sorted(out, key=lambda t: t[1])


def match_dips_to_roots(dips, roots, tol: float = 0.05) -> list[dict]:
    """Nearest root (order, k) for every dip and whether it lies within ``tol``."""
    out = []
    for d in dips:
        n, r = min(roots, key=lambda t: abs(t[1] - d.k))
        out.append({"dip": d.k, "sigma": d.sigma, "root": r, "order": n,
                    "distance": abs(r - d.k), "matched": abs(r - d.k) <= tol})
    return out
