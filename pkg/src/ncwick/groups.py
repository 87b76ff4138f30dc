"""Concrete group backends: the circle T^1, SU(2) and the Heisenberg group H^1.

Points are stored as plain coordinate arrays (torus: shape (n,), the other two
backends: shape (n, 3)); :class:`GroupPoint` wraps a single point with its
backend tag for the scalar API.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gammaln

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi

BACKENDS = ("torus", "su2", "heisenberg")


class BackendMismatch(TypeError):
    """Raised when points or objects from different backends are combined."""


class EmptySliceError(ValueError):
    pass


class CalibrationError(ValueError):
    pass


def _check_backend(name):
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    return name


# ---------------------------------------------------------------------------
# torus

def torus_mul(a, b):
    return np.mod(np.asarray(a, float) + np.asarray(b, float), 1.0)


def torus_inv(a):
    return np.mod(-np.asarray(a, float), 1.0)


def torus_canonical(a):
    out = np.mod(np.asarray(a, float), 1.0)
    # mod can return exactly 1.0 for tiny negative inputs
    return np.where(out >= 1.0, 0.0, out)


# ---------------------------------------------------------------------------
# SU(2) in Euler angles (alpha, beta, gamma), see su2_matrix for the convention

def su2_matrix(angles):
    """The defining 2x2 matrix of the Euler-angle point(s) ``angles``.

    Rows/columns are ordered m = +1/2, -1/2, so this is the spin-1/2 Wigner
    matrix e^{-i m alpha} d(beta) e^{-i n gamma} with
    d(beta) = [[cos b/2, -sin b/2], [sin b/2, cos b/2]].
    """
    ang = np.atleast_2d(np.asarray(angles, float))
    al, be, ga = ang[:, 0], ang[:, 1], ang[:, 2]
    c, s = np.cos(be / 2), np.sin(be / 2)
    U = np.empty((ang.shape[0], 2, 2), complex)
    U[:, 0, 0] = np.exp(-0.5j * (al + ga)) * c
    U[:, 0, 1] = -np.exp(-0.5j * (al - ga)) * s
    U[:, 1, 0] = np.exp(0.5j * (al - ga)) * s
    U[:, 1, 1] = np.exp(0.5j * (al + ga)) * c
    return U


def su2_angles(U, tol=1e-14):
    """Canonical Euler angles of SU(2) matrices; inverse of :func:`su2_matrix`."""
    U = np.asarray(U)
    if U.ndim == 2:
        U = U[None]
    u11, u21 = U[:, 0, 0], U[:, 1, 0]
    r11, r21 = np.abs(u11), np.abs(u21)
    beta = 2.0 * np.arctan2(r21, r11)
    s = -2.0 * np.angle(u11)      # alpha + gamma
    d = 2.0 * np.angle(u21)       # alpha - gamma
    alpha = 0.5 * (s + d)
    gamma = 0.5 * (s - d)
    # degenerate charts: only one combination of alpha, gamma is defined
    top = r21 < tol
    bot = r11 < tol
    alpha = np.where(top | bot, 0.0, alpha)
    gamma = np.where(top, s, np.where(bot, -d, gamma))
    beta = np.where(top, 0.0, np.where(bot, np.pi, beta))
    k = np.floor(alpha / TWO_PI)
    alpha = alpha - TWO_PI * k
    gamma = np.mod(gamma - TWO_PI * k, FOUR_PI)
    alpha = np.where(alpha >= TWO_PI, 0.0, alpha)
    gamma = np.where(gamma >= FOUR_PI, 0.0, gamma)
    return np.stack([alpha, beta, gamma], axis=-1)


def su2_mul(a, b):
    return su2_angles(su2_matrix(a) @ su2_matrix(b))


def su2_inv(a):
    return su2_angles(np.conj(np.swapaxes(su2_matrix(a), -1, -2)))


def su2_canonical(a):
    return su2_angles(su2_matrix(a))


def su2_quaternion(angles):
    """Unit quaternions (q0, q1, q2, q3) with U = q0 - i(q1 sx + q2 sy + q3 sz)."""
    U = su2_matrix(angles)
    q0 = U[:, 0, 0].real
    q3 = -U[:, 0, 0].imag
    q2 = U[:, 1, 0].real
    q1 = -U[:, 1, 0].imag
    return np.stack([q0, q1, q2, q3], axis=-1)


def su2_half_trace_pairs(a, b):
    """cos(theta/2) of a_i^{-1} b_j for all pairs, theta the rotation angle.

    Central functions only depend on this number; computing it is one small
    matrix product of quaternions.
    """
    return np.clip(su2_quaternion(a) @ su2_quaternion(b).T, -1.0, 1.0)


# ---------------------------------------------------------------------------
# Heisenberg group in exponential coordinates

def heis_mul(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    out = a + b
    out[..., 2] += 0.5 * (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])
    return out


def heis_inv(a):
    return -np.asarray(a, float)


def dilate(p, r):
    """Dilation (x, y, t) -> (r x, r y, r^2 t)."""
    p = np.asarray(p, float)
    out = p.copy()
    out[..., :2] *= r
    out[..., 2] *= r * r
    return out


def quasi_norm(p):
    p = np.asarray(p, float)
    return ((p[..., 0] ** 2 + p[..., 1] ** 2) ** 2 + p[..., 2] ** 2) ** 0.25


HOMOGENEOUS_DIM = 4
DILATION_WEIGHTS = (1, 1, 2)


_MUL = {"torus": torus_mul, "su2": su2_mul, "heisenberg": heis_mul}
_INV = {"torus": torus_inv, "su2": su2_inv, "heisenberg": heis_inv}
_CANON = {"torus": torus_canonical, "su2": su2_canonical,
          "heisenberg": lambda a: np.asarray(a, float)}


def mul_array(backend, a, b):
    return _MUL[_check_backend(backend)](a, b)


def inv_array(backend, a):
    return _INV[_check_backend(backend)](a)


def canonical_array(backend, a):
    return _CANON[_check_backend(backend)](a)


def identity_coords(backend):
    _check_backend(backend)
    return 0.0 if backend == "torus" else np.zeros(3)


@dataclass(frozen=True)
class GroupPoint:
    backend: str
    coords: tuple

    @classmethod
    def of(cls, backend, coords):
        _check_backend(backend)
        c = np.atleast_1d(np.asarray(coords, float)).ravel()
        want = 1 if backend == "torus" else 3
        if c.size != want:
            raise ValueError(f"{backend} points have {want} coordinate(s), got {c.size}")
        c = canonical_array(backend, c[0] if want == 1 else c[None, :])
        return cls(backend, tuple(np.atleast_1d(c).ravel().tolist()))

    @classmethod
    def identity(cls, backend):
        return cls.of(backend, identity_coords(backend))

    @property
    def array(self):
        return np.asarray(self.coords, float)


def _coords(p):
    return p.array[0] if p.backend == "torus" else p.array[None, :]


def mul(p: GroupPoint, q: GroupPoint) -> GroupPoint:
    if p.backend != q.backend:
        raise BackendMismatch(f"cannot multiply {p.backend} and {q.backend} points")
    return GroupPoint.of(p.backend, mul_array(p.backend, _coords(p), _coords(q)))


def inv(p: GroupPoint) -> GroupPoint:
    return GroupPoint.of(p.backend, inv_array(p.backend, _coords(p)))


# ---------------------------------------------------------------------------
# Haar quadratures

@dataclass(frozen=True, eq=False)
class HaarQuadrature:
    backend: str
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: float
    total_mass: float
    grid: dict | None = None          # heisenberg: origin, spacing, shape
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self):
        return self.weights.size


@lru_cache(maxsize=None)
def torus_quadrature(n: int) -> HaarQuadrature:
    x = np.arange(n) / n
    w = np.full(n, 1.0 / n)
    return HaarQuadrature("torus", x, w, n - 1, 1.0)


def su2_grid_sizes(degree):
    degree = int(np.ceil(degree))
    return degree + 1, degree // 2 + 1, 2 * degree + 1


@lru_cache(maxsize=None)
def su2_quadrature(degree: int) -> HaarQuadrature:
    """Product rule exact for matrix coefficients of spin l <= degree.

    Uniform in alpha over [0, 2pi) and gamma over [0, 4pi), Gauss-Legendre in
    cos(beta).  Normalized Haar measure sin(b) da db dg / (16 pi^2).
    """
    na, nb, ng = su2_grid_sizes(degree)
    al = TWO_PI * np.arange(na) / na
    ga = FOUR_PI * np.arange(ng) / ng
    xb, wb = np.polynomial.legendre.leggauss(nb)
    be = np.arccos(xb)
    A, B, G = np.meshgrid(al, be, ga, indexing="ij")
    W = np.broadcast_to((wb / 2.0)[None, :, None], A.shape) / (na * ng)
    nodes = np.stack([A.ravel(), B.ravel(), G.ravel()], axis=-1)
    return HaarQuadrature("su2", nodes, W.ravel().copy(), int(degree), 1.0,
                          grid={"shape": (na, nb, ng)})


@lru_cache(maxsize=None)
def heisenberg_quadrature(R: float = 4.0, n: int = 33, center=(0.0, 0.0, 0.0),
                          spacing=None) -> HaarQuadrature:
    """Uniform product grid with cell-volume weights.

    Default: the cube [-R, R]^3 with n points per axis.  ``spacing`` may be a
    3-tuple (anisotropic grids used by the semiclassical patches), in which
    case the grid is centered at ``center`` and R is ignored.
    """
    c = np.asarray(center, float)
    if spacing is None:
        h = np.full(3, 2.0 * R / (n - 1))
    else:
        h = np.broadcast_to(np.asarray(spacing, float), (3,)).copy()
    offs = (np.arange(n) - (n - 1) / 2.0)
    axes = [c[k] + h[k] * offs for k in range(3)]
    X, Y, T = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel(), T.ravel()], axis=-1)
    cell = float(np.prod(h))
    w = np.full(nodes.shape[0], cell)
    grid = {"origin": np.array([a[0] for a in axes]), "spacing": h,
            "shape": (n, n, n), "axes": axes}
    return HaarQuadrature("heisenberg", nodes, w, np.inf, cell * nodes.shape[0], grid=grid)


def quadrature(backend, **params) -> HaarQuadrature:
    _check_backend(backend)
    if backend == "torus":
        return torus_quadrature(int(params.get("n", 64)))
    if backend == "su2":
        return su2_quadrature(int(params.get("degree", 8)))
    return heisenberg_quadrature(float(params.get("R", 4.0)), int(params.get("n", 33)))


# ---------------------------------------------------------------------------
# Wigner matrices

@lru_cache(maxsize=None)
def _jy_eigen(two_l: int):
    l = two_l / 2.0
    m = l - np.arange(two_l + 1)
    jp = np.zeros((two_l + 1, two_l + 1))
    for i in range(1, two_l + 1):
        jp[i - 1, i] = np.sqrt(l * (l + 1) - m[i] * (m[i] + 1))
    K = 0.5 * (jp.T - jp)           # d(beta) = expm(beta K), K real antisymmetric
    mu, V = np.linalg.eigh(1j * K)  # iK is Hermitian
    return m, mu, V


def wigner_small_d(l, beta):
    """d^l(beta) for an array of beta, rows/cols ordered m = l, ..., -l."""
    two_l = int(round(2 * l))
    _, mu, V = _jy_eigen(two_l)
    beta = np.atleast_1d(np.asarray(beta, float))
    # product quadratures repeat a handful of beta values
    ub, inv = np.unique(beta, return_inverse=True)
    ph = np.exp(-1j * ub[:, None] * mu[None, :])
    d = ((V[None, :, :] * ph[:, None, :]) @ V.conj().T).real
    return d[inv.reshape(-1)]


def wigner_D(l, angles):
    """Spin-l matrices e^{-i m alpha} d^l_{mn}(beta) e^{-i n gamma}."""
    ang = np.atleast_2d(np.asarray(angles, float))
    m, _, _ = _jy_eigen(int(round(2 * l)))
    d = wigner_small_d(l, ang[:, 1])
    left = np.exp(-1j * ang[:, 0][:, None] * m[None, :])
    right = np.exp(-1j * ang[:, 2][:, None] * m[None, :])
    return left[:, :, None] * d * right[:, None, :]


def su2_character(l, cos_half):
    """chi_l as a function of c = cos(theta/2): the Chebyshev polynomial U_{2l}(c)."""
    c = np.asarray(cos_half, float)
    n = int(round(2 * l))
    u_prev, u = np.ones_like(c), 2 * c
    if n == 0:
        return u_prev
    for _ in range(n - 1):
        u_prev, u = u, 2 * c * u - u_prev
    return u


# ---------------------------------------------------------------------------
# Schroedinger model for the Heisenberg group

def displacement_matrix(alpha, N):
    """<m| exp(alpha a^+ - conj(alpha) a) |n> for m, n < N (Laguerre form).

    Generalized Laguerre polynomials come from their three-term recurrence in
    the degree, one pass per order k = |m - n|.
    """
    alpha = np.atleast_1d(np.asarray(alpha, complex))
    r2 = np.abs(alpha) ** 2
    env = np.exp(-0.5 * r2)
    out = np.empty((alpha.size, N, N), complex)
    lf = gammaln(np.arange(N + 1) + 1.0)
    for k in range(N):
        nmax = N - k
        lag = np.empty((nmax, alpha.size))
        lag[0] = 1.0
        if nmax > 1:
            lag[1] = 1.0 + k - r2
        for n in range(1, nmax - 1):
            lag[n + 1] = ((2 * n + 1 + k - r2) * lag[n] - (n + k) * lag[n - 1]) / (n + 1)
        n = np.arange(nmax)
        pref = np.exp(0.5 * (lf[n] - lf[n + k]))               # sqrt(n! / (n+k)!)
        lower = pref[:, None] * lag * (alpha ** k * env)[None, :]
        out[:, n + k, n] = lower.T
        if k:
            out[:, n, n + k] = (pref[:, None] * lag * ((-np.conj(alpha)) ** k * env)[None, :]).T
    return out


def schrodinger_alpha(lam, x, y):
    s = np.sqrt(TWO_PI * abs(lam))
    return (-s * np.asarray(x, float) + 1j * np.sign(lam) * s * np.asarray(y, float)) / np.sqrt(2.0)


def schrodinger_matrix(lam, points, N):
    """Truncated pi_lambda(x, y, t) in the |lambda|-rescaled Hermite basis."""
    p = np.atleast_2d(np.asarray(points, float))
    D = displacement_matrix(schrodinger_alpha(lam, p[:, 0], p[:, 1]), N)
    return np.exp(TWO_PI * 1j * lam * p[:, 2])[:, None, None] * D


def hermite_functions(N, xi):
    """Normalized Hermite functions h_0..h_{N-1} at xi, shape (N, len(xi))."""
    xi = np.asarray(xi, float)
    H = np.empty((N, xi.size))
    H[0] = np.pi ** -0.25 * np.exp(-0.5 * xi ** 2)
    if N > 1:
        H[1] = np.sqrt(2.0) * xi * H[0]
    for k in range(2, N):
        H[k] = np.sqrt(2.0 / k) * xi * H[k - 1] - np.sqrt((k - 1) / k) * H[k - 2]
    return H


# ---------------------------------------------------------------------------
# truncated duals

@dataclass(frozen=True, eq=False)
class IrrepSlice:
    backend: str
    labels: np.ndarray
    dims: np.ndarray
    plancherel_weights: np.ndarray
    params: dict = field(default_factory=dict)

    def __len__(self):
        return self.labels.size

    def index(self, label):
        hit = np.nonzero(np.isclose(self.labels, label, atol=1e-12, rtol=0))[0]
        if hit.size == 0:
            raise KeyError(f"label {label} not in this {self.backend} slice")
        return int(hit[0])

    def matrices(self, j, points):
        """pi_j at an array of points, shape (n, d, d)."""
        lab = self.labels[j]
        if self.backend == "torus":
            x = np.atleast_1d(np.asarray(points, float))
            return np.exp(TWO_PI * 1j * lab * x)[:, None, None]
        if self.backend == "su2":
            return wigner_D(lab, points)
        return schrodinger_matrix(lab, points, int(self.dims[j]))

    def with_cp(self, c_p):
        if self.backend != "heisenberg":
            raise BackendMismatch("c_P only exists for the heisenberg slice")
        p = dict(self.params)
        p["c_P"] = float(c_p)
        w = c_p * np.abs(self.labels) * p["dlam"]
        return IrrepSlice(self.backend, self.labels, self.dims, w, p)

    @property
    def max_label(self):
        return float(np.max(np.abs(self.labels)))


# value of c_P making the Plancherel formula exact for the convention above;
# see calibrate_plancherel and tests/test_groups.py for how it was obtained
GOLDEN_CP = 1.0


def heisenberg_lambdas(lam_min=0.125, lam_max=2.5, dlam=0.125):
    n = int(round((lam_max - lam_min) / dlam))
    pos = lam_min + (np.arange(n) + 0.5) * dlam
    return np.concatenate([-pos[::-1], pos])


def dual_slice(backend, K=None, L=None, lambdas=None, N=16, lam_min=0.125,
               lam_max=2.5, dlam=0.125, c_P=None) -> IrrepSlice:
    _check_backend(backend)
    if backend == "torus":
        if K is None or K < 0:
            raise EmptySliceError("torus slice needs a cutoff K >= 0")
        k = np.arange(-int(K), int(K) + 1, dtype=float)
        return IrrepSlice("torus", k, np.ones(k.size, int), np.ones(k.size), {"K": int(K)})
    if backend == "su2":
        if L is None or L < 0:
            raise EmptySliceError("su2 slice needs a cutoff L >= 0")
        ls = np.arange(0, int(round(2 * L)) + 1) / 2.0
        d = (2 * ls + 1).astype(int)
        return IrrepSlice("su2", ls, d, d.astype(float), {"L": float(L)})
    if lam_min <= 0:
        raise ValueError("heisenberg slice needs lam_min > 0 (the lambda = 0 stratum is excluded)")
    if lambdas is None:
        lambdas = heisenberg_lambdas(lam_min, lam_max, dlam)
    else:
        lambdas = np.sort(np.asarray(lambdas, float))
        pos = np.unique(np.abs(lambdas))
        dlam = float(np.min(np.diff(pos))) if pos.size > 1 else float(pos[0])
    lambdas = lambdas[np.abs(lambdas) >= lam_min - 1e-15]
    if lambdas.size == 0 or N < 1:
        raise EmptySliceError("heisenberg slice is empty")
    c_P = GOLDEN_CP if c_P is None else float(c_P)
    w = c_P * np.abs(lambdas) * dlam
    params = {"N": int(N), "dlam": float(dlam), "lam_min": float(lam_min), "c_P": c_P}
    return IrrepSlice("heisenberg", lambdas, np.full(lambdas.size, int(N)), w, params)


def evaluate_irrep(s: IrrepSlice, label, p: GroupPoint):
    if p.backend != s.backend:
        raise BackendMismatch(f"{p.backend} point for a {s.backend} slice")
    j = s.index(label)
    return s.matrices(j, _coords(p) if s.backend != "torus" else p.array)[0]


def calibrate_plancherel(s: IrrepSlice, quad: HaarQuadrature, probe) -> float:
    """c_P minimizing | ||probe||^2 - c_P sum_lambda |lambda| dlam ||probe^(lambda)||_HS^2 |.

    ``probe`` is a GridFunction (or a sample array on ``quad``).
    """
    from .fourier import GridFunction, fourier  # local: fourier imports this module
    if s.backend != "heisenberg":
        raise BackendMismatch("calibration is only needed on the heisenberg backend")
    if not isinstance(probe, GridFunction):
        probe = GridFunction("heisenberg", quad, np.asarray(probe, complex))
    F = fourier(probe, s.with_cp(1.0))
    hs = sum(abs(lam) * s.params["dlam"] * np.sum(np.abs(m) ** 2)
             for lam, m in zip(s.labels, F.mats))
    if hs < 1e-10:
        raise CalibrationError(f"probe has HS mass {hs:.3e} on this slice; cannot calibrate")
    return float(np.sum(quad.weights * np.abs(probe.values) ** 2) / hs)
