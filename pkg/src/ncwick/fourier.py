"""Group Fourier transform, inversion, convolution and Plancherel pairings.

Conventions: f^(pi) = sum_i w_i f(z_i) pi(z_i)^*, and the inversion
f(x) = sum_pi mu_pi tr(pi(x) f^(pi)) with mu_pi the slice's Plancherel weights.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .groups import (
    BackendMismatch, HaarQuadrature, IrrepSlice, dual_slice,
    schrodinger_alpha, displacement_matrix, su2_quadrature, torus_quadrature,
)

TINY = 1e-300


@dataclass(eq=False)
class GridFunction:
    backend: str
    quad: HaarQuadrature
    values: np.ndarray
    band: float | None = None
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, complex)
        if self.values.shape != (self.quad.size,):
            raise ValueError(f"expected {self.quad.size} samples, got {self.values.shape}")
        if self.backend != self.quad.backend:
            raise BackendMismatch("function and quadrature backends differ")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite samples")

    @classmethod
    def from_callable(cls, backend, quad, fn: Callable, band=None):
        return cls(backend, quad, fn(quad.nodes), band)

    def inner(self, other: "GridFunction") -> complex:
        return complex(np.sum(self.quad.weights * self.values * np.conj(other.values)))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.quad.weights * np.abs(self.values) ** 2)))

    def l1_norm(self) -> float:
        return float(np.sum(self.quad.weights * np.abs(self.values)))

    def with_values(self, values, band=None):
        return GridFunction(self.backend, self.quad, values, band if band is not None else self.band)

    def __add__(self, o):
        return self.with_values(self.values + o.values, _max_band(self.band, o.band))

    def __sub__(self, o):
        return self.with_values(self.values - o.values, _max_band(self.band, o.band))

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _max_band(a, b):
    if a is None or b is None:
        return None
    return max(a, b)


@dataclass(eq=False)
class FourierField:
    slice: IrrepSlice
    mats: list

    def inner(self, other: "FourierField") -> complex:
        w = self.slice.plancherel_weights
        return complex(sum(wj * np.sum(a * np.conj(b)) for wj, a, b in zip(w, self.mats, other.mats)))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def sup_norm(self) -> float:
        return float(max(np.linalg.norm(m, 2) for m in self.mats))

    def __sub__(self, o):
        return FourierField(self.slice, [a - b for a, b in zip(self.mats, o.mats)])


@dataclass(eq=False)
class SymbolField:
    """sigma(x_i, pi_j): ``mats[j]`` has shape (n_x, d_j, d_j), or (1, d_j, d_j)
    when the symbol does not depend on x.

    ``xquad`` carries the x-nodes and their weights.  If the field was built
    from a callable it can be resampled on another quadrature with ``on``.
    """
    slice: IrrepSlice
    xquad: HaarQuadrature
    mats: list
    x_independent: bool = False
    self_adjoint: bool = False
    fn: Callable | None = None
    x_band: float | None = None

    @classmethod
    def from_callable(cls, s: IrrepSlice, xquad: HaarQuadrature, fn, self_adjoint=False, x_band=None):
        """``fn(x_nodes, j)`` returns sigma(x, pi_j) with shape (n_x, d_j, d_j)."""
        mats = [np.asarray(fn(xquad.nodes, j), complex) for j in range(len(s))]
        out = cls(s, xquad, mats, False, self_adjoint, fn, x_band)
        out._check_sa()
        return out

    @classmethod
    def constant(cls, s: IrrepSlice, xquad: HaarQuadrature, fn, self_adjoint=False):
        """x-independent symbol; ``fn(j)`` returns the (d_j, d_j) matrix."""
        mats = [np.asarray(fn(j), complex)[None] for j in range(len(s))]

        def call(x, j):
            return np.broadcast_to(mats[j], (len(x),) + mats[j].shape[1:]).copy()
        out = cls(s, xquad, mats, True, self_adjoint, call, 0.0)
        out._check_sa()
        return out

    @classmethod
    def identity(cls, s, xquad):
        return cls.constant(s, xquad, lambda j: np.eye(int(s.dims[j])), self_adjoint=True)

    def _check_sa(self):
        if self.self_adjoint and self.sa_defect() > 1e-12:
            raise ValueError(f"symbol flagged self-adjoint but defect is {self.sa_defect():.2e}")

    def at(self, j):
        m = self.mats[j]
        if m.shape[0] == 1 and self.xquad.size != 1:
            return np.broadcast_to(m, (self.xquad.size,) + m.shape[1:])
        return m

    def on(self, xquad: HaarQuadrature) -> "SymbolField":
        if self.x_independent:
            return SymbolField(self.slice, xquad, self.mats, True, self.self_adjoint, self.fn, self.x_band)
        if self.fn is None:
            raise ValueError("symbol has no callable; cannot resample")
        return SymbolField.from_callable(self.slice, xquad, self.fn, self.self_adjoint, self.x_band)

    def adjoint(self) -> "SymbolField":
        fn = None if self.fn is None else (lambda x, j, f=self.fn: np.conj(np.swapaxes(f(x, j), -1, -2)))
        return SymbolField(self.slice, self.xquad, [np.conj(np.swapaxes(m, -1, -2)) for m in self.mats],
                           self.x_independent, self.self_adjoint, fn, self.x_band)

    def sa_defect(self) -> float:
        return float(max(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2)))) for m in self.mats))

    def l2_norm(self) -> float:
        tot = 0.0
        for j, w in enumerate(self.slice.plancherel_weights):
            hs = np.sum(np.abs(self.at(j)) ** 2, axis=(1, 2))
            tot += w * np.sum(self.xquad.weights * hs)
        return float(np.sqrt(tot))

    def sup_norm(self) -> float:
        """max over (x_i, pi_j) of the operator norm of sigma(x_i, pi_j)."""
        return float(max(np.max(np.linalg.norm(m, 2, axis=(1, 2))) for m in self.mats))

    def min_eigenvalue(self) -> tuple[float, int, int]:
        """smallest eigenvalue over the field, with the (x index, label index) where it sits."""
        best = (np.inf, -1, -1)
        for j, m in enumerate(self.mats):
            h = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
            ev = np.linalg.eigvalsh(h)[:, 0]
            i = int(np.argmin(ev))
            if ev[i] < best[0]:
                best = (float(ev[i]), i, j)
        return best

    def __add__(self, o):
        return _combine(self, o, 1.0)

    def __sub__(self, o):
        return _combine(self, o, -1.0)


def _combine(a: SymbolField, b: SymbolField, sign):
    if a.xquad is not b.xquad and a.xquad.size != b.xquad.size:
        raise ValueError("symbols live on different x-quadratures")
    mats = [a.at(j) + sign * b.at(j) for j in range(len(a.slice))]
    fn = None
    if a.fn is not None and b.fn is not None:
        fn = lambda x, j: a.fn(x, j) + sign * b.fn(x, j)  # noqa: E731
    xb = None if a.x_band is None or b.x_band is None else max(a.x_band, b.x_band)
    return SymbolField(a.slice, a.xquad, mats, a.x_independent and b.x_independent,
                       a.self_adjoint and b.self_adjoint, fn, xb)


# ---------------------------------------------------------------------------
# representation matrices at quadrature nodes (cached on the quadrature)

CACHE_BYTES = 512 * 2 ** 20


def _remember(quad, key, arr):
    used = quad.cache.get("_bytes", 0)
    if used + arr.nbytes <= CACHE_BYTES:
        quad.cache[key] = arr
        quad.cache["_bytes"] = used + arr.nbytes
    return arr


def rep_matrices(s: IrrepSlice, j: int, quad: HaarQuadrature):
    key = ("pi", s.backend, float(s.labels[j]), int(s.dims[j]))
    hit = quad.cache.get(key)
    if hit is None:
        hit = _remember(quad, key, s.matrices(j, quad.nodes))
    return hit


def _heis_plane(quad):
    g = quad.grid
    X, Y = np.meshgrid(g["axes"][0], g["axes"][1], indexing="ij")
    return X.ravel(), Y.ravel(), g["axes"][2]


def _heis_displacements(quad, lam, N):
    key = ("disp", float(lam), int(N))
    hit = quad.cache.get(key)
    if hit is None:
        X, Y, _ = _heis_plane(quad)
        hit = _remember(quad, key, displacement_matrix(schrodinger_alpha(lam, X, Y), N))
    return hit


def _su2_axes(quad):
    """(alpha, beta, gamma) axes of an su2 product quadrature, or None."""
    if quad.backend != "su2" or not quad.grid or "shape" not in quad.grid:
        return None
    na, nb, ng = quad.grid["shape"]
    N = quad.nodes.reshape(na, nb, ng, 3)
    return N[:, 0, 0, 0], N[0, :, 0, 1], N[0, 0, :, 2]


def _su2_phases(l, al, ga):
    from .groups import wigner_small_d
    m = l - np.arange(int(round(2 * l)) + 1)
    return np.exp(1j * np.outer(al, m)), np.exp(1j * np.outer(ga, m)), wigner_small_d


def _fourier_su2_product(wf, s: IrrepSlice, quad) -> list:
    # pi(x)^*_{ab} = e^{i m_b alpha} d_{ba}(beta) e^{i m_a gamma}: two exponential sums, one beta sum
    al, be, ga = _su2_axes(quad)
    W = wf.reshape(len(al), len(be), len(ga))
    mats = []
    for l in s.labels:
        Ea, Eg, small_d = _su2_phases(l, al, ga)
        T = np.tensordot(W, Eg, axes=(2, 0))                  # [alpha, beta, a]
        G = np.einsum("xba,xp->bpa", T, Ea)                   # [beta, b, a]
        mats.append(np.sum(G * small_d(l, be), axis=0).T)
    return mats


def _inverse_su2_product(F, s: IrrepSlice, quad) -> np.ndarray:
    al, be, ga = _su2_axes(quad)
    out = np.zeros((len(al), len(be), len(ga)), complex)
    for j, l in enumerate(s.labels):
        Ea, Eg, small_d = _su2_phases(l, al, ga)
        H = small_d(l, be) * F.mats[j].T[None]                # [beta, m, n]
        T = H @ np.conj(Eg).T                                 # [beta, m, gamma]
        out += s.plancherel_weights[j] * np.einsum("am,bmg->abg", np.conj(Ea), T)
    return out.ravel()


def fourier(f: GridFunction, s: IrrepSlice) -> FourierField:
    if f.backend != s.backend:
        raise BackendMismatch(f"{f.backend} function, {s.backend} slice")
    wf = f.quad.weights * f.values
    mats = []
    if s.backend == "heisenberg":
        if f.quad.grid is None:
            raise ValueError("heisenberg transform needs a product-grid quadrature")
        nx, ny, nt = f.quad.grid["shape"]
        _, _, t = _heis_plane(f.quad)
        vals = wf.reshape(nx * ny, nt)
        for j, lam in enumerate(s.labels):
            ft = vals @ np.exp(-2j * np.pi * lam * t)
            D = _heis_displacements(f.quad, lam, int(s.dims[j]))
            mats.append(np.einsum("p,pba->ab", ft, np.conj(D)))
        return FourierField(s, mats)
    if _su2_axes(f.quad) is not None:
        return FourierField(s, _fourier_su2_product(wf, s, f.quad))
    for j in range(len(s)):
        P = rep_matrices(s, j, f.quad)
        mats.append(np.einsum("i,iba->ab", wf, np.conj(P)))
    return FourierField(s, mats)


def inverse_fourier(F: FourierField, s: IrrepSlice, quad: HaarQuadrature, band=None) -> GridFunction:
    """f(x) = sum_j mu_j tr(pi_j(x) F_j) sampled at the nodes of ``quad``."""
    w = s.plancherel_weights
    out = np.zeros(quad.size, complex)
    if s.backend == "heisenberg" and quad.grid is not None:
        nx, ny, nt = quad.grid["shape"]
        _, _, t = _heis_plane(quad)
        acc = np.zeros((nx * ny, nt), complex)
        for j, lam in enumerate(s.labels):
            D = _heis_displacements(quad, lam, int(s.dims[j]))
            g = np.einsum("pab,ba->p", D, F.mats[j])
            acc += w[j] * g[:, None] * np.exp(2j * np.pi * lam * t)[None, :]
        out = acc.ravel()
    elif _su2_axes(quad) is not None:
        out = _inverse_su2_product(F, s, quad)
    else:
        for j in range(len(s)):
            P = rep_matrices(s, j, quad)
            out += w[j] * np.einsum("iab,ba->i", P, F.mats[j])
    if band is None and s.backend != "heisenberg":
        band = s.max_label
    return GridFunction(s.backend, quad, out, band)


def band_slice(backend, band) -> IrrepSlice:
    if backend == "torus":
        return dual_slice("torus", K=int(round(band)))
    if backend == "su2":
        return dual_slice("su2", L=band)
    raise ValueError("band-limited slices exist only on compact backends")


def default_quadrature(backend, degree):
    """A compact quadrature integrating coefficients up to ``degree`` exactly."""
    if backend == "torus":
        return torus_quadrature(int(np.ceil(degree)) + 1)
    return su2_quadrature(int(np.ceil(degree)))


def resample(f: GridFunction, quad: HaarQuadrature) -> GridFunction:
    """Band-limited interpolation of a compact-group function onto new nodes."""
    if f.band is None:
        raise ValueError("resampling needs a declared band limit")
    if f.quad is quad:
        return f
    s = band_slice(f.backend, f.band)
    return inverse_fourier(fourier(f, s), s, quad, f.band)


def _flat_rows(s: IrrepSlice, j, points):
    P = s.matrices(j, points)
    return P.reshape(P.shape[0], -1)


def pair_values(F: FourierField, s: IrrepSlice, xs, ys) -> np.ndarray:
    """G[i, k] = g(x_i^{-1} y_k) for the band-limited g with transform F.

    Uses pi(x^{-1} y) = pi(x)^* pi(y), which splits the pair evaluation into a
    single matrix product.
    """
    if s.backend == "heisenberg":
        raise ValueError("pair_values is for compact backends")
    left, right = [], []
    for j in range(len(s)):
        Px = s.matrices(j, xs)
        Py = s.matrices(j, ys)
        left.append(Px.reshape(Px.shape[0], -1))
        right.append((s.plancherel_weights[j] * (Py @ F.mats[j])).reshape(Py.shape[0], -1))
    return np.conj(np.concatenate(left, axis=1)) @ np.concatenate(right, axis=1).T


def convolve(f: GridFunction, g: GridFunction, xquad: HaarQuadrature | None = None) -> GridFunction:
    """(f * g)(x) = sum_y w_y f(y) g(y^{-1} x), returned on ``xquad`` (default: f's nodes)."""
    if f.backend != g.backend:
        raise BackendMismatch("convolution of functions on different backends")
    xquad = f.quad if xquad is None else xquad
    wf = f.quad.weights * f.values
    if f.backend == "heisenberg":
        grid = g.quad.grid
        gv = g.values.reshape(grid["shape"])
        peak = np.max(np.abs(gv)) + TINY
        edge = max(np.max(np.abs(gv[[0, -1]])), np.max(np.abs(gv[:, [0, -1]])),
                   np.max(np.abs(gv[:, :, [0, -1]])))
        vals = _kernels.heis_convolve(wf, f.quad.nodes, gv, grid["origin"], grid["spacing"],
                                      np.ascontiguousarray(xquad.nodes))
        out = GridFunction("heisenberg", xquad, vals)
        if edge > 1e-8 * peak:
            out.flags["support_overflow"] = True
            warnings.warn("convolution factor is not negligible on the box boundary", RuntimeWarning)
        return out
    if g.band is None:
        raise ValueError("compact convolution needs a band-limited second factor")
    s = band_slice(g.backend, g.band)
    G = pair_values(fourier(g, s), s, f.quad.nodes, xquad.nodes)
    band = g.band if f.band is None else min(f.band, g.band)
    return GridFunction(f.backend, xquad, wf @ G, band)


def plancherel_defect(f: GridFunction, g: GridFunction, s: IrrepSlice) -> float:
    lhs = f.inner(g)
    rhs = fourier(f, s).inner(fourier(g, s))
    return float(abs(lhs - rhs) / (f.norm() * g.norm() + TINY))


# ---------------------------------------------------------------------------
# random band-limited test data (compact backends)

def random_band_function(backend, band, quad: HaarQuadrature, rng) -> GridFunction:
    """Inverse transform of Gaussian random coefficients on every label up to ``band``."""
    s = band_slice(backend, band)
    F = FourierField(s, [rng.normal(size=(int(d), int(d))) + 1j * rng.normal(size=(int(d), int(d)))
                         for d in s.dims])
    return inverse_fourier(F, s, quad, band)


def x_modes(backend, x) -> np.ndarray:
    """Band-one functions of x, each bounded by 1 in modulus: shape (n_x, n_modes)."""
    if backend == "torus":
        x = np.asarray(x, float).reshape(-1)
        return np.exp(2j * np.pi * np.outer(x, [-1, 0, 1]))
    from .groups import wigner_D
    D = wigner_D(1, x)
    return np.concatenate([np.ones((D.shape[0], 1)), D.reshape(D.shape[0], 9)], axis=1)


def random_symbol(s: IrrepSlice, quad: HaarQuadrature, rng, kind: str = "general",
                  terms: int = 3) -> SymbolField:
    """Random symbol of x-band 1 on the slice ``s``.

    kind="general": no structure; "hermitian": sigma(x, pi) self-adjoint;
    "positive": sum_r (1 + Re(e^{i theta_r} m_r(x))) v_r v_r^* with |m_r| <= 1,
    so every sigma(x, pi) is positive semidefinite.
    """
    nm = x_modes(s.backend, quad.nodes[:1]).shape[1]
    dims = [int(d) for d in s.dims]

    def cplx(*shape):
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    if kind in ("general", "hermitian"):
        C = [cplx(nm, d, d) / np.sqrt(nm * d) for d in dims]

        def fn(x, j):
            out = np.einsum("xm,mab->xab", x_modes(s.backend, x), C[j])
            if kind == "hermitian":
                out = 0.5 * (out + np.conj(np.swapaxes(out, 1, 2)))
            return out
    elif kind == "positive":
        modes = rng.integers(1, nm, size=terms)
        phase = np.exp(1j * rng.uniform(0, 2 * np.pi, size=terms))
        # rank-one blocks keep sigma singular for d > terms: positivity is tested at its edge
        V = [[cplx(d) for d in dims] for _ in range(terms)]
        P = [[np.outer(v, np.conj(v)) / d for v, d in zip(Vr, dims)] for Vr in V]

        def fn(x, j):
            m = x_modes(s.backend, x)
            out = 0
            for r in range(terms):
                wgt = 1.0 + np.real(phase[r] * m[:, modes[r]])
                out = out + wgt[:, None, None] * P[r][j][None]
            return np.asarray(out, complex)
    else:
        raise ValueError(f"unknown random symbol kind {kind!r}")
    return SymbolField.from_callable(s, quad, fn, kind != "general", 1.0)
