"""Heat kernel on SU(2), central functions, difference operators, symbol
convolution, approximate identities and spectral Sobolev norms."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .fourier import (
    FourierField, GridFunction, SymbolField, band_slice, default_quadrature, fourier,
    inverse_fourier, pair_values,
)
from .groups import (
    HOMOGENEOUS_DIM, HaarQuadrature, IrrepSlice, dilate, heis_mul, su2_half_trace_pairs,
    su2_quaternion, torus_quadrature,
)
from .kn import KernelField, kernel_to_symbol, symbol_to_kernel


# ---------------------------------------------------------------------------
# central functions on SU(2): sum_n coef[n] U_n(cos(theta/2)), n = 2l

@dataclass(eq=False)
class CentralFunction:
    coef: np.ndarray

    @property
    def band(self) -> float:
        return (self.coef.size - 1) / 2.0

    def values(self, nodes) -> np.ndarray:
        c = su2_quaternion(np.atleast_2d(nodes))[:, 0]
        return _kernels.cheb_u_series(np.clip(c, -1.0, 1.0), self.coef)

    def pairs(self, xs, ys) -> np.ndarray:
        """f(x_i^{-1} y_k) for all pairs."""
        c = su2_half_trace_pairs(np.atleast_2d(xs), np.atleast_2d(ys))
        return _kernels.cheb_u_series(np.ascontiguousarray(c), self.coef)

    def grid(self, quad: HaarQuadrature) -> GridFunction:
        return GridFunction("su2", quad, self.values(quad.nodes), self.band)

    def fourier_field(self, s: IrrepSlice) -> FourierField:
        mats = []
        for l, d in zip(s.labels, s.dims):
            n = int(round(2 * l))
            c = self.coef[n] if n < self.coef.size else 0.0
            mats.append(np.eye(int(d)) * c / d)
        return FourierField(s, mats)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.coef ** 2)))

    @classmethod
    def project(cls, g, L: float, n_nodes: int | None = None) -> "CentralFunction":
        """Coefficients of the class function g(cos(theta/2)) on characters l <= L."""
        nmax = int(round(2 * L))
        n_nodes = n_nodes or max(4 * nmax + 64, 256)
        k = np.arange(1, n_nodes + 1)
        u = np.cos(k * np.pi / (n_nodes + 1))
        w = np.pi / (n_nodes + 1) * np.sin(k * np.pi / (n_nodes + 1)) ** 2
        gv = np.asarray(g(u), float)
        U = np.empty((nmax + 1, u.size))
        U[0] = 1.0
        if nmax >= 1:
            U[1] = 2 * u
        for n in range(2, nmax + 1):
            U[n] = 2 * u * U[n - 1] - U[n - 2]
        return cls((2.0 / np.pi) * (U @ (w * gv)))

    def __call__(self, cos_half):
        return _kernels.cheb_u_series(np.ascontiguousarray(np.asarray(cos_half, float)), self.coef)


# ---------------------------------------------------------------------------
# heat kernel

def heat_coefficients(t, ls):
    ls = np.asarray(ls, float)
    return np.exp(-t * ls * (ls + 1))


def heat_tail(t, L):
    """sup-norm bound on the characters l > L dropped from p_t."""
    ls = np.arange(int(round(2 * L)) + 1, int(round(2 * L)) + 4000) / 2.0
    return float(np.sum((2 * ls + 1) ** 2 * heat_coefficients(t, ls)))


@dataclass(eq=False)
class HeatKernel:
    t: float
    L: float
    central: CentralFunction
    samples: GridFunction
    tail: float

    def spectral(self, s: IrrepSlice):
        return heat_coefficients(self.t, s.labels)


def heat_kernel(t: float, L: float | None = None, quad: HaarQuadrature | None = None,
                tol: float = 1e-8) -> HeatKernel:
    """p_t = sum_l (2l+1) e^{-t l(l+1)} chi_l, truncated at L."""
    if t <= 0:
        raise ValueError("heat time must be positive")
    if L is None:
        L = 0.0
        while heat_tail(t, L) > tol:
            L += 0.5
    tail = heat_tail(t, L)
    if tail > tol:
        raise ValueError(f"heat kernel tail {tail:.2e} > {tol:.0e} at L={L}; raise L or t")
    ls = np.arange(int(round(2 * L)) + 1) / 2.0
    cf = CentralFunction((2 * ls + 1) * heat_coefficients(t, ls))
    quad = quad or default_quadrature("su2", 2 * L)
    return HeatKernel(t, L, cf, cf.grid(quad), tail)


def sqrt_heat_window_coefficients(t: float, L: float | None = None, tol: float = 1e-6):
    """Character coefficients of sqrt(p_t) projected on l <= L and renormalized.

    If L is None the smallest L whose discarded L2 mass is below ``tol`` is used.
    """
    hk = heat_kernel(t, tol=1e-12)
    big = CentralFunction.project(lambda u: np.sqrt(np.maximum(hk.central(u), 0.0)), 40.0, 2048)
    c = big.coef
    total = np.sum(c ** 2)
    if L is None:
        tail = total - np.cumsum(c ** 2)
        n = int(np.argmax(tail <= tol * total))
        L = n / 2.0
    n = int(round(2 * L))
    kept = c[: n + 1].copy()
    dropped = float(max(total - np.sum(kept ** 2), 0.0) / total)
    return CentralFunction(kept / np.sqrt(np.sum(kept ** 2))), dropped


# ---------------------------------------------------------------------------
# approximate identities

@dataclass(eq=False)
class ApproxIdentity:
    family: str
    t: float
    samples: GridFunction
    meta: dict = field(default_factory=dict)

    def mass(self) -> float:
        return float(np.sum(self.samples.quad.weights * self.samples.values).real)


def approx_identity(family: str, t: float, quad: HaarQuadrature | None = None) -> ApproxIdentity:
    if family == "su2-heat":
        hk = heat_kernel(t, quad=quad)
        return ApproxIdentity(family, t, hk.samples, {"L": hk.L, "central": hk.central})
    if family == "torus-fejer":
        K = max(int(round(1.0 / t)), 1)
        k = np.arange(-K, K + 1)
        coef = 1.0 - np.abs(k) / (K + 1.0)
        quad = quad or torus_quadrature(2 * K + 2)
        x = quad.nodes
        vals = (coef[None, :] * np.exp(2j * np.pi * np.outer(x, k))).sum(axis=1)
        return ApproxIdentity(family, t, GridFunction("torus", quad, vals, float(K)), {"K": K})
    if family == "h1-dilated":
        if quad is None:
            raise ValueError("h1 approximate identities need a grid quadrature")
        mass0 = np.pi ** 1.5 * 2 ** 1.5            # int of gaussian_h1 with unit widths
        vals = t ** (-HOMOGENEOUS_DIM) * gaussian_h1(dilate(quad.nodes, 1.0 / t), 1.0, 1.0) / mass0
        return ApproxIdentity(family, t, GridFunction("heisenberg", quad, vals))
    raise ValueError(f"unknown approximate identity family {family!r}")


def gaussian_h1(p, sh=1.0, st=1.0, center=(0.0, 0.0, 0.0)):
    q = np.asarray(p, float) - np.asarray(center, float)
    return np.exp(-(q[..., 0] ** 2 + q[..., 1] ** 2) / (2 * sh ** 2) - q[..., 2] ** 2 / (2 * st ** 2))


# ---------------------------------------------------------------------------
# difference operators and symbol convolution

def delta_q(q: GridFunction, sig: SymbolField, out_slice: IrrepSlice | None = None,
            yquad: HaarQuadrature | None = None) -> SymbolField:
    """Delta_q sigma = F(q kappa_x) fiberwise."""
    s = sig.slice
    if out_slice is None:
        band = s.max_label + (q.band or 0.0)
        out_slice = band_slice(s.backend, band) if s.backend != "heisenberg" else s
    if yquad is None:
        if s.backend == "heisenberg":
            yquad = q.quad
        else:
            yquad = default_quadrature(s.backend, s.max_label + (q.band or 0.0) + out_slice.max_label)
    qv = q.values if q.quad is yquad else _resample_values(q, yquad)
    kap = symbol_to_kernel(sig, yquad)
    prod = KernelField(kap.backend, kap.xquad, yquad, kap.values * qv[None, :])
    out = kernel_to_symbol(prod, out_slice)
    out.xquad = sig.xquad
    out.x_independent = sig.x_independent
    return out


def _resample_values(q: GridFunction, quad):
    from .fourier import resample
    return resample(q, quad).values


def symbol_convolve(sig: SymbolField, phi, out_quad: HaarQuadrature | None = None) -> SymbolField:
    """(sigma * phi)(x, pi) = sum_z w_z sigma(z, pi) phi(z^{-1} x).

    ``phi`` is a CentralFunction (su2), a band-limited GridFunction (compact
    backends) or a GridFunction on a heisenberg grid (trilinear rule).
    """
    zq = sig.xquad
    out_quad = out_quad or zq
    s = sig.slice
    if isinstance(phi, CentralFunction):
        Phi = phi.pairs(zq.nodes, out_quad.nodes)
    elif s.backend == "heisenberg":
        g = phi.quad.grid
        u = heis_mul(-zq.nodes[:, None, :], out_quad.nodes[None, :, :]).reshape(-1, 3)
        Phi = _kernels.trilinear(phi.values.reshape(g["shape"]), g["origin"], g["spacing"],
                                 np.ascontiguousarray(u)).reshape(zq.size, out_quad.size)
    else:
        ps = band_slice(s.backend, phi.band)
        Phi = pair_values(fourier(phi, ps), ps, zq.nodes, out_quad.nodes)
    W = zq.weights[:, None] * Phi
    mats = []
    for j in range(len(s)):
        m = sig.at(j)
        if m.shape[0] == 1:
            mats.append(W.sum(axis=0)[:, None, None] * m)
        else:
            mats.append((W.T @ m.reshape(zq.size, -1)).reshape((out_quad.size,) + m.shape[1:]))
    return SymbolField(s, out_quad, mats, False, sig.self_adjoint)


def su2_distance(xs, ys):
    """||U_x - U_y||_F, a bi-invariant distance with |y^{-1}| = |y|."""
    c = su2_half_trace_pairs(np.atleast_2d(xs), np.atleast_2d(ys))
    return 2.0 * np.sqrt(np.maximum(1.0 - c, 0.0))


def convolution_majorant(phi: GridFunction) -> float:
    """int |y^{-1}| |phi(y)| dy with the distance of su2_distance."""
    e = np.zeros((1, 3))
    r = su2_distance(e, phi.quad.nodes)[0]
    return float(np.sum(phi.quad.weights * r * np.abs(phi.values)))


def lipschitz_estimate(sig: SymbolField, n_pairs: int = 400, step: float = 1e-4, seed: int = 0) -> float:
    """Local Lipschitz constant of x -> sigma(x, .) (sup over labels), by finite differences."""
    rng = np.random.default_rng(seed)
    x = rng.uniform([0, 0.05, 0], [2 * np.pi, np.pi - 0.05, 4 * np.pi], size=(n_pairs, 3))
    best = 0.0
    for _ in range(3):
        dx = rng.normal(size=(n_pairs, 3)) * step
        y = x + dx
        dist = su2_distance(x, y).diagonal()
        for j in range(len(sig.slice)):
            a = sig.fn(x, j)
            b = sig.fn(y, j)
            diff = np.linalg.norm(a - b, 2, axis=(1, 2))
            best = max(best, float(np.max(diff / np.maximum(dist, 1e-300))))
    return best


# ---------------------------------------------------------------------------
# Sobolev norms

def laplace_eigenvalues(s: IrrepSlice, j: int) -> np.ndarray:
    """Eigenvalues of the (sub-)Laplacian in the representation pi_j, one per row."""
    lab = s.labels[j]
    d = int(s.dims[j])
    if s.backend == "torus":
        return np.full(d, 4 * np.pi ** 2 * lab ** 2)
    if s.backend == "su2":
        return np.full(d, lab * (lab + 1))
    return 2 * np.pi * abs(lab) * (2 * np.arange(d) + 1)


def sobolev_norm(f: GridFunction, s_exp: float, sl: IrrepSlice) -> float:
    F = fourier(f, sl)
    tot = 0.0
    for j, w in enumerate(sl.plancherel_weights):
        lam = laplace_eigenvalues(sl, j)
        tot += w * np.sum((1 + lam)[:, None] ** s_exp * np.abs(F.mats[j]) ** 2)
    return float(np.sqrt(tot))
