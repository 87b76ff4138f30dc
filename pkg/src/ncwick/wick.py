"""Windows, the coherent-state transform B, its adjoint, Wick quantization,
the Wick convolution kernel and frame coefficients.

On the compact backends everything is exact within declared band limits:
a frame fixes the function band, the window band and the quadratures
needed for B and B* to be an isometry and its adjoint on the truncated space.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calculus import CentralFunction, sqrt_heat_window_coefficients
from .fourier import (
    FourierField, GridFunction, SymbolField, band_slice, default_quadrature, fourier,
    inverse_fourier, pair_values, rep_matrices,
)
from .groups import HaarQuadrature, IrrepSlice, heis_mul, inv_array, mul_array
from .kn import (
    KernelField, OperatorMatrix, PeterWeylBasis, _flat_reps, _labels_matrices,
    coefficient_weights, peter_weyl_basis,
)

MEMORY_CAP = int(float(os.environ.get("NCWICK_MEMORY_CAP", 2 * 2 ** 30)))


class MemoryGuardError(MemoryError):
    pass


def check_memory(nbytes, what="dense layout", cap=None):
    cap = MEMORY_CAP if cap is None else cap
    if nbytes > cap:
        raise MemoryGuardError(f"{what} needs {nbytes / 2**30:.2f} GiB, above the cap of "
                               f"{cap / 2**30:.2f} GiB (set NCWICK_MEMORY_CAP to raise it)")


# ---------------------------------------------------------------------------
# windows

@dataclass(eq=False)
class Window:
    backend: str
    band: float | None                 # compact backends: Fourier band of a
    coeffs: FourierField | None = None  # compact backends
    central: CentralFunction | None = None
    fn: Callable | None = None          # heisenberg: pointwise evaluator
    even: bool = False
    real: bool = False
    desc: dict = field(default_factory=dict)

    def values(self, points) -> np.ndarray:
        if self.central is not None:
            return self.central.values(points).astype(complex)
        if self.coeffs is not None:
            quad = HaarQuadrature(self.backend, np.asarray(points), np.ones(len(points)), 0, 0.0)
            return inverse_fourier(self.coeffs, self.coeffs.slice, quad).values
        return np.asarray(self.fn(np.asarray(points, float)), complex)

    def pairs(self, xs, ys) -> np.ndarray:
        """a(x_i^{-1} y_k)."""
        if self.central is not None:
            return self.central.pairs(xs, ys).astype(complex)
        if self.coeffs is not None:
            return pair_values(self.coeffs, self.coeffs.slice, xs, ys)
        u = heis_mul(-np.asarray(xs)[:, None, :], np.asarray(ys)[None, :, :])
        return self.values(u.reshape(-1, 3)).reshape(len(xs), len(ys))

    def l2_norm(self, quad=None) -> float:
        if self.coeffs is not None:
            return self.coeffs.norm()
        if self.central is not None:
            return self.central.l2_norm()
        return float(np.sqrt(np.sum(quad.weights * np.abs(self.values(quad.nodes)) ** 2)))

    def verify_flags(self, n=64, seed=0) -> dict:
        rng = np.random.default_rng(seed)
        if self.backend == "torus":
            x = rng.uniform(0, 1, n)
        elif self.backend == "su2":
            x = rng.uniform([0, 0, 0], [2 * np.pi, np.pi, 4 * np.pi], (n, 3))
        else:
            x = rng.normal(size=(n, 3))
        v = self.values(x)
        vi = self.values(inv_array(self.backend, x))
        scale = np.max(np.abs(v)) + 1e-300
        return {"even_defect": float(np.max(np.abs(v - vi)) / scale),
                "real_defect": float(np.max(np.abs(v.imag)) / scale)}


def constant_window() -> Window:
    s = band_slice("torus", 0)
    return Window("torus", 0.0, FourierField(s, [np.ones((1, 1), complex)]), even=True, real=True,
                  desc={"kind": "constant"})


def torus_gaussian_window(width: float = 0.1, K: int | None = None, tol: float = 1e-14) -> Window:
    """Periodized Gaussian of standard deviation ``width``, L2-normalized.

    Its Fourier coefficients are exp(-2 pi^2 width^2 k^2) up to a constant;
    K defaults to the first |k| where they drop below tol.
    """
    if K is None:
        K = int(np.ceil(np.sqrt(-np.log(tol) / (2 * np.pi ** 2 * width ** 2))))
    k = np.arange(-K, K + 1)
    c = np.exp(-2 * np.pi ** 2 * width ** 2 * k ** 2)
    c = c / np.sqrt(np.sum(c ** 2))
    s = band_slice("torus", K)
    return Window("torus", float(K), FourierField(s, [np.array([[v]], complex) for v in c]),
                  even=True, real=True, desc={"kind": "gaussian", "width": width, "K": K})


def su2_heat_window(t: float = 0.35, L: float | None = None, tol: float = 1e-6) -> Window:
    """sqrt(p_t) projected on spins l <= L and renormalized (a central, real, even window)."""
    cf, dropped = sqrt_heat_window_coefficients(t, L, tol)
    s = band_slice("su2", cf.band)
    return Window("su2", cf.band, cf.fourier_field(s), central=cf, even=True, real=True,
                  desc={"kind": "sqrt-heat", "t": t, "L": cf.band, "dropped_mass": dropped})


def heisenberg_gaussian_window(sh: float = 1.0, st: float = 1.0, center=(0.0, 0.0, 0.0)) -> Window:
    """exp(-|z_h|^2/(2 sh^2) - t^2/(2 st^2)), normalized in L2; even iff centered."""
    c = np.asarray(center, float)
    amp = (np.pi ** 1.5 * sh ** 2 * st) ** -0.5

    def fn(p):
        q = np.asarray(p, float) - c
        return amp * np.exp(-(q[..., 0] ** 2 + q[..., 1] ** 2) / (2 * sh ** 2) - q[..., 2] ** 2 / (2 * st ** 2))
    centered = bool(np.all(c == 0))
    return Window("heisenberg", None, fn=fn, even=centered, real=True,
                  desc={"kind": "gaussian", "sh": sh, "st": st, "center": c.tolist()})


def bargmann_h1(w: Window, f: GridFunction, s: IrrepSlice, xquad: HaarQuadrature,
                chunk: int = 64) -> list:
    """B[f](x, pi_lambda) on the Heisenberg group for every node of ``xquad``.

    Returns one array of shape (n_x, N, N) per label of ``s``.  The y-side
    integral is the backend's grid transform, so the result inherits its
    truncation error; nothing here is exact.
    """
    from .fourier import _heis_displacements, _heis_plane
    if w.backend != "heisenberg" or f.backend != "heisenberg":
        raise ValueError("bargmann_h1 works on the heisenberg backend only")
    nx, ny, nt = f.quad.grid["shape"]
    _, _, t = _heis_plane(f.quad)
    wf = f.quad.weights * f.values
    out = [np.empty((xquad.size, int(d), int(d)), complex) for d in s.dims]
    E = np.exp(-2j * np.pi * np.outer(t, s.labels))                     # [t, j]
    for i0 in range(0, xquad.size, chunk):
        xs = xquad.nodes[i0:i0 + chunk]
        g = (w.pairs(xs, f.quad.nodes) * wf[None, :]).reshape(len(xs), nx * ny, nt)
        ft = g @ E                                                       # [x, p, j]
        for j, lam in enumerate(s.labels):
            D = _heis_displacements(f.quad, lam, int(s.dims[j]))
            out[j][i0:i0 + chunk] = np.einsum("xp,pba->xab", ft[:, :, j], np.conj(D))
    return out


def h1_isometry_defect(w: Window, f: GridFunction, s: IrrepSlice, xquad: HaarQuadrature) -> dict:
    """| ||B f|| - ||f|| | / ||f|| with ||B f||^2 = sum_x w_x sum_lambda mu_lambda ||B f(x, lambda)||_HS^2."""
    mats = bargmann_h1(w, f, s, xquad)
    sq = sum(mu * np.sum(np.abs(m) ** 2, axis=(1, 2)) for mu, m in zip(s.plancherel_weights, mats))
    nb = float(np.sqrt(np.sum(xquad.weights * sq)))
    nf = f.norm()
    return {"norm_B": nb, "norm_f": nf, "defect": abs(nb - nf) / nf}


# ---------------------------------------------------------------------------
# frames: the data needed to apply B and B* exactly on a truncated space

@dataclass(eq=False)
class Frame:
    window: Window
    fband: float                 # band of the functions B is applied to
    slice: IrrepSlice            # labels carried by B[f]
    xquad: HaarQuadrature
    yquad: HaarQuadrature
    A: np.ndarray                # A[x, y] = a(x^{-1} y)
    Yt: np.ndarray               # Yt[y, c] = pi_j(y)_{ba}, c = (j, a, b)
    cw: np.ndarray               # Plancherel weight per coefficient
    cache: dict = field(default_factory=dict)

    @property
    def ncoef(self):
        return self.cw.size

    def label_blocks(self):
        c = 0
        for j, d in enumerate(self.slice.dims):
            d = int(d)
            yield j, slice(c, c + d * d), d
            c += d * d


def make_frame(w: Window, fband: float, xband: float = 0.0, slice_band: float | None = None,
               cap: int | None = None) -> Frame:
    """Frame for functions of band ``fband`` and symbols of x-band ``xband``.

    x-quadrature degree 2 band(a) + xband; y-quadrature degree 2 (fband + band(a)).
    """
    if w.backend == "heisenberg":
        raise ValueError("compact frames only; use bargmann_h1 on the heisenberg group")
    la = w.band
    cband = fband + la if slice_band is None else slice_band
    s = band_slice(w.backend, cband)
    xquad = default_quadrature(w.backend, 2 * la + xband)
    yquad = default_quadrature(w.backend, fband + la + cband)
    ncoef = int(np.sum(s.dims.astype(int) ** 2))
    check_memory(16 * (xquad.size * yquad.size + yquad.size * ncoef + xquad.size * ncoef),
                 "B transform", cap)
    A = w.pairs(xquad.nodes, yquad.nodes)
    Yt = _flat_reps(s, yquad)
    return Frame(w, float(fband), s, xquad, yquad, A, Yt, coefficient_weights(s))


@dataclass(eq=False)
class BargmannField:
    frame: Frame
    data: np.ndarray             # (n_x, ncoef), coefficient order (j, a, b)

    def mats(self, j):
        for jj, sl, d in self.frame.label_blocks():
            if jj == j:
                return self.data[:, sl].reshape(-1, d, d)
        raise IndexError(j)

    def inner(self, other: "BargmannField") -> complex:
        wx = self.frame.xquad.weights
        return complex(np.sum(wx[:, None] * self.frame.cw[None, :] * self.data * np.conj(other.data)))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def __sub__(self, o):
        return BargmannField(self.frame, self.data - o.data)


def _on_y(fr: Frame, f: GridFunction) -> np.ndarray:
    if f.quad is fr.yquad:
        return f.values
    if f.band is None or f.band > fr.fband + 1e-12:
        raise ValueError(f"function band {f.band} exceeds the frame's band {fr.fband}")
    from .fourier import resample
    return resample(f, fr.yquad).values


def bargmann(fr: Frame, f: GridFunction) -> BargmannField:
    """B[f](x, pi) = F(f a(x^{-1} .))(pi) for every x-node of the frame."""
    fy = fr.yquad.weights * _on_y(fr, f)
    data = (fr.A * fy[None, :]) @ np.conj(fr.Yt)
    # conj(Yt)[y, (j,a,b)] = conj(pi(y)_{ba}) = (pi(y)^*)_{ab}
    return BargmannField(fr, data)


def bargmann_adjoint(fr: Frame, tau: BargmannField, project: bool = True) -> GridFunction:
    """B^*[tau](y) = sum_x w_x conj(a(x^{-1} y)) sum_pi mu_pi tr(pi(y) tau(x, pi)).

    With ``project`` the result is projected on the frame's function band, which
    makes B^* the adjoint of B restricted to that band.
    """
    K = (tau.data * fr.cw[None, :]) @ fr.Yt.T                   # [x, y]
    vals = np.sum(fr.xquad.weights[:, None] * np.conj(fr.A) * K, axis=0)
    g = GridFunction(fr.window.backend, fr.yquad, vals, fr.fband + fr.slice.max_label + 1e-9)
    if not project:
        return g
    s = band_slice(fr.window.backend, fr.fband)
    return inverse_fourier(fourier(g, s), s, fr.yquad, fr.fband)


def frame_symbol(fr: Frame, sig: SymbolField) -> list:
    """sigma at the frame's x-nodes and labels (zero outside the symbol's slice)."""
    sx = sig.on(fr.xquad) if sig.xquad is not fr.xquad else sig
    return [_labels_matrices(sx, fr.slice, j, fr.xquad.size) for j in range(len(fr.slice))]


def apply_symbol(fr: Frame, sig_mats, tau: BargmannField) -> BargmannField:
    out = np.empty_like(tau.data)
    for j, sl, d in fr.label_blocks():
        blk = tau.data[:, sl].reshape(-1, d, d)
        out[:, sl] = (sig_mats[j] @ blk).reshape(-1, d * d)
    return BargmannField(fr, out)


def opwick_apply(fr: Frame, sig: SymbolField, f: GridFunction) -> GridFunction:
    """Op^Wick(sigma) f = B^* sigma B f."""
    return bargmann_adjoint(fr, apply_symbol(fr, frame_symbol(fr, sig), bargmann(fr, f)))


def _basis_transform(fr: Frame, basis: PeterWeylBasis) -> np.ndarray:
    """B[b](x, .) for every basis function b: shape (n_x, n_basis, ncoef), cached on the frame."""
    key = ("basis", id(basis))
    hit = fr.cache.get(key)
    if hit is not None and hit[0] is basis:
        return hit[1]
    nb = basis.size
    check_memory(16 * fr.xquad.size * fr.ncoef * nb * 3, "Wick matrix assembly")
    Yc = np.conj(fr.Yt)
    wb = fr.yquad.weights[:, None] * basis.values
    out = np.empty((fr.xquad.size, nb, fr.ncoef), complex)
    for i0 in range(fr.xquad.size):
        out[i0] = (fr.A[i0][:, None] * wb).T @ Yc
    fr.cache[key] = (basis, out)
    return out


def wick_matrix(fr: Frame, sig: SymbolField, basis: PeterWeylBasis | None = None) -> OperatorMatrix:
    """(Op^Wick(sigma) b_j, b_i) = (sigma B b_j, B b_i) on the frame's Peter-Weyl basis."""
    basis = basis or peter_weyl_basis(fr.window.backend, fr.fband, fr.yquad)
    if basis.quad is not fr.yquad:
        raise ValueError("basis must live on the frame's y-quadrature")
    nb = basis.size
    nx = fr.xquad.size
    Bx = _basis_transform(fr, basis)
    sm = frame_symbol(fr, sig)
    SB = np.empty_like(Bx)
    for j, sl, d in fr.label_blocks():
        blk = Bx[:, :, sl].reshape(nx, nb, d, d)
        SB[:, :, sl] = (sm[j][:, None] @ blk).reshape(nx, nb, d * d)
    left = np.conj(Bx) * (fr.xquad.weights[:, None, None] * fr.cw[None, None, :])
    M = np.swapaxes(left, 0, 1).reshape(nb, -1) @ np.swapaxes(SB, 0, 1).reshape(nb, -1).T
    return OperatorMatrix(basis, M)


def frame_coefficients(fr: Frame, f: GridFunction) -> dict:
    """Coefficients (f, g_{x,pi,k,l}) = B[f](x, pi)_{kl} with their weights w_x mu_pi."""
    B = bargmann(fr, f)
    rows = []
    for j, sl, d in fr.label_blocks():
        k, l = np.divmod(np.arange(d * d), d)
        rows.append((np.full(d * d, fr.slice.labels[j]), k, l))
    lab = np.concatenate([r[0] for r in rows])
    kk = np.concatenate([r[1] for r in rows])
    ll = np.concatenate([r[2] for r in rows])
    nx = fr.xquad.size
    coef = B.data
    weight = fr.xquad.weights[:, None] * fr.cw[None, :]
    return {
        "x_index": np.repeat(np.arange(nx), fr.ncoef),
        "label": np.tile(lab, nx), "k": np.tile(kk, nx), "l": np.tile(ll, nx),
        "coef": coef.ravel(), "weight": weight.ravel(),
        "sum_rule": float(np.sum(weight * np.abs(coef) ** 2)),
    }


# ---------------------------------------------------------------------------
# Wick symbol and kernel (compact backends)

def _x_expansion(sig: SymbolField, xband: float):
    """S_{tau pq}(pi) with sigma(x, pi) = sum tau(x)_{pq} S_{tau pq}(pi), tau <= xband."""
    b = sig.slice.backend
    ts = band_slice(b, xband)
    xq = sig.xquad
    if sig.x_independent:
        ts = band_slice(b, 0)
    terms = []
    for t in range(len(ts)):
        dt = int(ts.dims[t])
        T = rep_matrices(ts, t, xq)                               # (n_x, dt, dt)
        for p in range(dt):
            for q in range(dt):
                wt = ts.plancherel_weights[t] * xq.weights * np.conj(T[:, p, q])
                S = [np.einsum("x,xab->ab", wt, np.broadcast_to(sig.at(j), (xq.size,) + sig.at(j).shape[1:]))
                     for j in range(len(sig.slice))]
                terms.append((t, p, q, S))
    return ts, terms


def wick_symbol(w: Window, sig: SymbolField, out_slice: IrrepSlice, out_quad: HaarQuadrature,
                xband: float | None = None) -> SymbolField:
    """sigma^Wick with kappa^Wick_x(v) = int a(z v^{-1}) conj(a(z)) kappa_{x z^{-1}}(v) dz.

    sigma is expanded in matrix coefficients of x up to ``xband`` (its x-band),
    which turns the z-integral into one matrix product per coefficient.
    """
    b = w.backend
    xband = sig.x_band if xband is None else xband
    if xband is None:
        raise ValueError("wick_symbol needs the x-band of the symbol")
    if sig.x_independent:
        xband = 0.0
    ls, la, lo = sig.slice.max_label, w.band, out_slice.max_label
    ts, terms = _x_expansion(sig, xband)
    vq = default_quadrature(b, ls + la + lo)                  # kernel variable v
    zq = default_quadrature(b, 2 * la + xband)
    # A[v, z] = a(z v^{-1}) conj(a(z)) w_z
    az = w.values(zq.nodes)
    A = w.pairs(inv_array(b, zq.nodes), inv_array(b, vq.nodes)).T * (np.conj(az) * zq.weights)[None, :]
    Ys = _flat_reps(sig.slice, vq)
    cws = coefficient_weights(sig.slice)
    # Psi_{t,q,r}(v) = sum_z A[v, z] conj(t(z)_{qr})
    Psi = {}
    for t in range(len(ts)):
        T = rep_matrices(ts, t, zq)
        Psi[t] = np.einsum("vz,zqr->vqr", A, np.conj(T))
    # C_{t,p,r}(rho) = F_v[sum_q s_{tpq} Psi_{tqr}](rho)
    acc = {}
    for (t, p, q, S) in terms:
        Sflat = np.concatenate([m.reshape(-1) for m in S])
        s_v = Ys @ (cws * Sflat)                               # kernel values at v-nodes
        for r in range(int(ts.dims[t])):
            acc[(t, p, r)] = acc.get((t, p, r), 0) + s_v * Psi[t][:, q, r]
    Yo = np.conj(_flat_reps(out_slice, vq))
    keys = list(acc)
    V = np.stack([acc[k] for k in keys])                       # (n_terms, n_v)
    C = (V * vq.weights[None, :]) @ Yo                         # (n_terms, ncoef_out)
    mats = []
    xs = out_quad.nodes
    for j in range(len(out_slice)):
        d = int(out_slice.dims[j])
        mats.append(np.zeros((out_quad.size, d, d), complex))
    off = np.concatenate([[0], np.cumsum(out_slice.dims.astype(int) ** 2)])
    Tx = {t: rep_matrices(ts, t, out_quad) for t in range(len(ts))}
    for n, (t, p, r) in enumerate(keys):
        coeff_x = Tx[t][:, p, r]
        for j in range(len(out_slice)):
            d = int(out_slice.dims[j])
            mats[j] += coeff_x[:, None, None] * C[n, off[j]:off[j + 1]].reshape(d, d)[None]
    return SymbolField(out_slice, out_quad, mats, False, False, None, xband)


def wick_kernel(w: Window, sig: SymbolField, out_slice: IrrepSlice, out_quad: HaarQuadrature,
                yquad: HaarQuadrature, xband: float | None = None) -> KernelField:
    from .kn import symbol_to_kernel
    return symbol_to_kernel(wick_symbol(w, sig, out_slice, out_quad, xband), yquad)
