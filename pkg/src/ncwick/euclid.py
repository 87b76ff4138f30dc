"""Euclidean reference implementation on a periodic line grid.

Conventions: f^(xi) = int e^{-2 pi i x xi} f(x) dx, discretized on
[-R, R) with n nodes and the dual grid xi_m = m / (2R).  All operators are
dense n x n matrices acting on nodal values.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class LineGrid:
    R: float = 8.0
    n: int = 256
    periodic: bool = True

    @property
    def h(self):
        return 2 * self.R / self.n

    @property
    def x(self):
        return -self.R + self.h * np.arange(self.n)

    @property
    def xi(self):
        return np.fft.fftshift(np.fft.fftfreq(self.n, d=self.h))

    @property
    def dxi(self):
        return 1.0 / (2 * self.R)

    def fourier_matrix(self):
        """F[m, k] = h e^{-2 pi i xi_m x_k}."""
        return self.h * np.exp(-2j * np.pi * np.outer(self.xi, self.x))

    def fourier(self, f):
        return self.fourier_matrix() @ np.asarray(f, complex)

    def inverse(self, fh):
        return self.dxi * np.exp(2j * np.pi * np.outer(self.x, self.xi)) @ np.asarray(fh, complex)

    def inner(self, f, g):
        return complex(self.h * np.vdot(g, f))

    def norm(self, f):
        return float(np.sqrt(self.h * np.sum(np.abs(f) ** 2)))

    def parseval_defect(self, f):
        return abs(self.norm(f) ** 2 - self.dxi * np.sum(np.abs(self.fourier(f)) ** 2))

    def wrap(self, u):
        """Periodic representative of a displacement in [-R, R)."""
        return (np.asarray(u, float) + self.R) % (2 * self.R) - self.R


def symbol_samples(grid: LineGrid, fn) -> np.ndarray:
    """sigma[k, m] = fn(x_k, xi_m)."""
    X, XI = np.meshgrid(grid.x, grid.xi, indexing="ij")
    return np.broadcast_to(np.asarray(fn(X, XI), complex), X.shape).copy()


def opkn_matrix(grid: LineGrid, sigma) -> np.ndarray:
    """Matrix of f -> int e^{2 pi i x xi} sigma(x, xi) f^(xi) d xi on nodal values."""
    E = grid.dxi * np.exp(2j * np.pi * np.outer(grid.x, grid.xi)) * sigma
    return E @ grid.fourier_matrix()


def euclid_opkn(grid: LineGrid, sigma, f) -> np.ndarray:
    return opkn_matrix(grid, sigma) @ np.asarray(f, complex)


def kernel_of(grid: LineGrid, sigma) -> np.ndarray:
    """kappa[k, j] = kappa_{x_k}(x_j): inverse Fourier transform of sigma(x_k, .) in xi."""
    E = grid.dxi * np.exp(2j * np.pi * np.outer(grid.xi, grid.x))
    return sigma @ E


def opkn_from_kernel(grid: LineGrid, kappa) -> np.ndarray:
    """Matrix of f -> sum_y h f(y) kappa_x(x - y) for a kernel sampled at the nodes."""
    n = grid.n
    k = np.arange(n)
    # node index of x_i - y_j on the periodic grid: (i - j) shifted by the origin offset
    off = n // 2
    idx = (k[:, None] - k[None, :] + off) % n
    return grid.h * kappa[k[:, None], idx]


# ---------------------------------------------------------------------------
# windows and the Bargmann transform

def gaussian_window(grid: LineGrid, t: float = 1.0) -> np.ndarray:
    """pi^{-1/4} t^{-1/2} exp(-x^2 / (2 t^2)), periodized and renormalized on the grid."""
    a = np.zeros(grid.n)
    for p in range(-3, 4):
        a += np.exp(-(grid.x + 2 * grid.R * p) ** 2 / (2 * t * t))
    a *= np.pi ** -0.25 / np.sqrt(t)
    return a / grid.norm(a)


def _shifted(grid: LineGrid, a):
    """S[x, y] = a(y - x) on the periodic grid."""
    n = grid.n
    k = np.arange(n)
    off = n // 2
    return a[(k[None, :] - k[:, None] + off) % n]


def bargmann(grid: LineGrid, a, f) -> np.ndarray:
    """B_a f(x, xi) = int f(y) a(y - x) e^{-2 pi i y xi} dy, shape (x, xi)."""
    S = _shifted(grid, a)
    return (S * np.asarray(f, complex)[None, :]) @ grid.fourier_matrix().T


def bargmann_adjoint(grid: LineGrid, a, tau) -> np.ndarray:
    S = _shifted(grid, a)
    E = grid.dxi * np.exp(2j * np.pi * np.outer(grid.xi, grid.x))     # [xi, y]
    inner = tau @ E                                                  # [x, y]
    return grid.h * np.sum(np.conj(S) * inner, axis=0)


def wick_matrix_frame(grid: LineGrid, a, sigma) -> np.ndarray:
    """B^* sigma B as a matrix, assembled column by column through the transform."""
    n = grid.n
    S = _shifted(grid, a)
    Fm = grid.fourier_matrix()                           # [xi, y]
    E = grid.dxi * np.exp(2j * np.pi * np.outer(grid.xi, grid.x))
    # W[y, y'] = sum_x h conj(a(y - x)) a(y' - x) sum_xi dxi sigma(x, xi) e^{2 pi i (y - y') xi} h
    W = np.zeros((n, n), complex)
    for ix in range(n):
        K = (E.T * sigma[ix][None, :]) @ Fm              # [y, y'] = kappa_x applied between nodes
        W += grid.h * np.conj(S[ix])[:, None] * K * S[ix][None, :]
    return W


def wick_kernel(grid: LineGrid, a, sigma) -> np.ndarray:
    """kappa^Wick_x(y) = int a(z - y) conj(a(z)) kappa_{x - z}(y) dz on the grid."""
    n = grid.n
    kap = kernel_of(grid, sigma)                          # [x, y]
    k = np.arange(n)
    off = n // 2
    out = np.zeros((n, n), complex)
    for iz in range(n):
        z = iz - off                                      # displacement index of z
        shift_a = a[(iz - k + off) % n]                   # a(z - y)
        rows = (k - z) % n                                # index of x - z
        out += grid.h * np.conj(a[iz]) * shift_a[None, :] * kap[rows]
    return out


def wick_matrix_kernel(grid: LineGrid, a, sigma) -> np.ndarray:
    return opkn_from_kernel(grid, wick_kernel(grid, a, sigma))


def euclid_wick(grid: LineGrid, a, sigma, f, path: str = "frame") -> np.ndarray:
    if path == "frame":
        return bargmann_adjoint(grid, a, sigma * bargmann(grid, a, f))
    if path == "kernel":
        return wick_matrix_kernel(grid, a, sigma) @ np.asarray(f, complex)
    raise ValueError(f"unknown path {path!r}")


def smooth_x(grid: LineGrid, sigma, a) -> np.ndarray:
    """(sigma * |a|^2)(x, xi): periodic convolution in x."""
    w = np.abs(a) ** 2
    n = grid.n
    off = n // 2
    # (sigma * w)(x_k) = sum_z h w(z) sigma(x_k - z)
    sh = np.fft.ifftshift(w)                                # w at displacement index 0 first
    return grid.h * np.fft.ifft(np.fft.fft(sigma, axis=0) * np.fft.fft(sh)[:, None], axis=0)


# ---------------------------------------------------------------------------
# Garding check

def sobolev_gram(grid: LineGrid, s: float) -> np.ndarray:
    """Gram matrix of ||f||^2_{H^s} = int (1 + 4 pi^2 xi^2)^s |f^|^2 on nodal values (orthonormalized)."""
    Fm = grid.fourier_matrix()
    wgt = (1 + 4 * np.pi ** 2 * grid.xi ** 2) ** s
    return grid.dxi * (np.conj(Fm).T * wgt[None, :]) @ Fm


def _unitary_dft(grid: LineGrid) -> np.ndarray:
    return np.sqrt(grid.dxi / grid.h) * grid.fourier_matrix()


def deficiency_constant(reM, G, c, grid: LineGrid | None = None, s: float = -0.5) -> float:
    """Smallest C >= 0 with reM >= c I - C G.

    With ``grid`` given, G is taken to be the Sobolev Gram of order ``s`` and
    is inverted through its exact Fourier diagonalization.
    """
    if grid is not None:
        U = _unitary_dft(grid)
        isq = (1 + 4 * np.pi ** 2 * grid.xi ** 2) ** (-s / 2)
        D = isq[:, None] * (U @ (c * np.eye(grid.n) - reM) @ np.conj(U).T) * isq[None, :]
    else:
        w, V = np.linalg.eigh(G)
        iw = V @ np.diag(w ** -0.5) @ np.conj(V).T
        D = iw @ (c * np.eye(len(w)) - reM) @ iw
    return max(0.0, float(np.linalg.eigvalsh(0.5 * (D + np.conj(D).T))[-1]))


@dataclass(eq=False)
class EuclidReport:
    lambda_min: float
    c_min: float
    eta: float
    c_eff: float
    C_eff: float
    window_t: float
    meta: dict = field(default_factory=dict)


def euclid_garding_check(grid: LineGrid, sigma, c: float | None = None, t: float = 0.25) -> EuclidReport:
    """lambda_min of Re Op^KN(sigma) and (c_eff, C_eff) with Re(Op f, f) >= c_eff ||f||^2 - C_eff ||f||^2_{H^{-1/2}}.

    c_eff = c - eta(t), eta(t) = ||Re Op^KN(sigma - sigma * |a_t|^2)||, and C_eff is
    the smallest constant making the bound hold on the grid space.
    """
    smin = float(np.min(sigma.real))
    c = smin if c is None else c
    if smin < c - 1e-12:
        raise ValueError(f"symbol minimum {smin:.4g} is below the declared constant {c:.4g}")
    M = opkn_matrix(grid, sigma)
    reM = 0.5 * (M + np.conj(M).T)
    lam = float(np.linalg.eigvalsh(reM)[0])
    a = gaussian_window(grid, t)
    Dm = opkn_matrix(grid, sigma - smooth_x(grid, sigma, a))
    ev = np.linalg.eigvalsh(0.5 * (Dm + np.conj(Dm).T))
    eta = float(max(abs(ev[0]), abs(ev[-1])))
    c_eff = c - eta
    G = sobolev_gram(grid, -0.5)
    C_eff = deficiency_constant(reM, G, c_eff, grid)
    return EuclidReport(lam, c, eta, c_eff, C_eff, t, {"R": grid.R, "n": grid.n})


# ---------------------------------------------------------------------------
# difference operators

def difference_operator(grid: LineGrid, q, sigma) -> np.ndarray:
    """Delta_q sigma(x, .) = F(q kappa_x)."""
    kap = kernel_of(grid, sigma)
    return (kap * np.asarray(q, complex)[None, :]) @ grid.fourier_matrix().T


def dyadic_ratio_test(grid: LineGrid, q_fn, dq0: float, bands=(0, 1, 2), base: float = 0.5,
                      x_profile=None) -> dict:
    """First-order expansion of Delta_q on symbols living at |xi| ~ base 2^k.

    first_k = |Delta_q s - q(0) s|,  rest_k = |Delta_q s - q(0) s - q'(0) (i / 2 pi) d_xi s|,
    both in the grid L2 norm; rest/first should shrink like 2^{-k}.
    """
    q = q_fn(grid.x)
    q0 = float(np.real(q_fn(np.array([0.0]))[0]))
    xs = grid.x
    prof = np.ones_like(xs) if x_profile is None else x_profile(xs)
    rows = []
    for k in bands:
        lam = base * 2.0 ** k
        width = 0.5 * lam
        bump = np.exp(-(grid.xi - lam) ** 2 / (2 * width ** 2))
        dbump = -(grid.xi - lam) / width ** 2 * bump
        s = prof[:, None] * bump[None, :]
        ds = prof[:, None] * dbump[None, :]
        D = difference_operator(grid, q, s)
        first = float(np.linalg.norm(D - q0 * s))
        rest = float(np.linalg.norm(D - q0 * s - dq0 * (1j / (2 * np.pi)) * ds))
        rows.append({"band": lam, "first": first, "rest": rest, "ratio": rest / first})
    ratios = [r["ratio"] for r in rows]
    return {"rows": rows, "decreasing": bool(np.all(np.diff(ratios) < 0)),
            "steps": [ratios[i + 1] / ratios[i] for i in range(len(ratios) - 1)]}


# ---------------------------------------------------------------------------
# abelian cross-check against the torus backend

def torus_cross_check(grid: LineGrid, sigma_fn, f_fn) -> float:
    """max |Op f| difference between this module and the torus backend of period 2R.

    The torus variable theta in [0, 1) is mapped to x = 2R theta - R and the
    torus frequency k to xi = k / (2R); on compactly supported f the two
    quantizations are the same Riemann sum.
    """
    from .fourier import GridFunction, SymbolField
    from .groups import dual_slice, torus_quadrature
    from .kn import opkn_apply

    P = 2 * grid.R
    quad = torus_quadrature(grid.n)
    s = dual_slice("torus", K=grid.n // 2 - 1)

    def fn(theta, j):
        return np.asarray(sigma_fn(P * theta - grid.R, s.labels[j] / P) + 0 * theta, complex)[:, None, None]

    sig = SymbolField.from_callable(s, quad, fn)
    ft = GridFunction("torus", quad, f_fn(P * quad.nodes - grid.R))
    tor = opkn_apply(sig, ft, form="trace").values
    line = euclid_opkn(grid, symbol_samples(grid, sigma_fn), f_fn(grid.x))
    return float(np.max(np.abs(tor - line)))
