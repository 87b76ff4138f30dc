"""Semiclassical quantization on the Heisenberg group.

Everything is kernel-side: a symbol is stored through its convolution kernel
kappa_x(y) = sum_k phi_k(x) psi_k(y), with Gaussian-mixture profiles so that
the heavy pairwise evaluations run in the compiled kernels of ``_kernels``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .fourier import GridFunction
from .groups import HOMOGENEOUS_DIM, HaarQuadrature, dilate, heis_mul, heisenberg_quadrature
from .kn import GridBasis, KernelField, OperatorMatrix, grid_kernel_matrix
from .wick import Window

Q = HOMOGENEOUS_DIM


class SupportOverflow(ValueError):
    pass


# ---------------------------------------------------------------------------
# profiles

@dataclass(eq=False)
class GaussMix:
    """sum_k amp_k exp(-1/2 |(p - cen_k) * isd_k|^2), coordinatewise."""
    cen: np.ndarray
    isd: np.ndarray
    amp: np.ndarray

    def __post_init__(self):
        self.cen = np.atleast_2d(np.asarray(self.cen, float))
        self.isd = np.atleast_2d(np.asarray(self.isd, float))
        self.amp = np.atleast_1d(np.asarray(self.amp, float))

    def __call__(self, p):
        p = np.asarray(p, float)
        out = np.zeros(p.shape[:-1])
        for c, s, a in zip(self.cen, self.isd, self.amp):
            out += a * np.exp(-0.5 * np.sum(((p - c) * s) ** 2, axis=-1))
        return out

    def pairs(self, U, V):
        """Values at the products U_i V_j."""
        return _kernels.gauss_pairs(np.ascontiguousarray(U, float), np.ascontiguousarray(V, float),
                                    self.cen, self.isd, self.amp)

    @property
    def nonnegative(self) -> bool:
        return bool(np.all(self.amp >= 0))

    def sup(self) -> float:
        return float(np.sum(np.abs(self.amp)))

    def __add__(self, o: "GaussMix") -> "GaussMix":
        return GaussMix(np.vstack([self.cen, o.cen]), np.vstack([self.isd, o.isd]),
                        np.concatenate([self.amp, o.amp]))

    def scaled(self, c: float) -> "GaussMix":
        return GaussMix(self.cen, self.isd, c * self.amp)


@dataclass(eq=False)
class SquaredAffine:
    """(l . (p - p0))^2 times a nonnegative Gaussian mixture: nonnegative, vanishing on a plane."""
    l: np.ndarray
    p0: np.ndarray
    mix: GaussMix

    def __post_init__(self):
        self.l = np.asarray(self.l, float)
        self.p0 = np.asarray(self.p0, float)

    def __call__(self, p):
        p = np.asarray(p, float)
        return ((p - self.p0) @ self.l) ** 2 * self.mix(p)

    def pairs(self, U, V, chunk: int = 256):
        U = np.asarray(U, float)
        V = np.asarray(V, float)
        out = np.empty((len(U), len(V)))
        for s in range(0, len(U), chunk):
            out[s:s + chunk] = self(heis_mul(U[s:s + chunk, None, :], V[None, :, :]))
        return out

    @property
    def nonnegative(self) -> bool:
        return self.mix.nonnegative

    def sup(self, R: float = 6.0) -> float:
        return float(np.sum(np.abs(self.mix.amp))) * (np.abs(self.l).sum() * R) ** 2


def gaussian_bump(center=(0.0, 0.0, 0.0), sh: float = 1.0, st: float = 1.0, amp: float = 1.0) -> GaussMix:
    return GaussMix(np.asarray(center, float)[None], np.array([[1 / sh, 1 / sh, 1 / st]]), [amp])


@dataclass(eq=False)
class Autocorrelation:
    """scale * (g * g^*) for the centered Gaussian g(z) = exp(-|z_h|^2/(2 sh^2) - t^2/(2 st^2)).

    The default scale 1/(int g)^2 gives unit mass.  It is a positive-definite
    function on the group, so phi(x) >= 0 times it is a nonnegative symbol.
    """
    sh: float
    st: float
    scale: float | None = None

    def __post_init__(self):
        if self.scale is None:
            mass_g = 2 * np.pi * self.sh ** 2 * np.sqrt(2 * np.pi) * self.st
            self.scale = 1.0 / mass_g ** 2

    def __call__(self, p):
        return self.scale * _kernels.autocorr_value(p, self.sh, self.st)

    def pairs(self, U, V):
        return self.scale * _kernels.autocorr_pairs(np.ascontiguousarray(U, float),
                                                    np.ascontiguousarray(V, float), self.sh, self.st)


# ---------------------------------------------------------------------------
# A0 symbols

@dataclass(eq=False)
class A0Symbol:
    """kappa_x(y) = sum_k phi_k(x) psi_k(y)."""
    terms: list
    desc: dict = field(default_factory=dict)

    @property
    def positive(self) -> bool:
        """Machine-checkable nonnegativity: every term is phi >= 0 times an autocorrelation."""
        return all(isinstance(ps, Autocorrelation) and ph.nonnegative for ph, ps in self.terms)

    def kernel(self, xs, us):
        """kappa_{x_i}(u_i), elementwise."""
        xs = np.asarray(xs, float)
        us = np.asarray(us, float)
        out = np.zeros(np.broadcast_shapes(xs.shape[:-1], us.shape[:-1]))
        for ph, ps in self.terms:
            out = out + ph(xs) * ps(us)
        return out

    def check_decay(self, quad: HaarQuadrature, rel: float = 1e-8) -> float:
        """Largest boundary/peak ratio of the psi profiles on the grid box (must be <= rel)."""
        g = quad.grid
        worst = 0.0
        for _, ps in self.terms:
            v = np.abs(ps(quad.nodes)).reshape(g["shape"])
            edge = max(np.max(v[[0, -1]]), np.max(v[:, [0, -1]]), np.max(v[:, :, [0, -1]]))
            worst = max(worst, edge / np.max(v))
        if worst > rel:
            raise ValueError(f"kernel profile does not decay inside the box (edge/peak {worst:.1e})")
        return worst

    def kernel_field(self, xquad: HaarQuadrature | None, yquad: HaarQuadrature) -> KernelField:
        xs = xquad.nodes if xquad is not None else np.zeros((1, 3))
        vals = self.kernel(xs[:, None, :], yquad.nodes[None, :, :])
        return KernelField("heisenberg", xquad, yquad, vals, fn=self.kernel, meta={"a0": self.desc})

    def with_terms(self, extra, **desc):
        return A0Symbol(self.terms + list(extra), {**self.desc, **desc})


def a0_symbol(phi: GaussMix, psi, **desc) -> A0Symbol:
    return A0Symbol([(phi, psi)], desc)


def constant_symbol(c: float) -> A0Symbol:
    """c times the trivial multiplier, realized with a flat phi and a unit-mass kernel in y."""
    return A0Symbol([(gaussian_bump((0, 0, 0), 1e150, 1e150, c), Autocorrelation(0.35, 0.35))],
                    {"kind": "constant", "c": c})


def default_symbol() -> A0Symbol:
    """Rank-one positive symbol: a Gaussian bump in x times a unit-mass autocorrelation."""
    return a0_symbol(gaussian_bump((0.2, -0.1, 0.1), 1.2, 1.3), Autocorrelation(0.35, 0.35),
                     kind="rank-one-positive")


GARDING_CENTER = (0.2, -0.1, 0.1)


def positive_symbols(x0=GARDING_CENTER) -> list:
    """Five positivity-certified symbols, each vanishing on a plane through x0.

    Strictly positive symbols give Re M_eps >= 0 on the patch test space as soon
    as eps <= 1/2; symbols with a zero set keep a measurable deficiency.
    """
    x0 = np.asarray(x0, float)
    g = gaussian_bump(x0, 1.2, 1.3)
    out = [a0_symbol(SquaredAffine((1, 0, 0), x0, g), Autocorrelation(0.35, 0.35), kind="sq-x")]
    out.append(a0_symbol(SquaredAffine((0, 0, 1), x0, g), Autocorrelation(0.3, 0.4), kind="sq-t"))
    out.append(a0_symbol(SquaredAffine((1, 1, 0), x0, gaussian_bump(x0 + 0.2, 0.9, 1.0)),
                         Autocorrelation(0.4, 0.3), kind="sq-diag"))
    out.append(A0Symbol([(SquaredAffine((1, 0, 0), x0, g), Autocorrelation(0.35, 0.35)),
                         (SquaredAffine((0, 1, 0), x0, gaussian_bump(x0, 0.9, 0.6, 0.7)),
                          Autocorrelation(0.25, 0.4))], {"kind": "rank-two"}))
    out.append(a0_symbol(SquaredAffine((0, 1, 0.5), x0, g + gaussian_bump(x0 - 0.3, 0.5, 0.5, 0.5)),
                         Autocorrelation(0.3, 0.3), kind="sq-mixed"))
    return out


def indefinite_symbol(x0=(0.2, -0.1, 0.1), depth: float = 1.5) -> A0Symbol:
    """Default symbol minus depth times a narrow bump at x0: negative near x0."""
    base = default_symbol()
    ph, ps = base.terms[0]
    bump = gaussian_bump(x0, 0.6, 0.6, -depth * ph(np.asarray(x0, float)))
    return A0Symbol([(ph + bump, ps)], {"kind": "indefinite", "x0": list(x0), "depth": depth})


def random_a0_symbol(rng, terms: int = 2) -> A0Symbol:
    """Sum of products of Gaussian bumps with random signs, centers and widths (no positivity)."""
    out = []
    for _ in range(terms):
        ph = gaussian_bump(rng.normal(scale=0.5, size=3), rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5),
                           rng.normal())
        ps = gaussian_bump(rng.normal(scale=0.3, size=3), rng.uniform(0.3, 0.6), rng.uniform(0.3, 0.6),
                           rng.normal())
        out.append((ph, ps))
    return A0Symbol(out, {"kind": "random"})


# ---------------------------------------------------------------------------
# rescaling and Op_eps

def _check_eps(eps):
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")


def rescale_kernel(kap: KernelField, eps: float, yquad: HaarQuadrature | None = None,
                   rel: float = 1e-8, min_cells: float = 2.0) -> KernelField:
    """kappa^(eps)_x(y) = eps^{-Q} kappa_x(delta_{1/eps} y).

    Without ``yquad`` the grid itself is dilated (spacing proportional to eps),
    which is exact.  With a target grid the values are interpolated
    trilinearly; the rescaled support must fit the target box and stay resolved
    by at least ``min_cells`` cells, otherwise SupportOverflow names the
    admissible range of eps.
    """
    _check_eps(eps)
    g = kap.yquad.grid
    shape = (kap.values.shape[0],) + tuple(g["shape"])
    if yquad is None:
        h = g["spacing"] * np.array([eps, eps, eps * eps])
        nodes = dilate(kap.yquad.nodes, eps)
        grid = {"origin": dilate(g["origin"], eps), "spacing": h, "shape": g["shape"],
                "axes": [a * (eps if k < 2 else eps * eps) for k, a in enumerate(g["axes"])]}
        q = HaarQuadrature("heisenberg", nodes, kap.yquad.weights * eps ** Q, np.inf,
                           kap.yquad.total_mass * eps ** Q, grid=grid)
        fn = None if kap.fn is None else (lambda xs, us: eps ** -Q * kap.fn(xs, dilate(us, 1 / eps)))
        return KernelField("heisenberg", kap.xquad, q, kap.values * eps ** -Q, fn, dict(kap.meta, eps=eps))
    # support radius of kappa (per coordinate), from the samples
    v = np.max(np.abs(kap.values), axis=0).reshape(g["shape"])
    live = np.argwhere(v > rel * v.max())
    ax = g["axes"]
    ext = np.array([max(abs(ax[k][live[:, k].min()]), abs(ax[k][live[:, k].max()])) for k in range(3)])
    tg = yquad.grid
    half = np.array([min(abs(a[0]), abs(a[-1])) for a in tg["axes"]])
    hi = min(float(np.min(half[:2] / ext[:2])), float(np.sqrt(half[2] / ext[2])))
    lo = max(float(np.max(min_cells * tg["spacing"][:2] / ext[:2])),
             float(np.sqrt(min_cells * tg["spacing"][2] / ext[2])))
    if eps > hi:
        raise SupportOverflow(f"rescaled support leaves the box; largest admissible eps is {hi:.4g}")
    if eps < lo:
        raise SupportOverflow(f"rescaled kernel is under-resolved; smallest admissible eps is {lo:.4g}")
    src = dilate(yquad.nodes, 1 / eps)
    rows = [_kernels.trilinear(np.ascontiguousarray(r.reshape(shape[1:]).real), g["origin"], g["spacing"], src)
            + 1j * _kernels.trilinear(np.ascontiguousarray(r.reshape(shape[1:]).imag), g["origin"],
                                      g["spacing"], src)
            for r in kap.values]
    fn = None if kap.fn is None else (lambda xs, us: eps ** -Q * kap.fn(xs, dilate(us, 1 / eps)))
    return KernelField("heisenberg", kap.xquad, yquad, eps ** -Q * np.array(rows), fn, dict(kap.meta, eps=eps))


def _kernel_fn(sig):
    if isinstance(sig, A0Symbol):
        return sig.kernel
    if isinstance(sig, KernelField) and sig.fn is not None:
        return sig.fn
    raise TypeError("need an A0Symbol or a KernelField with an evaluator")


def op_eps_apply(sig, eps: float, f: GridFunction, xquad: HaarQuadrature | None = None,
                 chunk: int = 64) -> GridFunction:
    """Op_eps(sigma) f(x) = sum_y w_y f(y) eps^{-Q} kappa_x(delta_{1/eps}(y^{-1} x))."""
    _check_eps(eps)
    fn = _kernel_fn(sig)
    xq = xquad or f.quad
    wf = f.quad.weights * f.values
    Y = f.quad.nodes
    out = np.empty(xq.size, complex)
    for s in range(0, xq.size, chunk):
        xs = xq.nodes[s:s + chunk]
        u = dilate(heis_mul(-Y[None, :, :], xs[:, None, :]), 1 / eps)
        vals = fn(np.broadcast_to(xs[:, None, :], u.shape), u)
        out[s:s + chunk] = eps ** -Q * (vals @ wf)
    return GridFunction("heisenberg", xq, out)


def op_eps_matrix(sig, eps: float, basis: GridBasis) -> OperatorMatrix:
    _check_eps(eps)
    fn = _kernel_fn(sig)
    M = grid_kernel_matrix(lambda xs, us: eps ** -Q * fn(xs, dilate(us, 1 / eps)), basis.quad)
    return OperatorMatrix(basis, M)


def patch_quadrature(x0, eps: float, n: int = 12, h: float = 0.25) -> HaarQuadrature:
    """Left translate by x0 of an eps-dilated uniform grid: a test space localized at x0 at scale eps."""
    base = heisenberg_quadrature(n=n, spacing=(h, h, h))
    nodes = heis_mul(np.asarray(x0, float)[None, :], dilate(base.nodes, eps))
    return HaarQuadrature("heisenberg", nodes, base.weights * eps ** Q, np.inf, base.total_mass * eps ** Q,
                          grid=None)


# ---------------------------------------------------------------------------
# semiclassical Wick quantization

def _gauss_window(w: Window, zquad: HaarQuadrature) -> GaussMix:
    """The window as a Gaussian mixture, renormalized to unit L2 norm on zquad."""
    d = w.desc
    if d.get("kind") != "gaussian":
        raise TypeError("the semiclassical routines need a Gaussian window")
    g = gaussian_bump(d["center"], d["sh"], d["st"])
    nrm = np.sqrt(np.sum(zquad.weights * g(zquad.nodes) ** 2))
    return g.scaled(1.0 / nrm)


def default_grids() -> dict:
    return {"x": heisenberg_quadrature(3.0, 9), "w": heisenberg_quadrature(3.5, 15),
            "z": heisenberg_quadrature(6.0, 21)}


def wick_eps_kernel(w: Window, sig: A0Symbol, eps: float, xquad: HaarQuadrature, wquad: HaarQuadrature,
                    zquad: HaarQuadrature | None = None) -> KernelField:
    """kappa^{eps,Wick}_x(w) = int a(z delta_s w^{-1}) a(z) kappa_{x delta_s z^{-1}}(w) dz, s = sqrt(eps)."""
    _check_eps(eps)
    zquad = zquad or default_grids()["z"]
    a = _gauss_window(w, zquad)
    s = np.sqrt(eps)
    Z = zquad.nodes
    A = a.pairs(Z, dilate(-wquad.nodes, s)) * (a(Z) * zquad.weights)[:, None]
    vals = np.zeros((xquad.size, wquad.size))
    for ph, ps in sig.terms:
        P = ph.pairs(xquad.nodes, dilate(-Z, s))
        vals += (P @ A) * ps(wquad.nodes)[None, :]

    def fn(xs, us):
        xs = np.asarray(xs, float).reshape(-1, 3)
        us = np.asarray(us, float).reshape(-1, 3)
        out = np.zeros(len(xs))
        for i in range(len(xs)):
            az = a(heis_mul(Z, dilate(-us[i], s)[None, :])) * a(Z) * zquad.weights
            for ph, ps in sig.terms:
                out[i] += ps(us[i]) * np.sum(az * ph(heis_mul(xs[i][None, :], dilate(-Z, s))))
        return out
    return KernelField("heisenberg", xquad, wquad, vals, fn, {"eps": eps, "window": w.desc})


def a0_defect(w: Window, sig: A0Symbol, eps: float, grids: dict | None = None) -> dict:
    """||sigma - sigma^{eps,Wick}||_{A0} and the two terms I1, I2 that bound it.

    I1 = int sup_x |int |a(z)|^2 (kappa_x(w) - kappa_{x delta_s z^{-1}}(w)) dz| dw,
    I2 = int sup_x |int (a(z) - a(z delta_s w^{-1})) a(z) kappa_{x delta_s z^{-1}}(w) dz| dw.
    """
    _check_eps(eps)
    g = grids or default_grids()
    xq, wq, zq = g["x"], g["w"], g["z"]
    a = _gauss_window(w, zq)
    s = np.sqrt(eps)
    Z = zq.nodes
    az = a(Z)
    A = a.pairs(Z, dilate(-wq.nodes, s)) * (az * zq.weights)[:, None]
    mass = float(np.sum(zq.weights * az ** 2))
    D = np.zeros((xq.size, wq.size))
    T1 = np.zeros((xq.size, wq.size))
    T2 = np.zeros((xq.size, wq.size))
    for ph, ps in sig.terms:
        P = ph.pairs(xq.nodes, dilate(-Z, s))
        psw = ps(wq.nodes)[None, :]
        PA = P @ A
        c = P @ (az ** 2 * zq.weights)
        phx = ph(xq.nodes)
        D += psw * (phx[:, None] - PA)
        T1 += psw * (mass * phx - c)[:, None]
        T2 += psw * (c[:, None] - PA)
    ww = wq.weights
    return {"eps": eps,
            "a0": float(np.sum(ww * np.max(np.abs(D), axis=0))),
            "I1": float(np.sum(ww * np.max(np.abs(T1), axis=0))),
            "I2": float(np.sum(ww * np.max(np.abs(T2), axis=0))),
            "scale": float(sum(ph.sup() * np.sum(ww * np.abs(ps(wq.nodes))) for ph, ps in sig.terms))}


def wick_eps_matrix(w: Window, sig: A0Symbol, eps: float, basis: GridBasis, center,
                    zgrid: HaarQuadrature | None = None) -> OperatorMatrix:
    """Matrix of B^{eps,*} sigma B^eps on a patch basis.

    Its kernel is K(x, y) = eps^{-Q} int a_eps(z^{-1}y) a_eps(z^{-1}x) phi(z) dz psi(delta_{1/eps}(y^{-1}x));
    the z-integral is a quadrature over the absolute grid center . delta_{sqrt eps}(zgrid), so the
    matrix is a Schur product of two Gram matrices for any positive quadrature.
    """
    _check_eps(eps)
    zgrid = zgrid or heisenberg_quadrature(4.5, 13)
    a = _gauss_window(w, zgrid)
    s = np.sqrt(eps)
    Z = heis_mul(np.asarray(center, float)[None, :], dilate(zgrid.nodes, s))
    wz = zgrid.weights * eps ** (Q / 2)
    X = basis.quad.nodes
    Aeps = a.pairs(-dilate(Z, 1 / s), dilate(X, 1 / s)) / eps ** (Q / 4)       # a_eps(z^{-1} x)
    sw = np.sqrt(basis.quad.weights)
    M = np.zeros((X.shape[0], X.shape[0]))
    for ph, ps in sig.terms:
        G = Aeps.T @ ((wz * ph(Z))[:, None] * Aeps)
        # psi(delta_{1/eps}(y_j^{-1} x_i)) = psi((delta_{1/eps} y_j)^{-1} (delta_{1/eps} x_i))
        Xd = dilate(X, 1 / eps)
        H = ps.pairs(-Xd, Xd).T
        M += G * H
    M *= eps ** -Q * sw[:, None] * sw[None, :]
    return OperatorMatrix(basis, M.astype(complex))


def cancellation_identities(w: Window, zquad: HaarQuadrature | None = None) -> dict:
    """The two quadrature identities that remove the sqrt(eps) term for even real windows:
    int |a|^2 q = 0 for odd polynomials q, and int (X a) a = 0 for the left-invariant X, Y."""
    zq = zquad or default_grids()["z"]
    a = _gauss_window(w, zq)
    Z = zq.nodes
    v = a(Z)
    wz = zq.weights
    odd = [Z[:, 0], Z[:, 1], Z[:, 2], Z[:, 0] * Z[:, 2], Z[:, 0] ** 3]
    moment = max(abs(float(np.sum(wz * v ** 2 * q))) for q in odd)
    # derivatives of the Gaussian mixture
    grad = np.zeros_like(Z)
    for c, isd, amp in zip(a.cen, a.isd, a.amp):
        e = amp * np.exp(-0.5 * np.sum(((Z - c) * isd) ** 2, axis=-1))
        grad -= e[:, None] * (Z - c) * isd ** 2
    Xa = grad[:, 0] - 0.5 * Z[:, 1] * grad[:, 2]
    Ya = grad[:, 1] + 0.5 * Z[:, 0] * grad[:, 2]
    vf = max(abs(float(np.sum(wz * Xa * v))), abs(float(np.sum(wz * Ya * v))))
    return {"odd_moment": moment, "vector_field": vf}


# ---------------------------------------------------------------------------
# sweeps

def loglog_fit(xs, ys) -> tuple[float, float, float]:
    """Least squares of log y against log x: (slope, intercept, rms residual)."""
    lx = np.log(np.asarray(xs, float))
    ly = np.log(np.asarray(ys, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res ** 2)))


@dataclass(eq=False)
class EpsilonSweep:
    eps: list
    records: list
    slopes: dict
    config: dict = field(default_factory=dict)

    def column(self, key):
        return np.array([r[key] for r in self.records])


def default_eps(kmax: int = 6) -> list:
    return [2.0 ** -k for k in range(kmax + 1)]


def _workers(n):
    return max(1, min(n, int(os.environ.get("NCWICK_THREADS", os.cpu_count() or 1))))


def garding_point(sig: A0Symbol, eps: float, x0, n: int = 8, h: float = 0.5) -> dict:
    basis = GridBasis(patch_quadrature(x0, eps, n, h))
    M = op_eps_matrix(sig, eps, basis).hermitian_part()
    ev = np.linalg.eigvalsh(M.matrix)
    return {"eps": eps, "lambda_min": float(ev[0]), "lambda_max": float(ev[-1]),
            "garding": max(0.0, -float(ev[0]))}


def _fit(eps, vals, floor, min_points=4):
    vals = np.asarray(vals, float)
    if np.all(vals < 1e-12):
        return {"status": "vacuous", "slope": None, "intercept": None, "residual": None, "used": 0}
    keep = vals > 10 * floor
    if keep.sum() < min_points:
        return {"status": "insufficient", "slope": None, "intercept": None, "residual": None,
                "used": int(keep.sum())}
    sl, ic, res = loglog_fit(np.asarray(eps)[keep], vals[keep])
    return {"status": "fitted", "slope": sl, "intercept": ic, "residual": res, "used": int(keep.sum())}


def sweep(sig: A0Symbol, w: Window, eps_list=None, metrics=("comparison", "garding"),
          grids: dict | None = None, x0=None, patch_n: int = 8, patch_h: float = 0.5) -> EpsilonSweep:
    """Per-eps metrics and their log-log slopes.

    comparison: the A0 defect of sigma - sigma^{eps,Wick}, which bounds
    ||Op_eps - Op^Wick_eps||, with its I1/I2 split.  garding:
    max(0, -lambda_min(Re M_eps)) on a patch of scale eps centered at x0.
    """
    eps_list = list(default_eps() if eps_list is None else eps_list)
    if len(eps_list) < 4:
        raise ValueError("a sweep needs at least 4 eps values")
    for e in eps_list:
        _check_eps(e)
    if x0 is None:
        ph = sig.terms[0][0]
        x0 = ph.p0 if isinstance(ph, SquaredAffine) else ph.cen[0]

    def one(e):
        rec = {"eps": e}
        if "comparison" in metrics:
            rec.update(a0_defect(w, sig, e, grids))
        if "garding" in metrics:
            rec.update(garding_point(sig, e, x0, patch_n, patch_h))
        return rec

    with ThreadPoolExecutor(_workers(len(eps_list))) as ex:
        records = list(ex.map(one, eps_list))
    slopes = {}
    tiny = np.finfo(float).eps
    if "comparison" in metrics:
        floor = 64 * tiny * records[0]["scale"]
        for key in ("a0", "I1", "I2"):
            slopes[key] = _fit(eps_list, [r[key] for r in records], floor)
    if "garding" in metrics:
        floor = 64 * tiny * max(abs(r["lambda_max"]) for r in records)
        slopes["garding"] = _fit(eps_list, [r["garding"] for r in records], floor)
    return EpsilonSweep(eps_list, records, slopes,
                        {"window": w.desc, "symbol": sig.desc, "x0": np.asarray(x0).tolist(),
                         "patch": {"n": patch_n, "h": patch_h}})
