"""Kohn-Nirenberg quantization: kernels, application, A0 norm, operator matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .fourier import (
    FourierField, GridFunction, SymbolField, fourier, inverse_fourier, rep_matrices, _remember,
)
from .groups import BackendMismatch, HaarQuadrature, IrrepSlice, heis_mul, mul_array, inv_array


class BasisError(ValueError):
    pass


@dataclass(eq=False)
class KernelField:
    """kappa_x(y): ``values[i, k]`` for x-node i and y-node k (one row if x-independent).

    ``fn(xs, us)``, when present, evaluates kappa_{x_i}(u_i) elementwise at
    arbitrary points; the heisenberg operator matrices use it.
    """
    backend: str
    xquad: HaarQuadrature | None
    yquad: HaarQuadrature
    values: np.ndarray
    fn: Callable | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, complex))
        if self.backend == "heisenberg" and "boundary" not in self.meta and self.yquad.grid is not None:
            v = np.abs(self.values).reshape((self.values.shape[0],) + tuple(self.yquad.grid["shape"]))
            edge = max(np.max(v[:, [0, -1]]), np.max(v[:, :, [0, -1]]), np.max(v[:, :, :, [0, -1]]))
            self.meta["boundary"] = float(edge)
            self.meta["peak"] = float(np.max(v))


def _flat_reps(s: IrrepSlice, quad: HaarQuadrature):
    """Y[k, c] = pi_j(y_k)_{ba} for the flattened coefficient c = (j, a, b)."""
    key = ("flat", s.backend, tuple(np.round(s.labels * 2).astype(int)), tuple(s.dims))
    hit = quad.cache.get(key)
    if hit is not None:
        return hit
    cols = []
    for j in range(len(s)):
        P = rep_matrices(s, j, quad)
        cols.append(np.swapaxes(P, 1, 2).reshape(P.shape[0], -1))
    Y = np.concatenate(cols, axis=1)
    return _remember(quad, key, Y)


def coefficient_weights(s: IrrepSlice):
    return np.concatenate([np.full(int(d) ** 2, w) for d, w in zip(s.dims, s.plancherel_weights)])


def _flat_symbol(sig: SymbolField):
    return np.concatenate([sig.at(j).reshape(sig.at(j).shape[0], -1) for j in range(len(sig.slice))], axis=1)


def symbol_to_kernel(sig: SymbolField, yquad: HaarQuadrature) -> KernelField:
    """kappa_x = inverse Fourier transform of sigma(x, .) sampled at the y-nodes."""
    s = sig.slice
    if s.backend == "heisenberg":
        rows = []
        nx = 1 if sig.x_independent else sig.xquad.size
        for i in range(nx):
            F = FourierField(s, [sig.mats[j][i] for j in range(len(s))])
            rows.append(inverse_fourier(F, s, yquad).values)
        return KernelField(s.backend, None if sig.x_independent else sig.xquad, yquad, np.array(rows))
    S = np.concatenate([sig.mats[j].reshape(sig.mats[j].shape[0], -1) for j in range(len(s))], axis=1)
    vals = (S * coefficient_weights(s)[None, :]) @ _flat_reps(s, yquad).T
    return KernelField(s.backend, None if sig.x_independent else sig.xquad, yquad, vals)


def kernel_to_symbol(kap: KernelField, s: IrrepSlice) -> SymbolField:
    xq = kap.xquad if kap.xquad is not None else kap.yquad
    xi = kap.xquad is None
    if s.backend == "heisenberg":
        per = [fourier(GridFunction(s.backend, kap.yquad, row), s).mats for row in kap.values]
        mats = [np.stack([p[j] for p in per]) for j in range(len(s))]
        return SymbolField(s, xq, mats, xi)
    Yc = np.conj(_flat_reps(s, kap.yquad))
    flat = (kap.values * kap.yquad.weights[None, :]) @ Yc   # [x, (j, a, b)] = sigma_ab
    mats, c = [], 0
    for d in s.dims:
        d = int(d)
        mats.append(flat[:, c:c + d * d].reshape(-1, d, d))
        c += d * d
    return SymbolField(s, xq, mats, xi)


def _labels_matrices(sig: SymbolField, s: IrrepSlice, j: int, nx: int):
    """sigma at label s.labels[j]; zero if the symbol's slice does not contain it."""
    try:
        k = sig.slice.index(s.labels[j])
    except KeyError:
        d = int(s.dims[j])
        return np.zeros((nx, d, d), complex)
    m = sig.at(k)
    return np.broadcast_to(m, (nx,) + m.shape[1:]) if m.shape[0] == 1 else m


def opkn_apply(sig: SymbolField, f: GridFunction, form: str = "kernel") -> GridFunction:
    """(Op^KN sigma f)(x) at the symbol's x-nodes.

    form="kernel": sum_y w_y f(y) kappa_x(y^{-1} x), the kernel being evaluated
    off-grid by the backend's interpolation rule.
    form="trace": sum_pi mu_pi tr(pi(x) sigma(x, pi) f^(pi)).
    """
    s = sig.slice
    xq = sig.xquad
    if f.backend != s.backend:
        raise BackendMismatch("symbol and function backends differ")
    if form == "trace":
        fh = fourier(f, s)
        out = np.zeros(xq.size, complex)
        for j in range(len(s)):
            P = rep_matrices(s, j, xq) if s.backend != "heisenberg" else s.matrices(j, xq.nodes)
            out += s.plancherel_weights[j] * np.einsum("xab,xbc,ca->x", P, sig.at(j), fh.mats[j])
        return GridFunction(s.backend, xq, out)
    if form != "kernel":
        raise ValueError(f"unknown form {form!r}")
    wf = f.quad.weights * f.values
    if s.backend == "heisenberg":
        kap = symbol_to_kernel(sig, f.quad)
        g = f.quad.grid
        out = np.empty(xq.size, complex)
        for i in range(xq.size):
            row = kap.values[0 if kap.values.shape[0] == 1 else i].reshape(g["shape"])
            out[i] = _kernels.heis_convolve(wf, f.quad.nodes, row, g["origin"], g["spacing"],
                                            xq.nodes[i:i + 1])[0]
        return GridFunction(s.backend, xq, out)
    # compact: kappa_x(y^{-1}x) = sum_pi mu_pi tr(pi(y)^* pi(x) sigma(x, pi))
    Yc = np.conj(_flat_reps(s, f.quad))             # [y, (j, a, b)] = conj(pi(y)_{ba})
    Q = []
    for j in range(len(s)):
        P = rep_matrices(s, j, xq)
        Qj = s.plancherel_weights[j] * (P @ sig.at(j))
        Q.append(np.swapaxes(Qj, 1, 2).reshape(xq.size, -1))
    K = Yc @ np.concatenate(Q, axis=1).T           # K[y, x] = kappa_x(y^{-1} x)
    return GridFunction(s.backend, xq, wf @ K)


def a0_norm(kap: KernelField) -> float:
    """int sup_x |kappa_x(y)| dy over the sampled x-nodes."""
    return float(np.sum(kap.yquad.weights * np.max(np.abs(kap.values), axis=0)))


# ---------------------------------------------------------------------------
# bases and operator matrices

@dataclass(eq=False)
class PeterWeylBasis:
    """sqrt(d) pi_{mn}(x) for all labels up to ``band``, on the nodes of ``quad``."""
    backend: str
    band: float
    quad: HaarQuadrature
    slice: IrrepSlice
    values: np.ndarray          # (n_x, n_basis)
    index: list                 # (label index, m, n)

    @property
    def size(self):
        return self.values.shape[1]


def peter_weyl_basis(backend, band, quad: HaarQuadrature) -> PeterWeylBasis:
    from .fourier import band_slice
    s = band_slice(backend, band)
    cols, idx = [], []
    for j in range(len(s)):
        d = int(s.dims[j])
        P = rep_matrices(s, j, quad)
        cols.append(np.sqrt(d) * P.reshape(quad.size, -1))
        idx += [(j, m, n) for m in range(d) for n in range(d)]
    return PeterWeylBasis(backend, band, quad, s, np.concatenate(cols, axis=1), idx)


@dataclass(eq=False)
class GridBasis:
    """Weighted indicators delta_i / sqrt(w_i) of the quadrature nodes."""
    quad: HaarQuadrature
    backend: str = "heisenberg"

    @property
    def size(self):
        return self.quad.size


def gram_defect(basis) -> float:
    if isinstance(basis, GridBasis):
        return 0.0
    Phi = basis.values
    G = np.conj(Phi).T @ (basis.quad.weights[:, None] * Phi)
    return float(np.max(np.abs(G - np.eye(G.shape[0]))))


@dataclass(eq=False)
class OperatorMatrix:
    basis: object
    matrix: np.ndarray
    symmetrized: bool = False

    def hermitian_part(self) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, 0.5 * (self.matrix + np.conj(self.matrix).T), True)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - np.conj(self.matrix).T), initial=0.0))

    def op_norm(self) -> float:
        if self.symmetrized:
            ev = np.linalg.eigvalsh(self.matrix)
            return float(max(abs(ev[0]), abs(ev[-1])))
        return float(np.linalg.norm(self.matrix, 2))

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def __sub__(self, o):
        return OperatorMatrix(self.basis, self.matrix - o.matrix, self.symmetrized and o.symmetrized)

    def __add__(self, o):
        return OperatorMatrix(self.basis, self.matrix + o.matrix, self.symmetrized and o.symmetrized)


def assemble_matrix(op, basis, symmetrize: bool = False, tol: float = 1e-10) -> OperatorMatrix:
    """M[i, j] = (Op^KN(sigma) b_j, b_i).

    Peter-Weyl bases take a SymbolField (resampled on the basis quadrature);
    grid bases take a KernelField with an elementwise evaluator ``fn``.
    """
    g = gram_defect(basis)
    if g > tol:
        raise BasisError(f"basis is not orthonormal on its quadrature (Gram defect {g:.2e})")
    if isinstance(basis, GridBasis):
        if not isinstance(op, KernelField) or op.fn is None:
            raise TypeError("grid bases need a KernelField with an evaluator")
        M = grid_kernel_matrix(op.fn, basis.quad)
    else:
        sig = op.on(basis.quad) if op.xquad is not basis.quad else op
        s = basis.slice
        nx = basis.quad.size
        cols = []
        for j in range(len(s)):
            d = int(s.dims[j])
            P = rep_matrices(s, j, basis.quad)
            sj = _labels_matrices(sig, s, j, nx)
            cols.append((s.plancherel_weights[j] / np.sqrt(d) * (P @ sj)).reshape(nx, -1))
        Pm = np.concatenate(cols, axis=1)
        M = np.conj(basis.values).T @ (basis.quad.weights[:, None] * Pm)
    out = OperatorMatrix(basis, M)
    return out.hermitian_part() if symmetrize else out


def grid_kernel_matrix(fn, quad: HaarQuadrature, chunk: int = 256) -> np.ndarray:
    """sqrt(w_i w_j) kappa_{x_i}(y_j^{-1} x_i) on the heisenberg grid."""
    X = quad.nodes
    n = X.shape[0]
    M = np.empty((n, n), complex)
    sw = np.sqrt(quad.weights)
    for s0 in range(0, n, chunk):
        xs = X[s0:s0 + chunk]
        u = heis_mul(-X[None, :, :], xs[:, None, :])         # y_j^{-1} x_i
        xi = np.broadcast_to(xs[:, None, :], u.shape)
        vals = fn(xi.reshape(-1, 3), u.reshape(-1, 3)).reshape(xs.shape[0], n)
        M[s0:s0 + chunk] = sw[s0:s0 + chunk, None] * vals * sw[None, :]
    return M


def translation_matrix(basis: PeterWeylBasis, x0) -> np.ndarray:
    """Matrix of (L_{x0} f)(x) = f(x0^{-1} x) in a Peter-Weyl basis."""
    s = basis.slice
    pt = np.atleast_1d(np.asarray(x0, float)) if basis.backend == "torus" else np.atleast_2d(x0)
    blocks = []
    for j in range(len(s)):
        d = int(s.dims[j])
        R = s.matrices(j, pt)[0]
        blocks.append(np.kron(np.conj(R), np.eye(d)))
    from scipy.linalg import block_diag
    return block_diag(*blocks)


def translate_symbol(sig: SymbolField, x0) -> SymbolField:
    """(L_{x0} sigma)(x, pi) = sigma(x0^{-1} x, pi)."""
    if sig.fn is None:
        raise ValueError("translation needs a symbol with a callable")
    b = sig.slice.backend
    x0 = np.asarray(x0, float)

    def fn(x, j):
        src = mul_array(b, inv_array(b, x0 if b == "torus" else x0[None, :]), x)
        return sig.fn(src, j)
    return SymbolField.from_callable(sig.slice, sig.xquad, fn, sig.self_adjoint, sig.x_band)


def operator_norm_bound_gap(sig: SymbolField, basis, yquad) -> tuple[float, float]:
    """(||Op^KN sigma|| on the basis, a0_norm of its kernel) for the Lemma-type bound check."""
    M = assemble_matrix(sig, basis)
    kap = symbol_to_kernel(sig.on(basis.quad), yquad)
    return M.op_norm(), a0_norm(kap)
