"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature.  Set
``NCWICK_DISABLE_NUMBA=1`` to force the numpy versions (the benchmark in
``benchmarks/bench_kernels.py`` compares the two).
"""
import os

import numpy as np

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("NCWICK_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


# --- Chebyshev-U series (central functions on SU(2)) -----------------------

def _cheb_u_series_np(c, coef):
    c = np.asarray(c, float)
    out = np.zeros(c.shape, float)
    u_prev = np.ones_like(c)
    u = 2 * c
    out += coef[0] * u_prev
    if coef.size > 1:
        out += coef[1] * u
    for n in range(2, coef.size):
        u_prev, u = u, 2 * c * u - u_prev
        out += coef[n] * u
    return out


def _cheb_u_series_nb(c, coef):
    flat = c.ravel()
    out = np.empty(flat.size)
    m = coef.size
    for i in range(flat.size):
        x = flat[i]
        up = 1.0
        u = 2.0 * x
        acc = coef[0]
        if m > 1:
            acc += coef[1] * u
        for n in range(2, m):
            un = 2.0 * x * u - up
            up = u
            u = un
            acc += coef[n] * u
        out[i] = acc
    return out.reshape(c.shape)


# --- trilinear interpolation on a uniform 3d grid ---------------------------

def _trilinear_np(vals, origin, spacing, pts):
    nx, ny, nt = vals.shape
    g = (pts - origin[None, :]) / spacing[None, :]
    i0 = np.floor(g).astype(np.int64)
    fr = g - i0
    out = np.zeros(pts.shape[0], vals.dtype)
    inside = ((i0[:, 0] >= 0) & (i0[:, 0] < nx - 1) & (i0[:, 1] >= 0) & (i0[:, 1] < ny - 1)
              & (i0[:, 2] >= 0) & (i0[:, 2] < nt - 1))
    ii, ff = i0[inside], fr[inside]
    acc = np.zeros(ii.shape[0], vals.dtype)
    for dx in (0, 1):
        wx = ff[:, 0] if dx else 1 - ff[:, 0]
        for dy in (0, 1):
            wy = ff[:, 1] if dy else 1 - ff[:, 1]
            for dt in (0, 1):
                wt = ff[:, 2] if dt else 1 - ff[:, 2]
                acc += wx * wy * wt * vals[ii[:, 0] + dx, ii[:, 1] + dy, ii[:, 2] + dt]
    out[inside] = acc
    return out


def _trilinear_nb(vals, origin, spacing, pts):
    nx, ny, nt = vals.shape
    out = np.zeros(pts.shape[0], vals.dtype)
    for p in range(pts.shape[0]):
        gx = (pts[p, 0] - origin[0]) / spacing[0]
        gy = (pts[p, 1] - origin[1]) / spacing[1]
        gt = (pts[p, 2] - origin[2]) / spacing[2]
        ix = int(np.floor(gx))
        iy = int(np.floor(gy))
        it = int(np.floor(gt))
        if ix < 0 or iy < 0 or it < 0 or ix >= nx - 1 or iy >= ny - 1 or it >= nt - 1:
            continue
        fx = gx - ix
        fy = gy - iy
        ft = gt - it
        out[p] = ((1 - fx) * ((1 - fy) * ((1 - ft) * vals[ix, iy, it] + ft * vals[ix, iy, it + 1])
                              + fy * ((1 - ft) * vals[ix, iy + 1, it] + ft * vals[ix, iy + 1, it + 1]))
                  + fx * ((1 - fy) * ((1 - ft) * vals[ix + 1, iy, it] + ft * vals[ix + 1, iy, it + 1])
                          + fy * ((1 - ft) * vals[ix + 1, iy + 1, it] + ft * vals[ix + 1, iy + 1, it + 1])))
    return out


# --- Heisenberg convolution with trilinear interpolation -------------------

def _heis_convolve_np(fw, ynodes, gvals, origin, spacing, xs):
    out = np.zeros(xs.shape[0], complex)
    for i in range(xs.shape[0]):
        x = xs[i]
        arg = np.empty_like(ynodes)
        arg[:, 0] = x[0] - ynodes[:, 0]
        arg[:, 1] = x[1] - ynodes[:, 1]
        arg[:, 2] = x[2] - ynodes[:, 2] + 0.5 * (-ynodes[:, 0] * x[1] + ynodes[:, 1] * x[0])
        out[i] = np.sum(fw * _trilinear_np(gvals, origin, spacing, arg))
    return out


def _heis_convolve_nb(fw, ynodes, gvals, origin, spacing, xs):
    nx, ny, nt = gvals.shape
    out = np.zeros(xs.shape[0], np.complex128)
    for i in range(xs.shape[0]):
        acc = 0.0 + 0.0j
        for j in range(ynodes.shape[0]):
            if fw[j] == 0:
                continue
            a0 = xs[i, 0] - ynodes[j, 0]
            a1 = xs[i, 1] - ynodes[j, 1]
            a2 = xs[i, 2] - ynodes[j, 2] + 0.5 * (-ynodes[j, 0] * xs[i, 1] + ynodes[j, 1] * xs[i, 0])
            gx = (a0 - origin[0]) / spacing[0]
            gy = (a1 - origin[1]) / spacing[1]
            gt = (a2 - origin[2]) / spacing[2]
            ix = int(np.floor(gx))
            iy = int(np.floor(gy))
            it = int(np.floor(gt))
            if ix < 0 or iy < 0 or it < 0 or ix >= nx - 1 or iy >= ny - 1 or it >= nt - 1:
                continue
            fx = gx - ix
            fy = gy - iy
            ft = gt - it
            v = ((1 - fx) * ((1 - fy) * ((1 - ft) * gvals[ix, iy, it] + ft * gvals[ix, iy, it + 1])
                             + fy * ((1 - ft) * gvals[ix, iy + 1, it] + ft * gvals[ix, iy + 1, it + 1]))
                 + fx * ((1 - fy) * ((1 - ft) * gvals[ix + 1, iy, it] + ft * gvals[ix + 1, iy, it + 1])
                         + fy * ((1 - ft) * gvals[ix + 1, iy + 1, it] + ft * gvals[ix + 1, iy + 1, it + 1])))
            acc += fw[j] * v
        out[i] = acc
    return out


# --- Gaussian mixtures evaluated at pairwise Heisenberg products ----------
# out[i, j] = sum_k amp_k exp(-1/2 sum_c ((U_i V_j)_c - cen_kc)^2 * isd_kc^2)

def _gauss_pairs_np(U, V, cen, isd, amp):
    out = np.zeros((U.shape[0], V.shape[0]))
    step = max(1, 2_000_000 // max(V.shape[0], 1))
    for s in range(0, U.shape[0], step):
        u = U[s:s + step, None, :]
        v = V[None, :, :]
        p0 = u[..., 0] + v[..., 0]
        p1 = u[..., 1] + v[..., 1]
        p2 = u[..., 2] + v[..., 2] + 0.5 * (u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
        acc = np.zeros(p0.shape)
        for k in range(amp.size):
            e = ((p0 - cen[k, 0]) * isd[k, 0]) ** 2 + ((p1 - cen[k, 1]) * isd[k, 1]) ** 2 \
                + ((p2 - cen[k, 2]) * isd[k, 2]) ** 2
            acc += amp[k] * np.exp(-0.5 * e)
        out[s:s + step] = acc
    return out


def _gauss_pairs_nb(U, V, cen, isd, amp):
    out = np.zeros((U.shape[0], V.shape[0]))
    for i in range(U.shape[0]):
        for j in range(V.shape[0]):
            p0 = U[i, 0] + V[j, 0]
            p1 = U[i, 1] + V[j, 1]
            p2 = U[i, 2] + V[j, 2] + 0.5 * (U[i, 0] * V[j, 1] - U[i, 1] * V[j, 0])
            acc = 0.0
            for k in range(amp.size):
                e = ((p0 - cen[k, 0]) * isd[k, 0]) ** 2 + ((p1 - cen[k, 1]) * isd[k, 1]) ** 2 \
                    + ((p2 - cen[k, 2]) * isd[k, 2]) ** 2
                acc += amp[k] * np.exp(-0.5 * e)
            out[i, j] = acc
    return out


# --- closed-form autocorrelation g * g^* of a centered Gaussian on H^1 -----
# g(z) = exp(-(z1^2+z2^2)/(2 sh^2) - z3^2/(2 st^2)); evaluated at U_i V_j

def _autocorr_value_np(p0, p1, p2, sh, st):
    vh2 = p0 * p0 + p1 * p1
    mu = 2.0 / sh ** 2 + vh2 / (8.0 * st ** 2)
    pref = np.sqrt(np.pi) * st * 2.0 * np.pi / np.sqrt(2.0 / sh ** 2 * mu)
    return pref * np.exp(-vh2 / (4.0 * sh ** 2) - p2 * p2 / (2.0 * sh ** 2 * st ** 2 * mu))


def _autocorr_pairs_np(U, V, sh, st):
    out = np.zeros((U.shape[0], V.shape[0]))
    step = max(1, 2_000_000 // max(V.shape[0], 1))
    for s in range(0, U.shape[0], step):
        u = U[s:s + step, None, :]
        v = V[None, :, :]
        p0 = u[..., 0] + v[..., 0]
        p1 = u[..., 1] + v[..., 1]
        p2 = u[..., 2] + v[..., 2] + 0.5 * (u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
        out[s:s + step] = _autocorr_value_np(p0, p1, p2, sh, st)
    return out


def _autocorr_pairs_nb(U, V, sh, st):
    out = np.zeros((U.shape[0], V.shape[0]))
    c0 = np.sqrt(np.pi) * st * 2.0 * np.pi
    for i in range(U.shape[0]):
        for j in range(V.shape[0]):
            p0 = U[i, 0] + V[j, 0]
            p1 = U[i, 1] + V[j, 1]
            p2 = U[i, 2] + V[j, 2] + 0.5 * (U[i, 0] * V[j, 1] - U[i, 1] * V[j, 0])
            vh2 = p0 * p0 + p1 * p1
            mu = 2.0 / (sh * sh) + vh2 / (8.0 * st * st)
            out[i, j] = c0 / np.sqrt(2.0 / (sh * sh) * mu) * np.exp(
                -vh2 / (4.0 * sh * sh) - p2 * p2 / (2.0 * sh * sh * st * st * mu))
    return out


if USE_NUMBA:
    cheb_u_series = njit(cache=True)(_cheb_u_series_nb)
    trilinear = njit(cache=True)(_trilinear_nb)
    heis_convolve = njit(cache=True)(_heis_convolve_nb)
    gauss_pairs = njit(cache=True)(_gauss_pairs_nb)
    autocorr_pairs = njit(cache=True)(_autocorr_pairs_nb)
    BACKEND = "numba"
else:
    cheb_u_series = _cheb_u_series_np
    trilinear = _trilinear_np
    heis_convolve = _heis_convolve_np
    gauss_pairs = _gauss_pairs_np
    autocorr_pairs = _autocorr_pairs_np
    BACKEND = "numpy"

NUMPY_KERNELS = {
    "cheb_u_series": _cheb_u_series_np,
    "trilinear": _trilinear_np,
    "heis_convolve": _heis_convolve_np,
    "gauss_pairs": _gauss_pairs_np,
    "autocorr_pairs": _autocorr_pairs_np,
}


def autocorr_value(points, sh, st):
    p = np.asarray(points, float)
    return _autocorr_value_np(p[..., 0], p[..., 1], p[..., 2], sh, st)
