import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncwick.fourier import (FourierField, GridFunction, SymbolField, band_slice, convolve, default_quadrature,
                            fourier, inverse_fourier, pair_values, plancherel_defect, random_band_function,
                            random_symbol, resample)
from ncwick.groups import BackendMismatch, HaarQuadrature, dual_slice, heisenberg_quadrature, su2_quadrature


def _generic(quad):
    # same nodes and weights, no product structure: forces the unstructured transform
    return HaarQuadrature(quad.backend, quad.nodes, quad.weights, quad.exactness_degree, quad.total_mass)


@pytest.mark.parametrize("backend,band", [("torus", 8), ("su2", 4)])
def test_plancherel_random_pairs(backend, band, rng):
    q = default_quadrature(backend, 2 * band)
    s = band_slice(backend, band)
    for _ in range(5):
        f = random_band_function(backend, band, q, rng)
        g = random_band_function(backend, band, q, rng)
        assert plancherel_defect(f, g, s) < 1e-12


@pytest.mark.parametrize("backend,band", [("torus", 5), ("su2", 2.5)])
def test_inverse_then_forward_is_identity(backend, band, rng):
    q = default_quadrature(backend, 2 * band)
    s = band_slice(backend, band)
    F = FourierField(s, [rng.normal(size=(int(d), int(d))) + 0j for d in s.dims])
    back = fourier(inverse_fourier(F, s, q, band), s)
    assert (back - F).norm() < 1e-12 * F.norm()


def test_zero_function_transforms_to_zero():
    q = default_quadrature("su2", 4)
    s = band_slice("su2", 2)
    F = fourier(GridFunction("su2", q, np.zeros(q.size)), s)
    assert F.norm() == 0


def test_separable_su2_path_matches_generic(rng):
    q = su2_quadrature(6)
    s = band_slice("su2", 3)
    f = random_band_function("su2", 3, q, rng)
    a = fourier(f, s)
    b = fourier(GridFunction("su2", _generic(q), f.values), s)
    assert (a - b).norm() < 1e-12 * a.norm()
    back = inverse_fourier(a, s, _generic(q)).values
    assert np.allclose(back, inverse_fourier(a, s, q).values, atol=1e-12)


def test_convolution_order_su2(rng):
    q = default_quadrature("su2", 6)
    s = band_slice("su2", 3)
    f1 = random_band_function("su2", 1.5, q, rng)
    f2 = random_band_function("su2", 1.5, q, rng)
    F, A, B = fourier(convolve(f1, f2), s), fourier(f1, s), fourier(f2, s)
    right = max(np.max(np.abs(F.mats[j] - B.mats[j] @ A.mats[j])) for j in range(len(s)))
    wrong = max(np.max(np.abs(F.mats[j] - A.mats[j] @ B.mats[j])) for j in range(len(s)))
    assert right < 1e-10 and wrong > 1e-3


def test_torus_convolution_commutes(rng):
    q = default_quadrature("torus", 12)
    f = random_band_function("torus", 6, q, rng)
    g = random_band_function("torus", 6, q, rng)
    assert np.allclose(convolve(f, g).values, convolve(g, f).values, atol=1e-12)


def test_pair_values_consistent(rng):
    q = default_quadrature("su2", 4)
    s = band_slice("su2", 2)
    g = random_band_function("su2", 2, q, rng)
    xs = q.nodes[:5]
    G = pair_values(fourier(g, s), s, xs, q.nodes)
    # row i evaluates g(x_i^{-1} y); at y = x_i that is g(e), the same for every i
    e = np.array([G[i, i] for i in range(5)])
    assert np.allclose(e, e[0])


def test_resample_preserves_band_limited(rng):
    q1, q2 = default_quadrature("su2", 4), default_quadrature("su2", 6)
    f = random_band_function("su2", 2, q1, rng)
    g = resample(f, q2)
    assert abs(g.norm() - f.norm()) < 1e-12 * f.norm()


def test_backend_mismatch(rng):
    a = random_band_function("torus", 2, default_quadrature("torus", 4), rng)
    b = random_band_function("su2", 1, default_quadrature("su2", 2), rng)
    with pytest.raises(BackendMismatch):
        convolve(a, b)


@pytest.mark.parametrize("backend", ["torus", "su2"])
def test_random_positive_symbols_are_psd(backend, rng):
    s = band_slice(backend, 2)
    q = default_quadrature(backend, 4)
    sig = random_symbol(s, q, rng, "positive")
    assert sig.min_eigenvalue()[0] > -1e-12
    assert sig.sa_defect() < 1e-13
    h = random_symbol(s, q, rng, "hermitian")
    assert h.sa_defect() < 1e-13


def test_identity_symbol():
    s = band_slice("su2", 1)
    ident = SymbolField.identity(s, default_quadrature("su2", 2))
    assert all(np.allclose(ident.at(j)[0], np.eye(int(d))) for j, d in enumerate(s.dims))


@settings(max_examples=6)
@given(st.floats(0.3, 0.9), st.floats(-0.5, 0.5))
def test_h1_plancherel_modulated_gaussians(sh, shift):
    q = heisenberg_quadrature(4.0, 33)
    s = dual_slice("heisenberg", N=16)
    p = q.nodes
    v = np.exp(-((p[:, 0] - shift) ** 2 + p[:, 1] ** 2) / (2 * sh * sh) - p[:, 2] ** 2 / 0.72)
    f = GridFunction("heisenberg", q, v * np.cos(2 * np.pi * p[:, 2]))
    d = fourier(f, s).norm() ** 2 / f.norm() ** 2
    assert abs(d - 1) < 1e-2
