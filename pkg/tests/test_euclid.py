import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncwick.euclid import (LineGrid, bargmann, bargmann_adjoint, dyadic_ratio_test, euclid_garding_check,
                           euclid_opkn, euclid_wick, gaussian_window, kernel_of, opkn_from_kernel, opkn_matrix,
                           symbol_samples, torus_cross_check, wick_matrix_frame, wick_matrix_kernel)

G = LineGrid(8.0, 128)


def probe(x):
    return np.exp(-x ** 2) * (1 + 0.3 * x)


def band_symbol(grid, seed):
    r = np.random.default_rng(seed)
    s = np.zeros((grid.n, grid.n), complex)
    for _ in range(4):
        k, c = r.integers(-3, 4), r.normal(size=2)
        s += (c[0] + 1j * c[1]) * np.exp(2j * np.pi * k * grid.x / (2 * grid.R))[:, None] \
            * np.exp(-(grid.xi - r.normal()) ** 2)[None, :]
    return s


def test_parseval():
    assert G.parseval_defect(probe(G.x)) < 1e-12


def test_unit_symbol_and_multiplier():
    f = probe(G.x)
    one = symbol_samples(G, lambda x, xi: 1 + 0 * x * xi)
    assert np.allclose(euclid_opkn(G, one, f), f, atol=1e-12)
    ph = np.exp(2j * np.pi * G.x / 16)
    mul = symbol_samples(G, lambda x, xi: np.exp(2j * np.pi * x / 16) + 0 * xi)
    assert np.allclose(euclid_opkn(G, mul, f), ph * f, atol=1e-12)


def test_kernel_round_trip():
    s = band_symbol(G, 3)
    assert np.allclose(opkn_from_kernel(G, kernel_of(G, s)), opkn_matrix(G, s), atol=1e-12)


def test_bargmann_isometry_and_wick_identity():
    f = probe(G.x)
    a = gaussian_window(G, 1.0)
    B = bargmann(G, a, f)
    assert np.allclose(bargmann_adjoint(G, a, B), f, atol=1e-10)
    one = symbol_samples(G, lambda x, xi: 1 + 0 * x * xi)
    assert np.allclose(euclid_wick(G, a, one, f), f, atol=1e-10)


@pytest.mark.parametrize("seed", [0, 1])
def test_two_paths(seed):
    a = gaussian_window(G, 1.0)
    s = band_symbol(G, seed)
    W1, W2 = wick_matrix_frame(G, a, s), wick_matrix_kernel(G, a, s)
    assert np.max(np.abs(W1 - W2)) <= 1e-7 * np.max(np.abs(W1))
    f = probe(G.x)
    assert np.allclose(euclid_wick(G, a, s, f, path="kernel"), W1 @ f, atol=1e-9)


def test_wick_positivity():
    a = gaussian_window(G, 1.0)
    W = wick_matrix_frame(G, a, np.abs(band_symbol(G, 5)) ** 2)
    assert np.linalg.eigvalsh(0.5 * (W + W.conj().T))[0] >= -1e-8 * np.abs(W).max()


def test_constant_symbol_exact_case():
    r = euclid_garding_check(G, np.full((G.n, G.n), 2.0))
    assert abs(r.c_eff - 2) < 1e-10 and r.C_eff < 1e-10 and r.eta < 1e-12


def test_declared_constant_above_minimum_rejected():
    with pytest.raises(ValueError):
        euclid_garding_check(G, np.full((G.n, G.n), 2.0), c=3.0)


def test_eta_decreases_with_window_scale():
    sig = (2 + np.sin(2 * np.pi * G.x / 16))[:, None] + np.zeros((1, G.n))
    etas = [euclid_garding_check(G, sig, t=t).eta for t in (0.5, 0.25, 0.125)]
    assert etas[0] > etas[1] > etas[2]


def test_dyadic_ratio():
    out = dyadic_ratio_test(LineGrid(), lambda x: np.exp(-x ** 2) * (1 + x), 1.0)
    assert out["decreasing"]


@given(st.floats(0.1, 2.0))
def test_torus_cross_check(amp):
    err = torus_cross_check(G, lambda x, xi: (1 + xi ** 2) * (1 + amp * np.exp(-x ** 2)), probe)
    assert err <= 1e-6
