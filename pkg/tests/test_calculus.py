import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncwick.calculus import (CentralFunction, approx_identity, convolution_majorant, delta_q, heat_kernel,
                             laplace_eigenvalues, lipschitz_estimate, sobolev_norm, sqrt_heat_window_coefficients,
                             su2_distance, symbol_convolve)
from ncwick.fourier import (GridFunction, SymbolField, band_slice, default_quadrature, fourier,
                            random_band_function, random_symbol)
from ncwick.groups import heisenberg_quadrature
from ncwick.cli import heat_checks


def image_sum(t, u, terms=20):
    """Heat kernel on the unit-volume 3-sphere by the method of images (independent of the character sum)."""
    v = u[None, :] + 2 * np.pi * np.arange(-terms, terms + 1)[:, None]
    return np.exp(t / 4) * np.sqrt(4 * np.pi / t) / (2 * np.sin(u)) * np.sum(2 * v / t * np.exp(-v ** 2 / t), 0)


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_heat_kernel_matches_image_sum(t):
    hk = heat_kernel(t, tol=1e-14)
    u = np.linspace(0.05, 3.0, 40)
    ref = image_sum(t, u)
    assert np.max(np.abs(hk.central(np.cos(u)) - ref)) < 1e-8 * np.max(ref)


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_heat_kernel_suite(t):
    m = heat_checks(t)
    assert m["mass"] <= 1e-10
    assert m["min_value"] > 0
    assert m["semigroup"] <= 1e-8
    assert m["spectral"] <= 1e-9


def test_heat_rejects_bad_time():
    with pytest.raises(ValueError):
        heat_kernel(0.0)
    with pytest.raises(ValueError):
        heat_kernel(0.1, L=1)


def test_sqrt_window_is_unit_norm():
    cf, dropped = sqrt_heat_window_coefficients(0.35)
    assert abs(cf.l2_norm() - 1) < 1e-12
    assert 0 <= dropped < 1e-6


@pytest.mark.parametrize("family,t,quad", [
    ("su2-heat", 0.1, None),
    ("torus-fejer", 0.05, None),
    ("h1-dilated", 0.5, heisenberg_quadrature(3.0, 31)),
])
def test_approx_identity_unit_mass(family, t, quad):
    ai = approx_identity(family, t, quad)
    assert abs(ai.mass() - 1) < 1e-3


def test_approx_identity_concentrates():
    m = [convolution_majorant(approx_identity("su2-heat", t).samples) for t in (0.2, 0.1, 0.05)]
    assert m[0] > m[1] > m[2]


def test_unknown_family():
    with pytest.raises(ValueError):
        approx_identity("nope", 0.1)


def test_delta_q_constant_is_scaling(rng):
    s = band_slice("su2", 1)
    q = default_quadrature("su2", 4)
    sig = random_symbol(s, q, rng)
    one = GridFunction("su2", default_quadrature("su2", 2), np.full(default_quadrature("su2", 2).size, 2.0), 0.0)
    out = delta_q(one, sig, out_slice=s)
    assert all(np.allclose(out.at(j), 2 * sig.at(j), atol=1e-12) for j in range(len(s)))


def test_symbol_convolve_with_unit_constant_averages(rng):
    s = band_slice("su2", 1)
    q = default_quadrature("su2", 4)
    sig = random_symbol(s, q, rng)
    const = CentralFunction(np.array([1.0]))
    out = symbol_convolve(sig, const)
    mean = [np.einsum("x,xab->ab", q.weights, sig.at(j)) for j in range(len(s))]
    assert all(np.allclose(out.at(j), mean[j][None], atol=1e-12) for j in range(len(s)))


def test_lipschitz_of_constant_symbol_is_zero():
    s = band_slice("su2", 1)
    sig = SymbolField.identity(s, default_quadrature("su2", 2))
    assert lipschitz_estimate(sig, n_pairs=20) < 1e-8


@given(st.tuples(st.floats(0, 6), st.floats(0.1, 3), st.floats(0, 12)))
def test_su2_distance_self_zero(x):
    x = np.array([x])
    assert su2_distance(x, x)[0, 0] < 1e-6


def test_laplace_eigenvalues():
    s = band_slice("su2", 2)
    assert np.allclose(laplace_eigenvalues(s, s.index(1.5)), 1.5 * 2.5)
    t = band_slice("torus", 2)
    assert np.allclose(laplace_eigenvalues(t, t.index(2)), 16 * np.pi ** 2)


def test_sobolev_norm_zero_order_is_l2(rng):
    q = default_quadrature("su2", 4)
    f = random_band_function("su2", 2, q, rng)
    s = band_slice("su2", 2)
    assert np.isclose(sobolev_norm(f, 0, s), f.norm())
    assert sobolev_norm(f, 1, s) > sobolev_norm(f, 0, s)
