import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncwick.lab import (LabConfig, NotHermitian, deficiency, fit_bound, fit_constants, garding_compact,
                        garding_semiclassical, smallest_eigenvalue)
from ncwick.semiclassical import constant_symbol, indefinite_symbol
from ncwick.wick import heisenberg_gaussian_window


def test_smallest_eigenvalue_examples():
    assert smallest_eigenvalue(np.eye(4)) == pytest.approx(1.0)
    assert smallest_eigenvalue(np.diag([-3.0, 5.0])) == pytest.approx(-3.0)


def test_non_hermitian_rejected():
    with pytest.raises(NotHermitian):
        smallest_eigenvalue(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_fit_bound_exact_line():
    eps = np.array([1, 0.5, 0.25, 0.125])
    slope, ic, res = fit_bound(np.c_[eps, 3 * eps])
    assert slope == pytest.approx(1.0) and ic == pytest.approx(np.log(3)) and res < 1e-12


@given(st.floats(0.5, 3.0), st.floats(0.1, 2.0))
def test_fit_constants_diagonal(c0, shift):
    # reM = c0 G_hi - shift G_lo exactly: the fit recovers c0 with deficiency shift at that c
    g_hi = 1.0 + np.arange(6.0)
    g_lo = 1.0 / (1.0 + np.arange(6.0))
    reM = np.diag(c0 * g_hi)
    c, C = fit_constants(reM, g_hi, g_lo)
    assert c == pytest.approx(c0, abs=1e-9) and C <= 1e-9
    assert deficiency(np.diag(c0 * g_hi - shift * g_lo), g_hi, g_lo, c0) == pytest.approx(shift)


def test_compact_diag_exact():
    rep = garding_compact("diag", L=2, c0=1.5, wick=False, etas=())
    assert rep.passed["diag_exact"] and rep.passed["grams_pd"]
    assert rep.c == pytest.approx(1.5, abs=1e-9) and abs(rep.C) <= 1e-9


def test_compact_elliptic_small_band():
    rep = garding_compact("elliptic", L=2, etas=(0.35, 0.3))
    assert all(rep.passed.values()), rep.passed
    d = rep.to_dict()
    assert d["grams"]["H_m/2"]["size"] == rep.cutoff["basis"]


def test_zero_symbol_is_vacuous():
    rep = garding_semiclassical(constant_symbol(0.0), heisenberg_gaussian_window(), [1, 0.5, 0.25, 0.125])
    assert rep.sweep["slopes"]["garding"]["status"] == "vacuous"
    assert rep.passed == {"certified": True, "garding": True}


def test_indefinite_control():
    rep = garding_semiclassical(indefinite_symbol(), heisenberg_gaussian_window(), [1, 0.5, 0.25, 0.125],
                                config=LabConfig())
    assert rep.passed["control"] and rep.lambda_min <= -0.01
