import numpy as np
import pytest

from ncwick.cli import frame_metrics, h1_probe, wick_checks
from ncwick.fourier import SymbolField, random_band_function
from ncwick.groups import dual_slice, heisenberg_quadrature
from ncwick.wick import (BargmannField, MemoryGuardError, check_memory, constant_window, frame_coefficients,
                         h1_isometry_defect, heisenberg_gaussian_window, make_frame, opwick_apply,
                         su2_heat_window, torus_gaussian_window)

WINDOWS = {
    "torus-gauss": lambda: (torus_gaussian_window(0.1), 4),
    "torus-const": lambda: (constant_window(), 4),
    "su2-heat": lambda: (su2_heat_window(0.35), 1.5),
}


@pytest.mark.parametrize("name", WINDOWS)
def test_frame_identities(name, rng):
    w, band = WINDOWS[name]()
    fr = make_frame(w, band)
    f = random_band_function(w.backend, band, fr.yquad, rng)
    shape = (fr.xquad.size, fr.ncoef)
    tau = BargmannField(fr, rng.normal(size=shape) + 1j * rng.normal(size=shape))
    m = frame_metrics(fr, f, tau)
    for key in ("isometry", "reconstruction", "adjoint"):
        assert m[key] <= 1e-8, key
    assert m["projection"] <= 1e-7 and m["sum_rule"] <= 1e-7


@pytest.mark.parametrize("w", [torus_gaussian_window(0.1), constant_window(), su2_heat_window(0.35)])
def test_windows_unit_norm_even_real(w):
    assert abs(w.l2_norm() - 1) < 1e-12
    flags = w.verify_flags()
    assert w.even and w.real
    assert flags["even_defect"] < 1e-10 and flags["real_defect"] < 1e-10


def test_shifted_heisenberg_window_is_not_even():
    w = heisenberg_gaussian_window(center=(0.5, 0, 0))
    assert not w.even
    assert w.verify_flags()["even_defect"] > 1e-3
    assert abs(w.l2_norm(heisenberg_quadrature(6.0, 41)) - 1) < 1e-3


def test_identity_symbol_quantizes_to_identity(rng):
    w = su2_heat_window(0.35)
    fr = make_frame(w, 1.5, xband=1.0)
    f = random_band_function("su2", 1.5, fr.yquad, rng)
    out = opwick_apply(fr, SymbolField.identity(fr.slice, fr.xquad), f)
    assert np.max(np.abs(out.values - f.values)) <= 1e-8 * f.norm()


@pytest.mark.parametrize("backend", ["torus", "su2"])
def test_wick_structure(backend, rng):
    w = torus_gaussian_window(0.1) if backend == "torus" else su2_heat_window(0.35)
    m, _ = wick_checks(w, 3 if backend == "torus" else 1.0, rng, n_positive=3)
    assert m["identity"] <= 1e-8
    assert m["hermitian"] <= 1e-10
    assert m["positivity"] >= -1e-8
    assert m["two_path"] <= 1e-7


def test_sum_rule_of_zero_function(rng):
    fr = make_frame(torus_gaussian_window(0.1), 3)
    f = random_band_function("torus", 3, fr.yquad, rng) * 0.0
    assert frame_coefficients(fr, f)["sum_rule"] == 0


def test_memory_guard():
    with pytest.raises(MemoryGuardError):
        check_memory(10 ** 15, cap=10 ** 9)


def test_heisenberg_frames_are_refused():
    with pytest.raises(ValueError):
        make_frame(heisenberg_gaussian_window(), 1.0)


def test_h1_isometry_within_truncation():
    q = heisenberg_quadrature(4.0, 33)
    r = h1_isometry_defect(heisenberg_gaussian_window(), h1_probe(q), dual_slice("heisenberg", N=16),
                           heisenberg_quadrature(3.0, 7))
    assert r["defect"] <= 5e-2
