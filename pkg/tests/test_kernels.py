import os
import subprocess
import sys

import numpy as np
import pytest

from ncwick import _kernels as K


def _data(rng):
    grid = rng.normal(size=(6, 7, 8))
    origin = np.array([-1.0, -1.5, -2.0])
    spacing = np.array([0.4, 0.5, 0.6])
    pts = rng.uniform(-1.2, 2.0, size=(50, 3))
    return grid, origin, spacing, pts


def test_numpy_and_compiled_agree(rng):
    grid, origin, spacing, pts = _data(rng)
    U, V = rng.normal(size=(9, 3)), rng.normal(size=(11, 3))
    cen, isd, amp = rng.normal(size=(2, 3)), rng.uniform(0.5, 2, (2, 3)), rng.normal(size=2)
    fw = rng.normal(size=20) + 1j * rng.normal(size=20)
    yn = rng.uniform(-0.5, 0.5, (20, 3))
    c, coef = rng.uniform(-1, 1, 40), rng.normal(size=7)
    cases = {
        "cheb_u_series": (c, coef),
        "trilinear": (grid, origin, spacing, pts),
        "heis_convolve": (fw, yn, grid, origin, spacing, pts[:10]),
        "gauss_pairs": (U, V, cen, isd, amp),
        "autocorr_pairs": (U, V, 0.4, 0.5),
    }
    for name, args in cases.items():
        assert np.allclose(getattr(K, name)(*args), K.NUMPY_KERNELS[name](*args), atol=1e-12), name


def test_trilinear_exact_on_affine(rng):
    _, origin, spacing, _ = _data(rng)
    ax = [origin[i] + spacing[i] * np.arange(n) for i, n in enumerate((6, 7, 8))]
    X, Y, T = np.meshgrid(*ax, indexing="ij")
    vals = 1.0 + 2 * X - Y + 0.5 * T
    pts = np.stack([rng.uniform(ax[i][0], ax[i][-1] - 1e-9, 30) for i in range(3)], 1)
    want = 1.0 + 2 * pts[:, 0] - pts[:, 1] + 0.5 * pts[:, 2]
    assert np.allclose(K.trilinear(vals, origin, spacing, pts), want)
    # outside the box the interpolant is zero
    assert np.allclose(K.trilinear(vals, origin, spacing, np.array([[50.0, 0, 0]])), 0)


def test_chebyshev_u_matches_closed_form():
    th = np.linspace(0.1, 3.0, 25)
    coef = np.zeros(5)
    coef[4] = 1.0
    assert np.allclose(K.cheb_u_series(np.cos(th), coef), np.sin(5 * th) / np.sin(th))


def test_autocorr_value_matches_pairs(rng):
    U, V = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    from ncwick.groups import heis_mul
    P = heis_mul(U[:, None, :], V[None, :, :])
    assert np.allclose(K.autocorr_value(P, 0.4, 0.5), K.NUMPY_KERNELS["autocorr_pairs"](U, V, 0.4, 0.5))


@pytest.mark.parametrize("flag,want", [("1", "numpy")])
def test_env_switch_selects_numpy(flag, want):
    env = dict(os.environ, NCWICK_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from ncwick import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == want


def test_default_backend_uses_numba_when_installed():
    if os.environ.get("NCWICK_DISABLE_NUMBA", "0") == "1":
        pytest.skip("numba disabled in this environment")
    assert K.BACKEND == ("numba" if K.HAS_NUMBA else "numpy")
