"""Time the compiled kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

The compiled column reads "n/a" when numba is missing or disabled with
NCWICK_DISABLE_NUMBA=1.
"""
import argparse
import timeit

import numpy as np

from ncwick import _kernels as K


def cases(rng):
    grid = rng.normal(size=(33, 33, 33))
    origin, spacing = np.full(3, -4.0), np.full(3, 0.25)
    pts = rng.uniform(-4, 4, (20000, 3))
    U, V = rng.normal(size=(300, 3)), rng.normal(size=(300, 3))
    return {
        "cheb_u_series": (rng.uniform(-1, 1, 200000), rng.normal(size=24)),
        "trilinear": (grid, origin, spacing, pts),
        "heis_convolve": (rng.normal(size=2000) + 0j, rng.uniform(-1, 1, (2000, 3)), grid, origin, spacing,
                          pts[:200]),
        "gauss_pairs": (U, V, rng.normal(size=(2, 3)), np.ones((2, 3)), np.ones(2)),
        "autocorr_pairs": (U, V, 0.35, 0.35),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"active backend: {K.BACKEND}")
    print(f"{'kernel':16s} {'numpy [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for name, a in cases(rng).items():
        t_np = min(timeit.repeat(lambda: K.NUMPY_KERNELS[name](*a), number=1, repeat=args.repeat))
        if K.USE_NUMBA:
            getattr(K, name)(*a)  # compile outside the timing
            t_nb = min(timeit.repeat(lambda: getattr(K, name)(*a), number=1, repeat=args.repeat))
            print(f"{name:16s} {1e3 * t_np:12.2f} {1e3 * t_nb:14.2f} {t_np / t_nb:8.1f}")
        else:
            print(f"{name:16s} {1e3 * t_np:12.2f} {'n/a':>14s} {'':>8s}")


if __name__ == "__main__":
    main()
