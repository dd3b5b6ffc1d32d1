"""Compare the compiled kernels with the pure-Python fallback.

Usage: ``python benchmarks/bench_kernels.py [--steps N] [--repeat R]``.
Each kernel runs on identical inputs under both backends; the script
reports the best wall time of ``R`` repeats, the speed-up and whether the
outputs agree bitwise.
"""
import argparse
import timeit

import numpy as np

from genspec import _backend
from genspec import quadrature as Q
from genspec import simulate as S


def langevin_case(steps):
    pot = S.triple_well()
    amp, rate, center = pot._gauss_arrays()
    noise = np.random.default_rng(0).standard_normal(steps)
    h = 1e-3

    def call(mod):
        state, out = np.array([0.0]), np.empty(steps)
        mod.em_langevin_1d(state, noise, h, 1.0, np.sqrt(2 * h), np.ascontiguousarray(pot.dpoly),
                           amp, rate, center, 1, out)
        return out

    return call


def linear_case(steps, d=2):
    rng = np.random.default_rng(1)
    A = np.array([[-1.0, 0.5], [0.0, -2.0]])[:d, :d]
    B = np.sqrt(1e-3) * np.eye(d)
    noise = rng.standard_normal((steps, d))

    def call(mod):
        state, out = np.zeros(d), np.empty((steps, d))
        mod.em_linear(state, noise, 1e-3, A, B, 1, out)
        return out

    return call


def banded_case(n, ell=1000, k=2):
    w = Q.trapezoid_weights(1.0, 0.01, ell)
    M = Q.toeplitz_matrix(w, n)
    X = np.random.default_rng(2).standard_normal((n, k))

    def call(mod):
        return np.asarray(mod.banded_matmul(M.offsets, M.values, X))

    return call


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=200_000, help="Euler-Maruyama steps")
    p.add_argument("--n", type=int, default=20_000, help="rows of the banded product")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    try:
        cy = _backend.load("cython")
    except ImportError:
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation`")
    py = _backend.load("python")

    cases = [("em_langevin_1d", langevin_case(args.steps), f"{args.steps} steps"),
             ("em_linear (d=2)", linear_case(args.steps), f"{args.steps} steps"),
             ("banded_matmul", banded_case(args.n), f"n={args.n}, 1001 diagonals, 2 cols")]
    print(f"{'kernel':<18} {'size':<32} {'cython s':>10} {'python s':>10} {'speed-up':>9} {'bitwise':>8}")
    for name, call, size in cases:
        t_cy = min(timeit.repeat(lambda: call(cy), number=1, repeat=args.repeat))
        t_py = min(timeit.repeat(lambda: call(py), number=1, repeat=args.repeat))
        same = call(cy).tobytes() == call(py).tobytes()
        print(f"{name:<18} {size:<32} {t_cy:>10.4f} {t_py:>10.4f} {t_py / t_cy:>8.1f}x {str(same):>8}")


if __name__ == "__main__":
    main()
