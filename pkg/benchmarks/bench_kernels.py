"""Benchmark the compiled monomial-evaluation kernel against the fallback.

Run: python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from fibreforms._kernels import _ref
from fibreforms.rng import philox


def bench(fn, points, exps, coeffs, repeats=20):
    fn(points, exps, coeffs)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = fn(points, exps, coeffs)
    return (time.perf_counter() - t0) / repeats, out


def main():
    try:
        from fibreforms._kernels import _speedups
    except ImportError:
        _speedups = None
        print("compiled kernel unavailable; benchmarking the fallback only")

    rng = philox(0, 0)
    for P, T, N in [(1_000, 8, 4), (100_000, 8, 4), (100_000, 32, 6)]:
        points = rng.random((P, N))
        exps = rng.integers(0, 4, size=(T, N)).astype(np.int64)
        coeffs = rng.standard_normal(T)
        t_ref, out_ref = bench(_ref.eval_monomials, points, exps, coeffs)
        line = f"P={P:>7} T={T:>3} N={N}: python {t_ref * 1e3:8.2f} ms"
        if _speedups is not None:
            t_cy, out_cy = bench(_speedups.eval_monomials, points, exps, coeffs)
            identical = np.array_equal(out_ref, out_cy)
            line += f"  cython {t_cy * 1e3:8.2f} ms  speedup {t_ref / t_cy:5.1f}x  bit-identical={identical}"
        print(line)


if __name__ == "__main__":
    main()
