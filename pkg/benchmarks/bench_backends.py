#!/usr/bin/env python3
"""Benchmark the compiled evaluation core against the NumPy fallback.

The two hot kernels are the folded Clenshaw evaluation (torus multipliers,
decay scans) and the quadrature-weighted Clenshaw sum (identity checks,
reconstruction integrals).  Run:

    python3 benchmarks/bench_backends.py
"""

import time

import numpy as np

from frdecomp import _core_np
from frdecomp.mollifier import default_mollifier
from frdecomp.weights import chebyshev_coefficients

try:
    from frdecomp import _corex
except ImportError:
    _corex = None


def timeit(fn, *args, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_clenshaw(m):
    rows = []
    for degree, npoints in [(16, 2**21), (64, 2**19), (512, 2**15), (2048, 4096)]:
        coeffs = chebyshev_coefficients(m, float(degree)).coeffs
        theta = np.linspace(-1.0, 1.0, npoints)
        t_np = timeit(_core_np.clenshaw_folded, coeffs, theta)
        t_cx = timeit(_corex.clenshaw_folded, coeffs, theta) if _corex else np.nan
        rows.append(("clenshaw", f"deg={degree} n={npoints}", t_np, t_cx))
    return rows


def bench_weighted_sum(m):
    rows = []
    for n_nodes, t_hi, npoints in [(80, 64.0, 4096), (160, 1024.0, 512)]:
        from frdecomp.quadrature import log_gauss_legendre
        tq, wq = log_gauss_legendre(1.0, t_hi, 16)
        tq = tq[: n_nodes]
        wq = wq[: n_nodes]
        weights = [chebyshev_coefficients(m, t).coeffs for t in tq]
        offsets = np.zeros(len(weights) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(c) for c in weights])
        flat = np.concatenate(weights)
        factors = wq * tq**2
        theta = np.linspace(-1.0, 1.0, npoints)
        t_np = timeit(_core_np.weighted_clenshaw_sum, flat, offsets, factors, theta)
        t_cx = (timeit(_corex.weighted_clenshaw_sum, flat, offsets, factors, theta)
                if _corex else np.nan)
        rows.append(("weighted_sum", f"nodes={len(tq)} t_hi={t_hi:g} n={npoints}",
                     t_np, t_cx))
    return rows


def main():
    m = default_mollifier()
    rows = bench_clenshaw(m) + bench_weighted_sum(m)
    print(f"{'kernel':<14} {'case':<28} {'numpy [ms]':>12} {'compiled [ms]':>14} {'speedup':>9}")
    for kernel, case, t_np, t_cx in rows:
        speed = t_np / t_cx if t_cx == t_cx else float("nan")
        print(f"{kernel:<14} {case:<28} {1e3 * t_np:>12.2f} {1e3 * t_cx:>14.2f} {speed:>8.1f}x")
    if _corex is None:
        print("compiled extension not built; showing numpy fallback only")


if __name__ == "__main__":
    main()
