#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Run with no arguments; it times the two hot paths (bitmask operator
application and the sparse pair-index evaluator) on both backends and
prints a small table.  Force a backend for a whole process with
QHYPER_NUMBA=0 (numpy) or QHYPER_NUMBA=1 (numba, the default when
installed).
"""

import importlib
import os
import sys
import time

import numpy as np

REPEAT = 5


def _fresh_modules(flag):
    os.environ["QHYPER_NUMBA"] = flag
    for name in ("qhyper._kernels", "qhyper.babyfock", "qhyper.clt"):
        if name in sys.modules:
            importlib.reload(sys.modules[name])
    import qhyper._kernels as kernels
    import qhyper.babyfock as babyfock
    import qhyper.clt as clt
    importlib.reload(kernels)
    importlib.reload(babyfock)
    importlib.reload(clt)
    return kernels, babyfock, clt


def bench_gamma(babyfock, n=5):
    from qhyper.signs import ModelParams

    model = babyfock.BabyFock(ModelParams.make(n, 1.5, sign_seed=1))
    mat = np.eye(model.dim, dtype=np.complex128)
    model.apply_gamma(1, mat)  # warm up (jit compile)
    best = np.inf
    for _ in range(REPEAT):
        t0 = time.perf_counter()
        for i in range(1, n + 1):
            model.apply_gamma(i, mat)
            model.apply_gamma_star(i, mat)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_clt(clt, n=1, m=40, samples=20):
    letters = [("x", 1)] * 4
    sample = clt.sample_signs(0.5, n, m, seed=3, sample_index=0)
    clt.sample_moment(letters, sample, (1.0,))  # warm up
    best = np.inf
    for _ in range(REPEAT):
        t0 = time.perf_counter()
        for s in range(samples):
            smp = clt.sample_signs(0.5, n, m, seed=3, sample_index=s)
            clt.sample_moment(letters, smp, (1.0,))
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rows = []
    for flag, label in (("0", "numpy"), ("1", "numba")):
        kernels, babyfock, clt = _fresh_modules(flag)
        if flag == "1" and not kernels.USE_NUMBA:
            print("numba not available; skipping the numba column")
            continue
        rows.append((label,
                     bench_gamma(babyfock),
                     bench_clt(clt)))
    print(f"{'backend':<8} {'gamma apply n=5 (s)':>22} {'clt 20 samples m=40 (s)':>26}")
    for label, tg, tc in rows:
        print(f"{label:<8} {tg:>22.4f} {tc:>26.4f}")
    if len(rows) == 2:
        print(f"{'speedup':<8} {rows[0][1] / rows[1][1]:>22.2f} {rows[0][2] / rows[1][2]:>26.2f}")


if __name__ == "__main__":
    main()
