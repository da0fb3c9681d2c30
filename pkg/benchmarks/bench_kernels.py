"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 200]

Times the two hot routines (tilt and the Newton M matrix) over a range of
alphabet sizes, then one full NAM solve with each backend swapped in.
"""

import argparse
import timeit

import numpy as np

from rdpf import _pykernels, kernel
from rdpf.divergences import make_builtin
from rdpf.nam import solve_nam
from rdpf.prob import hamming

try:
    from rdpf import _kernels
except ImportError:
    _kernels = None


def _inputs(n, rng):
    expo = np.ascontiguousarray(-rng.uniform(0, 5, size=(n, n)))
    return expo, rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))


def bench_routines(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'n':>5} {'routine':>9} {'python us':>11} {'compiled us':>12} {'speedup':>8}")
    for n in sizes:
        args = _inputs(n, rng)
        for name in ("tilt", "m_matrix"):
            py = min(timeit.repeat(lambda: getattr(_pykernels, name)(*args),
                                   number=repeat, repeat=3)) / repeat * 1e6
            if _kernels is None:
                print(f"{n:>5} {name:>9} {py:>11.2f} {'n/a':>12}")
                continue
            cy = min(timeit.repeat(lambda: getattr(_kernels, name)(*args),
                                   number=repeat, repeat=3)) / repeat * 1e6
            print(f"{n:>5} {name:>9} {py:>11.2f} {cy:>12.2f} {py / cy:>7.1f}x")


def bench_solve(n=8):
    rng = np.random.default_rng(1)
    p = rng.dirichlet(np.ones(n))
    d, spec = hamming(n), make_builtin("js")
    saved = kernel._tilt, kernel._m_matrix
    backends = {"python": (_pykernels.tilt, _pykernels.m_matrix)}
    if _kernels is not None:
        backends["compiled"] = (_kernels.tilt, _kernels.m_matrix)
    try:
        for label, (tilt, m) in backends.items():
            kernel._tilt, kernel._m_matrix = tilt, m
            t = min(timeit.repeat(lambda: solve_nam(p, (2.0, 0.5), d, spec),
                                  number=3, repeat=3)) / 3
            print(f"NAM solve n={n} [{label}]: {t * 1e3:.1f} ms")
    finally:
        kernel._tilt, kernel._m_matrix = saved


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    print(f"active backend: {kernel.BACKEND}")
    bench_routines((2, 3, 8, 32, 128), args.repeat)
    bench_solve()


if __name__ == "__main__":
    main()
