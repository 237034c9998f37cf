"""Compiled kernels vs the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 20] [--repeat 5]

Each kernel is timed on identical inputs through both modules and the
outputs are compared bit for bit.
"""
import argparse
import time

import numpy as np

from remdyn import _pykernels as py

try:
    from remdyn import _ext as ext
except ImportError:
    ext = None


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20, help="spin count for the matvec and normals")
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if ext is None:
        print("compiled extension not built; only the fallback is available")
        return 1
    n = args.n
    size = 1 << n
    rng = np.random.default_rng(0)
    v = rng.standard_normal(size)
    d = rng.standard_normal(size)
    energies = np.ascontiguousarray(rng.standard_normal(256) * np.sqrt(8))
    key = py.seed_key(1)
    cases = {
        f"normals 2^{n}": lambda m: m.standard_normals(7, 0, size),
        f"matvec n={n}": lambda m: m.hypercube_matvec(v, d, 0.8, n),
        f"paths {args.paths} n=8 t=1": lambda m: m.sample_integrate(energies, 8, 1.0, key, 0, args.paths),
        "ndtri 1e6": lambda m: m.ndtri(np.linspace(1e-9, 1 - 1e-9, 1_000_000)),
    }
    print(f"{'kernel':<28}{'cython s':>11}{'numpy s':>11}{'speedup':>9}  identical")
    for name, call in cases.items():
        tc, oc = best_of(lambda: call(ext), args.repeat)
        tp, op = best_of(lambda: call(py), args.repeat)
        print(f"{name:<28}{tc:>11.4f}{tp:>11.4f}{tp / tc:>9.1f}  {same(oc, op)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
