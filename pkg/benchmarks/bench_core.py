#!/usr/bin/env python3
"""Benchmark the compiled core against the numpy fallback.

Times the noise generator and the fused step kernels at ensemble sizes
matching the experiment harness, and checks that the two backends agree.

    python benchmarks/bench_core.py [--chains N] [--repeats R]
"""

import argparse
import time

import numpy as np

from lapd import _core_py as pycore

try:
    from lapd import _core as extcore
except ImportError:
    extcore = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_case(name, make_args, call, n, repeats):
    line = f"{name:<34}"
    results = {}
    for label, core in (("ext", extcore), ("python", pycore)):
        if core is None:
            line += f"  {'-':>10}"
            continue
        args = make_args()
        best = timeit(lambda: call(core, *args), repeats)
        results[label] = best
        rate = n / best / 1e6
        line += f"  {best * 1e3:8.1f}ms ({rate:6.1f}M/s)"
    if len(results) == 2:
        line += f"  x{results['python'] / results['ext']:.1f}"
    print(line)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--chains", type=int, default=100_000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--threads", type=int, default=2)
    args = ap.parse_args()
    n, nt = args.chains, args.threads

    gen = np.random.default_rng(0)
    print(f"{args.chains} chains, {nt} threads; best of {args.repeats}  "
          f"[ext {'available' if extcore else 'MISSING'}]")
    header = f"{'kernel':<34}  {'ext':>20}  {'python':>20}  speedup"
    print(header)
    print("-" * len(header))

    for d in (4, 128):
        out = np.empty((n, d))
        bench_case(f"fill_normals d={d}", lambda: (out,),
                   lambda core, o: core.fill_normals(o, 1, 0, 0, 0, nt),
                   n * d, args.repeats)

    pos0 = gen.normal(size=(n, 4))
    bench_case("lapd_step_quadratic d=4", lambda: (pos0.copy(),),
               lambda core, p: core.lapd_step_quadratic(p, 1.0, 0.004, 0.996, 0.089, 1, 0, nt),
               n * 4, args.repeats)

    for d in (16, 128):
        means = np.zeros((2, d))
        means[0, 0], means[1, 0] = 1.0, -1.0
        offs = np.ascontiguousarray(-0.5 * np.sum(means * means, axis=1))
        start = gen.normal(size=(n, d))
        bench_case(f"lapd_step_mixture K=2 d={d}", lambda: (start.copy(),),
                   lambda core, p: core.lapd_step_mixture(
                       p, means, offs, 5e-4, 0.9995, 0.031, 1, 0, nt),
                   n * d, args.repeats)
        bench_case(f"ula_step_mixture  K=2 d={d}", lambda: (start.copy(),),
                   lambda core, p: core.ula_step_mixture(
                       p, means, offs, 1.0, 1e-3, 0.045, 1, 0, nt),
                   n * d, args.repeats)

    if extcore is not None:
        a = gen.normal(size=(2000, 8))
        b = a.copy()
        extcore.lapd_step_quadratic(a, 1.0, 0.01, 0.99, 0.14, 9, 0, nt)
        pycore.lapd_step_quadratic(b, 1.0, 0.01, 0.99, 0.14, 9, 0, nt)
        print(f"\nbackend agreement (quadratic step): "
              f"{'bit-identical' if np.array_equal(a, b) else 'DIVERGED'}")


if __name__ == "__main__":
    main()
