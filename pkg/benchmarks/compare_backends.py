#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the same seeded experiments on both backends, reports wall time and
speedup, and cross-checks that the recorded traces agree. The numba
numbers exclude the one-time JIT compile (first call is warmed up
separately).
"""

import argparse
import time

import numpy as np

from pskip import kernels
from pskip.algorithms import HyperParams, local_dsgd_run, proxskip_run
from pskip.problems import make_logistic, make_quadratic, partition, synthetic_blobs
from pskip.topology import metropolis, ring


def _time(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_case(name, fn, reps, backends):
    rows = []
    traces = {}
    for backend in backends:
        if backend == "numba":
            fn(backend)  # warm the JIT cache before timing
        secs, trace = _time(lambda: fn(backend), reps)
        rows.append((backend, secs))
        traces[backend] = trace
    agree = ""
    if len(traces) == 2:
        diff = float(np.max(np.abs(traces["numpy"].rel_error
                                   - traces["numba"].rel_error)))
        agree = f"max |trace diff| = {diff:.2e}"
    print(f"\n{name}")
    base = rows[0][1]
    for backend, secs in rows:
        speed = f"{base / secs:6.1f}x" if secs > 0 else "   -  "
        print(f"  {backend:<6} {secs * 1e3:10.1f} ms   {speed}  {agree if backend != 'numpy' else ''}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=int, default=20000)
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--d", type=int, default=25)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()

    backends = list(kernels.available_backends())
    print(f"backends: {backends}; default: {kernels.default_backend()}")
    print(f"quadratic: n={args.n}, d={args.d}, T={args.T}; "
          f"logistic: n=10, 2000 samples, d=22, T={args.T // 4}")

    w = metropolis(ring(args.n))
    quad = make_quadratic(args.n, args.d, 1.0, 1.0, seed=1)
    hp = HyperParams(alpha=1e-3, beta=0.5, p=0.5, chi=1.0, T=args.T, seed=3)
    bench_case("proxskip / quadratic",
               lambda b: proxskip_run(quad, w, hp, backend=b),
               args.reps, backends)
    bench_case("local-dsgd / quadratic (K=10)",
               lambda b: local_dsgd_run(quad, w, 1e-3, 10, args.T // 10, 3,
                                        backend=b),
               args.reps, backends)

    ds = synthetic_blobs(2000, 22, seed=7)
    dense = ds.to_dense()
    shards = [(dense[ix], ds.labels[ix].astype(np.float64))
              for ix in partition(ds, 10, seed=7)]
    logit = make_logistic(shards, ("l2", 1.0), 1e-3)
    w10 = metropolis(ring(10))
    hp2 = HyperParams(alpha=1.0 / (2 * logit.L), beta=0.5, p=0.5, chi=1.0,
                      T=args.T // 4, seed=3)
    bench_case("proxskip / logistic",
               lambda b: proxskip_run(logit, w10, hp2, backend=b),
               args.reps, backends)


if __name__ == "__main__":
    main()
