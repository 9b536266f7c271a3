"""Compiled kernel versus numpy fallback on the batched measurement loop.

    python benchmarks/bench_kernels.py [--n 200000] [--k 9] [--repeat 3]

Both backends consume identical random draws, so the script also checks that
they agree bit for bit before reporting timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cpbtem import _engine
from cpbtem.detector import build_detector
from cpbtem.rng import substream


def bench(backend, dtheta, k, det, threads, repeat, **kw):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = _engine.run_measurements(dtheta, k, det, seed=1, stream=1, threads=threads, backend=backend, **kw)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="measurements")
    ap.add_argument("--k", type=int, default=9)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    det = build_detector(1024, 0.1, substream(0, 2))
    dtheta = np.full(args.n, 0.02)
    scenarios = {
        "elastic": {},
        "noisy": dict(p_inel=0.3, xi_precision=1e-3, epsilon=0.05, p_loss=0.01),
    }
    if "compiled" not in _engine.BACKENDS:
        print("compiled extension not built; only the fallback is available")
    print(f"n={args.n} k={args.k} threads={args.threads} rounds={args.n * args.k}")
    for name, kw in scenarios.items():
        results = {}
        for backend in _engine.BACKENDS:
            t, out = bench(backend, dtheta, args.k, det, args.threads, args.repeat, **kw)
            results[backend] = (t, out)
            print(f"  {name:8s} {backend:9s} {t:8.3f} s  {args.n * args.k / t / 1e6:7.2f} M rounds/s")
        if len(results) == 2:
            (tp, (bp, sp)), (tc, (bc, sc)) = results["python"], results["compiled"]
            same = np.array_equal(bp, bc) and np.allclose(sp, sc, atol=1e-12, equal_nan=True)
            print(f"  {name:8s} speedup {tp / tc:5.1f}x  outputs identical: {same}")


if __name__ == "__main__":
    main()
