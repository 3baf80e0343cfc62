#!/usr/bin/env python3
"""Benchmark the compiled trial kernels against the pure-numpy fallback.

Times the full greedy identification loop and the standalone sphere-QP
solve on both backends and prints steps/second plus the speedup.
"""

import argparse
import time

import numpy as np

from sysid import IdentMode, SphereQp, greedy_identify, solve_sphere_qp
from sysid._accel import kernel
from sysid.harness import random_system


def bench_greedy(horizon, repeats, d=4):
    sys_ = random_system(0, d, d, sigma=1e-2, gamma=1.0)
    mode = IdentMode.with_known_b(sys_.b)
    out = {}
    for backend in ("python", "compiled"):
        if backend == "compiled" and kernel() is None:
            continue
        greedy_identify(sys_, mode, 20, seed=0, backend=backend)  # warm up
        t0 = time.perf_counter()
        for rep in range(repeats):
            greedy_identify(sys_, mode, horizon, seed=rep, backend=backend)
        per_step = (time.perf_counter() - t0) / (repeats * horizon)
        out[backend] = per_step
        print(
            f"greedy loop  [{backend:8s}] {per_step * 1e6:10.2f} us/step  "
            f"({1.0 / per_step:,.0f} steps/s)"
        )
    if len(out) == 2:
        print(f"greedy loop speedup: {out['python'] / out['compiled']:.1f}x")
    return out


def bench_sphere_qp(repeats, m=4):
    rng = np.random.default_rng(1)
    problems = []
    for _ in range(64):
        q = rng.standard_normal((m, m))
        q = (q + q.T) / 2.0
        problems.append((q, rng.standard_normal(m)))
    out = {}
    for backend in ("python", "compiled"):
        if backend == "compiled" and kernel() is None:
            continue
        t0 = time.perf_counter()
        for rep in range(repeats):
            q, b = problems[rep % len(problems)]
            if backend == "python":
                solve_sphere_qp(SphereQp(q=q, b=b, gamma=1.0))
            else:
                kernel().sphere_qp(q, b, 1.0, 1e-10)
        per_call = (time.perf_counter() - t0) / repeats
        out[backend] = per_call
        print(f"sphere QP    [{backend:8s}] {per_call * 1e6:10.2f} us/solve")
    if len(out) == 2:
        print(f"sphere QP speedup:   {out['python'] / out['compiled']:.1f}x")
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--qp-repeats", type=int, default=2000)
    args = parser.parse_args()
    if kernel() is None:
        print("compiled kernels not available; timing the fallback only")
    bench_greedy(args.horizon, args.repeats)
    bench_sphere_qp(args.qp_repeats)


if __name__ == "__main__":
    main()
