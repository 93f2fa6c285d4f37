"""Benchmarks: compiled kernel vs numpy fallback, and decide latency."""

from __future__ import annotations

import argparse
import random
import statistics
import time
from typing import List

import numpy as np

from . import _kernel_py, kernel
from .lattice import decode_abstract, enumerate_abstract_codes
from .policy import ALLOW, DENY, Policy


def _random_codes(n: int, seed: int) -> np.ndarray:
    rng = random.Random(seed)
    pool = list(enumerate_abstract_codes())
    return kernel.as_codes([rng.choice(pool) for _ in range(n)])


def _time(fn, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernel(sizes: List[int]) -> List[dict]:
    rows = []
    for n in sizes:
        a = _random_codes(n, 1)
        b = _random_codes(n, 2)
        py = _time(lambda: _kernel_py.leq_matrix(a, b))
        active = _time(lambda: kernel.leq_matrix(a, b))
        rows.append({
            "n": n,
            "pairs": n * n,
            "python_ms": py * 1000,
            f"{kernel.BACKEND}_ms": active * 1000,
            "speedup": py / active if active else float("inf"),
        })
    return rows


def bench_decide(rule_counts: List[int], queries: int = 2000) -> List[dict]:
    rng = random.Random(7)
    pool = list(enumerate_abstract_codes())
    rows = []
    for n_rules in rule_counts:
        policy = Policy(clock=lambda: 0.0)
        for _ in range(n_rules):
            policy.add_rule(policy.new_rule(
                ALLOW if rng.random() < 0.8 else DENY, decode_abstract(rng.choice(pool))
            ))
        samples = []
        for _ in range(queries):
            phi = decode_abstract(rng.choice(pool))
            start = time.perf_counter()
            policy._decide(phi)
            samples.append((time.perf_counter() - start) * 1000)
        samples.sort()
        rows.append({
            "rules": len(policy.rules),
            "queries": queries,
            "median_ms": statistics.median(samples),
            "p99_ms": samples[int(0.99 * (len(samples) - 1))],
        })
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="leash micro-benchmarks")
    parser.add_argument("--sizes", type=int, nargs="*", default=[256, 1024, 4608])
    parser.add_argument("--rules", type=int, nargs="*", default=[10, 100, 1000])
    parser.add_argument("--queries", type=int, default=2000)
    args = parser.parse_args(argv)

    print(f"active kernel backend: {kernel.BACKEND}")
    print("\npairwise subsumption matrix (python fallback vs active backend)")
    for row in bench_kernel(args.sizes):
        print(
            f"  n={row['n']:>5}  pairs={row['pairs']:>9}  "
            f"python={row['python_ms']:8.2f} ms  "
            f"{kernel.BACKEND}={row[f'{kernel.BACKEND}_ms']:8.2f} ms  "
            f"speedup={row['speedup']:5.1f}x"
        )
    print("\ndecide latency")
    for row in bench_decide(args.rules, args.queries):
        print(
            f"  rules={row['rules']:>5}  median={row['median_ms']:.3f} ms  "
            f"p99={row['p99_ms']:.3f} ms  ({row['queries']} queries)"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
