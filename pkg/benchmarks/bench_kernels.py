"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the two hot kernels (solvability-preserving pop enumeration and the
weighted grid shortest-path field) on identical workloads in both lanes,
then reports per-call times and speedups.
"""

from __future__ import annotations

import argparse
import random
import time

from lumina._kernels import pure

try:
    from lumina._kernels import _cykernels as compiled
except ImportError:
    compiled = None


def make_list_workload(count: int, length: int, rng: random.Random):
    cases = []
    for _ in range(count):
        current = [rng.randrange(6) for _ in range(length)]
        keep = sorted(rng.sample(range(length), length * 2 // 3))
        target = [current[i] for i in keep]
        cases.append((current, target, rng.randrange(0, max(1, length // 4))))
    return cases


def make_grid_workload(count: int, size: int, rng: random.Random):
    cases = []
    for _ in range(count):
        holes = [1 if rng.random() < 0.25 else 0 for _ in range(size * size)]
        origin = rng.randrange(size * size)
        holes[origin] = 0
        cases.append((size, holes, origin))
    return cases


def time_lane(fn, cases, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for case in cases:
            fn(*case)
        best = min(best, time.perf_counter() - start)
    return best / len(cases)


def report(name: str, cases, pure_fn, compiled_fn, repeats: int) -> None:
    t_pure = time_lane(pure_fn, cases, repeats)
    line = f"{name:<34} python {t_pure * 1e6:9.2f} us/call"
    if compiled_fn is not None:
        t_comp = time_lane(compiled_fn, cases, repeats)
        line += f"   cython {t_comp * 1e6:9.2f} us/call   speedup {t_pure / t_comp:5.1f}x"
    print(line)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats (best-of)")
    args = parser.parse_args()

    if compiled is None:
        print("compiled kernels not built (pip install -e . --no-build-isolation); timing pure lane only")
    rng = random.Random(0)

    for length in (12, 24, 48):
        cases = make_list_workload(400, length, rng)
        report(
            f"list_optimal_pops (len={length})",
            cases,
            pure.list_optimal_pops,
            compiled.list_optimal_pops if compiled else None,
            args.repeats,
        )
    for size in (6, 12, 24):
        cases = make_grid_workload(60, size, rng)
        report(
            f"grid_min_cost_to ({size}x{size})",
            cases,
            pure.grid_min_cost_to,
            compiled.grid_min_cost_to if compiled else None,
            args.repeats,
        )

    # sanity: identical outputs on the benchmark workload
    if compiled is not None:
        for case in make_list_workload(50, 16, rng):
            assert pure.list_optimal_pops(*case) == compiled.list_optimal_pops(*case)
        for case in make_grid_workload(10, 8, rng):
            assert pure.grid_min_cost_to(*case) == compiled.grid_min_cost_to(*case)
        print("parity on benchmark workloads: ok")


if __name__ == "__main__":
    main()
