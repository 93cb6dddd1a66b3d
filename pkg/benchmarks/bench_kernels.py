"""Time every integer kernel under both backends on acceptance-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Numba compile time is excluded (one warm-up call per kernel).  Results are
also compared for equality, so a run doubles as a parity check.
"""

from __future__ import annotations

import argparse
import time
from itertools import combinations

import numpy as np

from groupoid_lab import _kernels
from groupoid_lab.group_words import FreeGroup, ball, shortlex
from groupoid_lab.sft_groupoid import all_bisections


def folner_inputs(max_size):
    F = FreeGroup(2)
    B = F.generators()
    cand = shortlex(ball(F, 2))
    targets = cand + [g for g in shortlex(ball(F, 3)) if g.length > 2]
    idx = {g: i for i, g in enumerate(targets)}
    table = np.array([[idx[b * k] for k in cand] for b in B], dtype=np.int64)
    return table, len(targets), max_size


def sweep_inputs(j):
    F = FreeGroup(2)
    indices = shortlex(ball(F, 2))
    gammas = shortlex(ball(F, 2))
    universe = shortlex(ball(F, 4))
    uid = {g: i for i, g in enumerate(universe)}
    trans = np.array([[uid[g.inverse() * t] for t in indices] for g in gammas], dtype=np.int64)
    combos = np.array(list(combinations(range(len(indices)), j)), dtype=np.int64).reshape(-1, j)
    bis = list(all_bisections(2, 3, 1, reduce_inverse=True))
    len_u = np.array([len(b.u) for b in bis], dtype=np.int64)
    len_v = np.array([len(b.v) for b in bis], dtype=np.int64)
    return trans, combos, len_u, len_v


def cases(quick):
    k = _kernels.impl("tail_bounds", "numpy")(3, 3 if quick else 4)
    rng = np.random.default_rng(0)
    starts = rng.integers(0, 4000, 2000).astype(np.int64)
    return [
        ("cylinder_indicator", (starts, np.full(2000, 64, dtype=np.int64), 4096)),
        ("folner_subset_min", folner_inputs(4 if quick else 6)),
        ("interval_boundary_counts", (np.array([1, -1], dtype=np.int64), 10_000)),
        ("invariance_sweep", sweep_inputs(2)),
        ("tail_bounds", (3, 4)),
        ("tail_axiom_violations", (k,)),
    ]


def same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args()
    print(f"{'kernel':28s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  equal")
    for name, inputs in cases(args.quick):
        results, times = {}, {}
        for backend in ("numba", "numpy"):
            fn = _kernels.impl(name, backend)
            results[backend] = fn(*inputs)  # warm-up / JIT
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                fn(*inputs)
                best = min(best, time.perf_counter() - t0)
            times[backend] = best
        ratio = times["numpy"] / times["numba"] if times["numba"] else float("inf")
        print(f"{name:28s} {times['numba']:10.4f} {times['numpy']:10.4f} {ratio:8.1f}x  "
              f"{same(results['numba'], results['numpy'])}")


if __name__ == "__main__":
    main()
