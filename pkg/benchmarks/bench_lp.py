#!/usr/bin/env python3
"""Benchmark the simplex kernel backends on representative round LPs.

The per-round prediction game dominates a run's cost, and the simplex
pivot loop dominates the game solve, so this is the hot kernel. Sizes
mirror real runs: N grid points (33 for d=1 at h=1/32, 1089 for d=2) and
m free coordinates. Usage:

    python3 benchmarks/bench_lp.py [--repeats 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from omnical._simplex_py import solve_game_lp as solve_py

try:
    from omnical._simplex_cy import solve_game_lp as solve_cy
except ImportError:
    solve_cy = None


def make_instances(n, m, repeats, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(repeats):
        # event-style structure: a few signed indicator blocks over the grid
        fire = (rng.random((6, n)) < 0.5).astype(float)
        delta = rng.normal(scale=0.2, size=(6, m))
        dmat = delta.T @ fire
        grid = rng.random((n, m))
        cost = np.einsum("in,ni->n", dmat, grid)
        out.append((cost, dmat))
    return out


def bench(fn, instances):
    t0 = time.perf_counter()
    pivots = 0
    for cost, dmat in instances:
        _, _, iters = fn(cost, dmat)
        pivots += iters
    return time.perf_counter() - t0, pivots


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    shapes = [(33, 1), (33, 2), (1089, 2), (1089, 3)]
    print(f"{'N':>6} {'m':>3} {'pure-py ms':>12} {'cython ms':>12} {'speedup':>8}")
    for n, m in shapes:
        instances = make_instances(n, m, args.repeats)
        t_py, piv = bench(solve_py, instances)
        if solve_cy is None:
            print(f"{n:>6} {m:>3} {1000 * t_py / args.repeats:>12.3f} {'n/a':>12} {'n/a':>8}")
            continue
        t_cy, piv_cy = bench(solve_cy, instances)
        assert piv == piv_cy, "backends disagreed on pivot counts"
        print(
            f"{n:>6} {m:>3} {1000 * t_py / args.repeats:>12.3f} "
            f"{1000 * t_cy / args.repeats:>12.3f} {t_py / t_cy:>7.1f}x"
        )
    if solve_cy is not None:
        sample = make_instances(1089, 2, 50, seed=9)
        for cost, dmat in sample:
            p1, v1, i1 = solve_py(cost, dmat)
            p2, v2, i2 = solve_cy(cost, dmat)
            assert v1 == v2 and i1 == i2 and np.array_equal(p1, p2)
        print("bit-identical outputs on 50 spot-check instances")


if __name__ == "__main__":
    main()
