#!/usr/bin/env python3
"""Benchmark: compiled kernels vs the pure-Python fallback.

Times the hot kernels on representative workloads and prints a table with
the speedup.  Both backends consume identical counter-based streams, so
the result columns double as an equality check.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from delpotts import _kernels_py as pyk

try:
    from delpotts import _kernels as cyk
except ImportError:
    cyk = None


def timeit(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def random_graph(seed, n, p_edge=0.5):
    rng = np.random.Generator(np.random.Philox(seed))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    keep = [e for e in pairs if rng.random() < p_edge]
    eu = np.array([e[0] for e in keep], dtype=np.int32)
    ev = np.array([e[1] for e in keep], dtype=np.int32)
    probs = 0.1 + 0.8 * rng.random(len(keep))
    return eu, ev, probs


def bench(quick=False):
    scale = 0.2 if quick else 1.0
    rows = []

    # heat bath
    eu, ev, probs = random_graph(1, 12)
    sweeps = int(20_000 * scale)
    boundary = np.ones(12, dtype=np.uint8)

    def hb(mod):
        state = np.zeros(len(eu), dtype=np.uint8)
        return mod.tilted_heat_bath(eu, ev, probs, 2.0, 12, state, sweeps,
                                    0, 42, boundary)[0].sum()
    rows.append(("tilted_heat_bath  (12v graph, %dk sweeps)" % (sweeps // 1000), hb))

    # exact enumeration
    eu2, ev2, probs2 = random_graph(2, 8)
    eu2, ev2, probs2 = eu2[:18], ev2[:18], probs2[:18]
    b2 = np.ones(8, dtype=np.uint8)

    def exact(mod):
        z, m, _ = mod.tilted_exact(eu2, ev2, probs2, 2.0, 8, b2, False)
        return round(z, 6)
    rows.append((f"tilted_exact      ({len(eu2)} edges, 2^{len(eu2)} states)", exact))

    # lattice percolation
    L = 64
    trials = int(400 * scale)

    def mixed(mod):
        return mod.lattice_mixed_trials(L, 0.8, 0.8, trials, 7)
    rows.append((f"lattice_mixed     ({L}x{L}, {trials} trials)", mixed))

    # predicate filter
    rng = np.random.Generator(np.random.Philox(9))
    pts = rng.random((int(200_000 * scale), 8))

    def filters(mod):
        acc = 0
        f = mod.incircle_filtered
        for row in pts:
            acc += f(*row)
        return acc
    rows.append((f"incircle_filtered ({len(pts)} calls)", filters))

    print(f"{'kernel':44s} {'python':>10s} {'cython':>10s} {'speedup':>8s}  match")
    for name, fn in rows:
        t_py, r_py = timeit(lambda: fn(pyk))
        if cyk is None:
            print(f"{name:44s} {t_py * 1e3:9.1f}ms {'n/a':>10s} {'n/a':>8s}")
            continue
        t_cy, r_cy = timeit(lambda: fn(cyk))
        match = "yes" if np.all(np.asarray(r_py) == np.asarray(r_cy)) else "NO"
        print(f"{name:44s} {t_py * 1e3:9.1f}ms {t_cy * 1e3:9.1f}ms "
              f"{t_py / t_cy:7.1f}x  {match}")
    if cyk is None:
        print("\ncompiled backend unavailable; showing fallback timings only")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    bench(args.quick)
