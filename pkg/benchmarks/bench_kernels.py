#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-Python fallback.

Times the four kernels on synthetic instances plus one end-to-end counter
(greedy separated sweep on the constant-shift system). Run from the repo
root after installing the package:

    python benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from nadent._kernels import _pure

try:
    from nadent._kernels import _ckernels
except ImportError:
    _ckernels = None


def timed(fn, *args, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_case(name, args_factory, pure_fn, comp_fn, repeat=3):
    args = args_factory()
    t_pure, r_pure = timed(pure_fn, *args, repeat=repeat)
    if comp_fn is None:
        print(f"{name:34s} pure {t_pure*1e3:9.2f} ms   compiled    (unavailable)")
        return
    t_comp, r_comp = timed(comp_fn, *args, repeat=repeat)
    check = _summary(r_pure) == _summary(r_comp)
    speedup = t_pure / t_comp if t_comp > 0 else float("inf")
    print(
        f"{name:34s} pure {t_pure*1e3:9.2f} ms   compiled {t_comp*1e3:9.2f} ms"
        f"   x{speedup:6.1f}   agree={check}"
    )


def _summary(result):
    if isinstance(result, tuple):
        return result[0]
    if isinstance(result, np.ndarray):
        return int(result.sum())
    return result


def make_gather(n, h, seed):
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 10**6, size=(n, n)).astype(np.int64)
    base = np.maximum(base, base.T)
    np.fill_diagonal(base, 0)
    orbits = rng.integers(0, n, size=(h, n)).astype(np.int64)
    return base, orbits


def make_metric(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.integers(1, 50, size=(n, n)).astype(np.int64)
    w = np.minimum(w, w.T)
    np.fill_diagonal(w, 0)
    for k in range(n):
        w = np.minimum(w, w[:, k : k + 1] + w[k : k + 1, :])
    return (w,)

def make_graph(n, p, seed):
    rng = random.Random(seed)
    mat = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                mat[i, j] = mat[j, i] = True
    return mat, 0


def make_cover(m, n, p, seed):
    rng = random.Random(seed)
    mat = np.zeros((m, n), dtype=bool)
    for i in range(m):
        for j in range(n):
            mat[i, j] = rng.random() < p
    mat[0] |= ~mat.any(axis=0)
    return mat, 0


def bench_end_to_end(L, horizons):
    import os
    import subprocess
    import sys

    code = (
        "import time, sys\n"
        "from fractions import Fraction\n"
        "from nadent.nads import full_shift_system\n"
        "from nadent.entropy import separated_growth\n"
        "t0 = time.perf_counter()\n"
        f"sys_ = full_shift_system({L})\n"
        f"t = separated_growth(sys_, range(4, {horizons + 4}), Fraction(1, 4), mode='greedy', dense_cap=1 << {L})\n"
        "print(time.perf_counter() - t0)\n"
    )
    times = {}
    for backend, env_extra in (("pure", {"NADENT_PURE_KERNELS": "1"}), ("compiled", {})):
        env = dict(os.environ)
        env.pop("NADENT_PURE_KERNELS", None)
        env.update(env_extra)
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True
        )
        times[backend] = float(out.stdout.strip())
    speedup = times["pure"] / times["compiled"]
    print(
        f"{'separated sweep, shift L=' + str(L):34s} pure {times['pure']*1e3:9.2f} ms"
        f"   compiled {times['compiled']*1e3:9.2f} ms   x{speedup:6.1f}"
    )


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller instances")
    args = parser.parse_args()

    if _ckernels is None:
        print("note: compiled backend unavailable; showing pure timings only\n")

    n_gather = 800 if args.quick else 2000
    n_tri = 200 if args.quick else 400
    n_clique = 60 if args.quick else 90
    n_cover = 120 if args.quick else 220

    comp = _ckernels
    print(f"{'kernel':34s} {'':>24s} {'':>22s}")
    bench_case(
        f"pairwise_max_gather n={n_gather} h=8",
        lambda: make_gather(n_gather, 8, 1),
        _pure.pairwise_max_gather,
        comp.pairwise_max_gather if comp else None,
    )
    bench_case(
        f"triangle_violation n={n_tri}",
        lambda: make_metric(n_tri, 2),
        _pure.triangle_violation,
        comp.triangle_violation if comp else None,
    )
    bench_case(
        f"max_clique n={n_clique} p=0.6",
        lambda: make_graph(n_clique, 0.6, 3),
        _pure.max_clique,
        comp.max_clique if comp else None,
        repeat=1,
    )
    bench_case(
        f"min_set_cover {n_cover}x{n_cover}",
        lambda: make_cover(n_cover, n_cover, 0.08, 4),
        _pure.min_set_cover,
        comp.min_set_cover if comp else None,
        repeat=1,
    )
    if comp is not None:
        bench_end_to_end(10 if args.quick else 12, 7)


if __name__ == "__main__":
    main()
