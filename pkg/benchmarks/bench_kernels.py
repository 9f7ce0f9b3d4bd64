#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy twins.

Each hot kernel in the package has two implementations selected at import
time by the VIDFEAT_NUMBA environment flag; this script calls both sides
directly, checks they agree, and prints a speedup table. Run after any
kernel change:

    python benchmarks/bench_kernels.py [--repeat 5] [--json OUT.json]
"""

import argparse
import json
import time

import numpy as np

from vidfeat import accel


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_score_map(rng, repeat):
    from vidfeat.detector import _CX, _CY, _score_map_jit, _score_map_np

    data = rng.integers(0, 256, (480, 640), dtype=np.uint8)
    mask = np.ones((480, 640), np.uint8)
    _score_map_jit(data, 40, mask, _CX, _CY)  # compile
    ref = _score_map_np(data, 40, mask)
    assert np.array_equal(_score_map_jit(data, 40, mask, _CX, _CY), ref)
    return (
        best_of(lambda: _score_map_jit(data, 40, mask, _CX, _CY), repeat),
        best_of(lambda: _score_map_np(data, 40, mask), repeat),
    )


def bench_describe(rng, repeat):
    from vidfeat.descriptor import (
        _describe_batch_jit,
        _describe_batch_np,
        _pair_arrays,
        integral_image,
    )
    from vidfeat.pattern import default_pattern

    pattern = default_pattern()
    data = rng.integers(0, 256, (480, 640), dtype=np.uint8)
    sat = integral_image(data)
    n = 2000
    kx = rng.uniform(40, 600, n)
    ky = rng.uniform(40, 440, n)
    sg = rng.uniform(1.0, 4.0, n)
    th = rng.uniform(-3.1, 3.1, n)
    si, sj, *_ = _pair_arrays(pattern)
    args = (sat, 640, 480, kx, ky, sg, th, pattern.points, pattern.radii)
    _describe_batch_jit(*args, si, sj)  # compile
    assert np.array_equal(
        _describe_batch_jit(*args, si, sj), _describe_batch_np(*args[:7], pattern)
    )
    return (
        best_of(lambda: _describe_batch_jit(*args, si, sj), repeat),
        best_of(lambda: _describe_batch_np(*args[:7], pattern), repeat),
    )


def bench_hamming(rng, repeat):
    from vidfeat.matching import _POPCOUNT, _hamming_matrix_jit, _hamming_matrix_np

    q = rng.integers(0, 256, (1500, 64), dtype=np.uint8)
    r = rng.integers(0, 256, (600, 64), dtype=np.uint8)
    _hamming_matrix_jit(q, r, _POPCOUNT)  # compile
    assert np.array_equal(_hamming_matrix_jit(q, r, _POPCOUNT), _hamming_matrix_np(q, r))
    return (
        best_of(lambda: _hamming_matrix_jit(q, r, _POPCOUNT), repeat),
        best_of(lambda: _hamming_matrix_np(q, r), repeat),
    )


def bench_block_search(rng, repeat):
    from vidfeat.temporal import _cached_offsets, _coarse_search_jit, _coarse_search_np

    frame = rng.integers(0, 256, (480, 640), dtype=np.uint8)
    offs = _cached_offsets(12.0, 2.0)
    patches = [
        np.ascontiguousarray(frame[y : y + 16, x : x + 16])
        for x, y in zip(rng.integers(20, 600, 200), rng.integers(20, 440, 200))
    ]
    moved = np.roll(frame, (3, 5), axis=(0, 1))
    _coarse_search_jit(patches[0], moved, 100, 100, offs, 1000.0)  # compile

    def run(fn):
        for i, p in enumerate(patches):
            fn(p, moved, 20 + i, 20 + i % 400, offs, 1000.0)

    a = _coarse_search_jit(patches[0], moved, 100, 100, offs, 1000.0)
    b = _coarse_search_np(patches[0], moved, 100, 100, offs, 1000.0)
    assert (int(a[0]), int(a[1]), bool(a[2])) == b
    return (
        best_of(lambda: run(_coarse_search_jit), repeat),
        best_of(lambda: run(_coarse_search_np), repeat),
    )


BENCHES = {
    "corner score map (VGA)": bench_score_map,
    "descriptor batch (2000 kps)": bench_describe,
    "hamming matrix (1500x600)": bench_hamming,
    "block search (200 patches)": bench_block_search,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write results to this path")
    args = parser.parse_args()

    if not accel.NUMBA_AVAILABLE:
        print("numba is not importable; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':32s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, bench in BENCHES.items():
        t_jit, t_np = bench(rng, args.repeat)
        rows.append({"kernel": name, "numba_s": t_jit, "numpy_s": t_np,
                     "speedup": t_np / t_jit})
        print(f"{name:32s} {t_jit * 1e3:8.2f}ms {t_np * 1e3:8.2f}ms "
              f"{t_np / t_jit:7.1f}x")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=2)
        print(f"wrote {args.json}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
