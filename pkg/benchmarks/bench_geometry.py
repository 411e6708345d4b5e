#!/usr/bin/env python3
"""Benchmark the compiled geometry kernels against the pure-Python fallback.

Runs the same workloads through both kernel modules and prints a timing
table. Usage:

    python benchmarks/bench_geometry.py [--quick]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from screencoder.geometry import _pykernels

try:
    from screencoder.geometry import _kernels
except ImportError:
    _kernels = None


def _rand_boxes(rng: random.Random, n: int) -> np.ndarray:
    out = np.empty((n, 4))
    for i in range(n):
        w = rng.uniform(1, 60)
        h = rng.uniform(1, 60)
        out[i] = (rng.uniform(0, 100 - w), rng.uniform(0, 100 - h), w, h)
    return out


def bench_pairwise(kernels, boxes: np.ndarray) -> float:
    fn = kernels.ciou_kernel
    start = time.perf_counter()
    n = len(boxes)
    for i in range(n):
        a = boxes[i]
        for j in range(i + 1, n):
            b = boxes[j]
            fn(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3])
    return time.perf_counter() - start


def bench_nms(kernels, boxes: np.ndarray, rounds: int) -> float:
    order = np.arange(len(boxes), dtype=np.int64)
    start = time.perf_counter()
    for _ in range(rounds):
        kernels.nms_kernel(boxes, order, 0.5)
    return time.perf_counter() - start


def bench_max_rect(kernels, rng: random.Random, grid: int, rounds: int) -> float:
    xs = np.linspace(0.0, 1000.0, grid + 1)
    ys = np.linspace(0.0, 1000.0, grid + 1)
    occ = (np.random.default_rng(7).random((grid, grid)) < 0.25).astype(np.uint8)
    start = time.perf_counter()
    for _ in range(rounds):
        kernels.max_rect_kernel(xs, ys, occ)
    return time.perf_counter() - start


def bench_hungarian(kernels, rng: random.Random, size: int, rounds: int) -> float:
    mats = [
        np.ascontiguousarray(
            np.random.default_rng(k).uniform(-1, 1, size * size)
        )
        for k in range(rounds)
    ]
    start = time.perf_counter()
    for flat in mats:
        kernels.hungarian_kernel(flat, size, size)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    rng = random.Random(42)
    pair_n = 300 if args.quick else 700
    nms_n, nms_rounds = (300, 5) if args.quick else (1000, 10)
    grid, grid_rounds = (40, 5) if args.quick else (80, 10)
    hung_size, hung_rounds = (40, 5) if args.quick else (80, 10)

    boxes_pair = _rand_boxes(rng, pair_n)
    boxes_nms = _rand_boxes(rng, nms_n)

    workloads = [
        (f"ciou pairwise ({pair_n} boxes)", lambda k: bench_pairwise(k, boxes_pair)),
        (f"nms ({nms_n} boxes x{nms_rounds})", lambda k: bench_nms(k, boxes_nms, nms_rounds)),
        (f"max_rect ({grid}x{grid} grid x{grid_rounds})",
         lambda k: bench_max_rect(k, rng, grid, grid_rounds)),
        (f"hungarian ({hung_size}x{hung_size} x{hung_rounds})",
         lambda k: bench_hungarian(k, rng, hung_size, hung_rounds)),
    ]

    print(f"{'workload':<36} {'python':>10} {'cython':>10} {'speedup':>9}")
    print("-" * 69)
    for name, fn in workloads:
        py = fn(_pykernels)
        if _kernels is not None:
            cy = fn(_kernels)
            print(f"{name:<36} {py:>9.3f}s {cy:>9.3f}s {py / cy:>8.1f}x")
        else:
            print(f"{name:<36} {py:>9.3f}s {'n/a':>10} {'n/a':>9}")
    if _kernels is None:
        print("\ncompiled kernels not built; run `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
