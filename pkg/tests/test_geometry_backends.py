"""Cross-check the compiled kernels against the pure-Python fallback."""

import random

import numpy as np
import pytest

from conftest import rand_rect
from screencoder.geometry import _pykernels

_kernels = pytest.importorskip(
    "screencoder.geometry._kernels", reason="compiled kernels not built"
)


def test_scalar_kernels_agree():
    rng = random.Random(1)
    for _ in range(2000):
        a, b = rand_rect(rng), rand_rect(rng)
        args = (*a.as_tuple(), *b.as_tuple())
        assert _kernels.iou_kernel(*args) == _pykernels.iou_kernel(*args)
        assert _kernels.ciou_kernel(*args) == pytest.approx(
            _pykernels.ciou_kernel(*args), abs=1e-14
        )


def test_nms_kernel_agrees():
    rng = random.Random(2)
    for _ in range(200):
        n = rng.randint(1, 12)
        boxes = np.array([rand_rect(rng).as_tuple() for _ in range(n)])
        order = np.array(rng.sample(range(n), n), dtype=np.int64)
        thr = rng.uniform(0.1, 0.9)
        assert _kernels.nms_kernel(boxes, order, thr) == _pykernels.nms_kernel(
            boxes, order, thr
        )


def test_max_rect_kernel_agrees():
    rng = random.Random(3)
    for _ in range(200):
        nx = rng.randint(2, 8)
        ny = rng.randint(2, 8)
        xs = np.array(sorted(rng.sample(range(101), nx)), dtype=np.float64)
        ys = np.array(sorted(rng.sample(range(101), ny)), dtype=np.float64)
        occ = np.array(
            [[rng.random() < 0.4 for _ in range(nx - 1)] for _ in range(ny - 1)],
            dtype=np.uint8,
        )
        assert _kernels.max_rect_kernel(xs, ys, occ) == _pykernels.max_rect_kernel(
            xs, ys, occ
        )


def test_hungarian_kernel_agrees():
    rng = random.Random(4)
    for _ in range(200):
        n = rng.randint(1, 7)
        m = rng.randint(n, 8)
        flat = np.array([rng.uniform(-9, 9) for _ in range(n * m)])
        assert _kernels.hungarian_kernel(flat, n, m) == _pykernels.hungarian_kernel(
            flat, n, m
        )
