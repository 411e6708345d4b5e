import itertools
import math
import random

import numpy as np
import pytest

from conftest import rand_rect
from screencoder.errors import DegenerateFitError, FullCoverageError, GeometryError
from screencoder.geometry import (
    AffineTransform,
    NormRect,
    Rect,
    ciou,
    fit_affine,
    hungarian_min_cost,
    iou,
    max_empty_rect,
    nms_per_class,
)


# ---------------------------------------------------------------- oracles

def oracle_max_rect(page: Rect, obstacles: list[Rect]) -> float:
    """O(k^4) enumeration over compressed coordinates; returns best area.

    Emptiness is tested by direct rectangle-overlap checks against every
    obstacle, independent of the implementation's occupancy-grid scan.
    """
    xs = sorted({page.x, page.x2, *(v for o in obstacles for v in (o.x, o.x2))})
    ys = sorted({page.y, page.y2, *(v for o in obstacles for v in (o.y, o.y2))})
    xs = [v for v in xs if page.x <= v <= page.x2]
    ys = [v for v in ys if page.y <= v <= page.y2]
    best = 0.0
    for li, ri in itertools.combinations(range(len(xs)), 2):
        for ti, bi in itertools.combinations(range(len(ys)), 2):
            x1, x2, y1, y2 = xs[li], xs[ri], ys[ti], ys[bi]
            blocked = any(
                min(x2, o.x2) - max(x1, o.x) > 1e-12 and min(y2, o.y2) - max(y1, o.y) > 1e-12
                for o in obstacles
            )
            if not blocked:
                best = max(best, (x2 - x1) * (y2 - y1))
    return best


def oracle_assignment_cost(mat: np.ndarray) -> float:
    """Exhaustive minimum over all permutations (rows <= cols)."""
    n, m = mat.shape
    if n > m:
        return oracle_assignment_cost(mat.T)
    return min(
        sum(mat[i, c] for i, c in enumerate(perm))
        for perm in itertools.permutations(range(m), n)
    )


def oracle_nms_single_class(items, threshold):
    """Reference greedy suppression on a pre-sorted candidate list."""
    ranked = sorted(range(len(items)), key=lambda i: (-items[i][2], i))
    kept = []
    for i in ranked:
        if all(iou(items[i][0], items[j][0]) <= threshold for j in kept):
            kept.append(i)
    return sorted(kept)


# ------------------------------------------------------------------- iou

def test_iou_identity():
    r = Rect(3, 4, 10, 6)
    assert iou(r, r) == 1.0


def test_iou_disjoint():
    assert iou(Rect(0, 0, 5, 5), Rect(10, 10, 5, 5)) == 0.0


def test_iou_hand_computed():
    # intersection 1, union 4 + 4 - 1 = 7
    assert iou(Rect(0, 0, 2, 2), Rect(1, 1, 2, 2)) == pytest.approx(1 / 7, abs=1e-12)


def test_iou_symmetric_and_bounded():
    rng = random.Random(11)
    for _ in range(500):
        a, b = rand_rect(rng), rand_rect(rng)
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0
        if a != b:
            assert v < 1.0


# ------------------------------------------------------------------ ciou

def test_ciou_identity():
    rng = random.Random(5)
    for _ in range(50):
        r = rand_rect(rng)
        assert ciou(r, r) == pytest.approx(1.0, abs=1e-12)


def test_ciou_disjoint_same_shape_negative():
    a = Rect(0, 0, 10, 10)
    b = Rect(50, 50, 10, 10)
    assert ciou(a, b) < 0.0


def test_ciou_below_iou_on_offset_pair():
    a, b = Rect(0, 0, 2, 2), Rect(1, 1, 2, 2)
    assert ciou(a, b) < iou(a, b)


def test_ciou_never_exceeds_iou():
    rng = random.Random(23)
    for _ in range(2000):
        a, b = rand_rect(rng), rand_rect(rng)
        assert ciou(a, b) <= iou(a, b) + 1e-12
        assert -2.0 < ciou(a, b) <= 1.0


def test_ciou_monotone_in_center_distance():
    # Small box sliding inside a big one: enclosing box (hence c) fixed,
    # IoU and aspect term fixed, so ciou must strictly decrease with rho.
    big = Rect(0, 0, 40, 20)
    prev = None
    for t in range(9):
        cx = 20 + t * 2.0
        small = Rect(cx - 1.5, 9, 3, 2)
        assert big.contains(small)
        val = ciou(big, small)
        if prev is not None:
            assert val < prev
        prev = val


# ------------------------------------------------------------------- nms

def test_nms_exact_duplicate_suppressed():
    box = Rect(0, 0, 100, 30)
    out = nms_per_class([(box, "navigation", 0.9), (box, "navigation", 0.7)])
    assert out == [(box, "navigation", 0.9)]


def test_nms_is_class_specific():
    box = Rect(0, 0, 100, 30)
    out = nms_per_class([(box, "header", 0.8), (box, "sidebar", 0.6)])
    assert len(out) == 2


def test_nms_chain_matches_reference():
    rng = random.Random(99)
    for _ in range(200):
        items = []
        for _ in range(rng.randint(2, 6)):
            base = rand_rect(rng)
            items.append((base, "nav", round(rng.random(), 3)))
        thr = rng.uniform(0.2, 0.8)
        kept = nms_per_class(items, thr)
        expected = oracle_nms_single_class(items, thr)
        got = sorted(items.index(k) for k in kept)
        assert got == expected


def test_nms_output_order_and_invariants():
    rng = random.Random(7)
    labels = ["header", "sidebar", "navigation"]
    for _ in range(100):
        items = [
            (rand_rect(rng), rng.choice(labels), round(rng.random(), 3))
            for _ in range(rng.randint(0, 10))
        ]
        thr = 0.5
        out = nms_per_class(items, thr)
        confs = [c for _, _, c in out]
        assert confs == sorted(confs, reverse=True)
        for (ra, la, _), (rb, lb, _) in itertools.combinations(out, 2):
            if la == lb:
                assert iou(ra, rb) <= thr
        # every input is kept or dominated by a kept same-label box
        for rect, label, conf in items:
            if (rect, label, conf) in out:
                continue
            assert any(
                lb == label and cb >= conf and iou(rect, rb) > thr
                for rb, lb, cb in out
            )


def test_nms_threshold_validation():
    with pytest.raises(GeometryError):
        nms_per_class([(Rect(0, 0, 1, 1), "x", 0.5)], iou_threshold=1.0)


# --------------------------------------------------------- max_empty_rect

def test_max_rect_no_obstacles_returns_page():
    page = Rect(0, 0, 640, 480)
    assert max_empty_rect(page, []) == page


def test_max_rect_header_strip():
    page = Rect(0, 0, 1000, 800)
    got = max_empty_rect(page, [Rect(0, 0, 1000, 80)])
    assert got == Rect(0, 80, 1000, 720)


def test_max_rect_full_coverage_error():
    page = Rect(0, 0, 100, 100)
    with pytest.raises(FullCoverageError):
        max_empty_rect(page, [Rect(0, 0, 100, 100)])


def test_max_rect_matches_bruteforce_oracle():
    rng = random.Random(42)
    page = Rect(0, 0, 100, 100)
    for _ in range(120):
        obstacles = [rand_rect(rng) for _ in range(rng.randint(1, 5))]
        got = max_empty_rect(page, obstacles)
        assert got.area == oracle_max_rect(page, obstacles)
        for o in obstacles:
            ix = min(got.x2, o.x2) - max(got.x, o.x)
            iy = min(got.y2, o.y2) - max(got.y, o.y)
            assert ix <= 1e-9 or iy <= 1e-9


def test_max_rect_tie_breaks_topmost_then_leftmost():
    page = Rect(0, 0, 100, 100)
    # Vertical wall splits the page into two equal halves: tie on area,
    # the left one has the smaller left edge.
    got = max_empty_rect(page, [Rect(48, 0, 4, 100)])
    assert got == Rect(0, 0, 48, 100)
    # Horizontal wall: top half wins the tie.
    got = max_empty_rect(page, [Rect(0, 48, 100, 4)])
    assert got == Rect(0, 0, 100, 48)


# -------------------------------------------------------------- fit_affine

def test_fit_affine_identity():
    pts = [(0.0, 0.0), (10.0, 0.0), (0.0, 5.0), (10.0, 5.0)]
    tf, resid = fit_affine(pts, pts)
    assert tf == AffineTransform(1.0, 1.0, 0.0, 0.0)
    assert resid == pytest.approx(0.0, abs=1e-12)


def test_fit_affine_scale_and_offset():
    src = [(0.0, 0.0), (10.0, 0.0), (0.0, 5.0), (10.0, 5.0)]
    dst = [(2 * x + 10, 2 * y + 20) for x, y in src]
    tf, resid = fit_affine(src, dst)
    assert tf.scale_x == pytest.approx(2.0, abs=1e-9)
    assert tf.scale_y == pytest.approx(2.0, abs=1e-9)
    assert tf.offset_x == pytest.approx(10.0, abs=1e-9)
    assert tf.offset_y == pytest.approx(20.0, abs=1e-9)
    assert resid == pytest.approx(0.0, abs=1e-9)


def test_fit_affine_noisy_matches_lstsq_oracle():
    rng = random.Random(3)
    for _ in range(50):
        n = rng.randint(3, 12)
        src = [(rng.uniform(0, 50), rng.uniform(0, 50)) for _ in range(n)]
        sx, sy = rng.uniform(0.5, 3), rng.uniform(0.5, 3)
        ox, oy = rng.uniform(-20, 20), rng.uniform(-20, 20)
        dst = [
            (sx * x + ox + rng.gauss(0, 0.5), sy * y + oy + rng.gauss(0, 0.5))
            for x, y in src
        ]
        if len({x for x, _ in src}) < 2 or len({y for _, y in src}) < 2:
            continue
        try:
            tf, resid = fit_affine(src, dst)
        except DegenerateFitError:
            continue
        # independent normal-equation solve per axis
        expected_resid = 0.0
        for axis in (0, 1):
            a = np.array([[p[axis], 1.0] for p in src])
            b = np.array([p[axis] for p in dst])
            sol, res, _, _ = np.linalg.lstsq(a, b, rcond=None)
            expected_resid += float(res[0]) if len(res) else 0.0
            got_scale = tf.scale_x if axis == 0 else tf.scale_y
            got_off = tf.offset_x if axis == 0 else tf.offset_y
            assert got_scale == pytest.approx(sol[0], abs=1e-9)
            assert got_off == pytest.approx(sol[1], abs=1e-9)
        assert resid == pytest.approx(expected_resid, abs=1e-9)


def test_fit_affine_degenerate_configurations():
    with pytest.raises(DegenerateFitError):
        fit_affine([(5.0, 0.0), (5.0, 10.0)], [(1.0, 2.0), (3.0, 4.0)])
    with pytest.raises(DegenerateFitError):
        fit_affine([(0.0, 0.0)], [(0.0, 0.0)])


def test_fit_affine_exact_recovery_relative_error():
    rng = random.Random(17)
    for _ in range(100):
        sx, sy = rng.uniform(0.2, 5), rng.uniform(0.2, 5)
        ox, oy = rng.uniform(-100, 100), rng.uniform(-100, 100)
        src = [(rng.uniform(0, 200), rng.uniform(0, 200)) for _ in range(4)]
        if len({x for x, _ in src}) < 2 or len({y for _, y in src}) < 2:
            continue
        dst = [(sx * x + ox, sy * y + oy) for x, y in src]
        tf, _ = fit_affine(src, dst)
        assert abs(tf.scale_x - sx) / sx < 1e-6
        assert abs(tf.scale_y - sy) / sy < 1e-6


# ------------------------------------------------------ hungarian_min_cost

def test_hungarian_single_cell():
    assert hungarian_min_cost([[3.5]]) == [(0, 0)]


def test_hungarian_diagonal_optimum():
    mat = [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
    pairs = hungarian_min_cost(mat)
    assert pairs == [(0, 0), (1, 1), (2, 2)]


def test_hungarian_matches_bruteforce():
    rng = random.Random(2024)
    for _ in range(100):
        mat = np.array([[rng.uniform(-5, 5) for _ in range(6)] for _ in range(6)])
        pairs = hungarian_min_cost(mat)
        total = sum(mat[r, c] for r, c in pairs)
        assert total == pytest.approx(oracle_assignment_cost(mat), abs=1e-9)


def test_hungarian_rectangular_shapes():
    rng = random.Random(31)
    for rows, cols in [(2, 5), (5, 2), (1, 4), (4, 1), (3, 7)]:
        mat = np.array([[rng.uniform(0, 9) for _ in range(cols)] for _ in range(rows)])
        pairs = hungarian_min_cost(mat)
        assert len(pairs) == min(rows, cols)
        assert len({r for r, _ in pairs}) == len(pairs)
        assert len({c for _, c in pairs}) == len(pairs)
        assert pairs == sorted(pairs)
        total = sum(mat[r, c] for r, c in pairs)
        assert total == pytest.approx(oracle_assignment_cost(mat), abs=1e-9)


def test_hungarian_rejects_non_finite():
    with pytest.raises(GeometryError):
        hungarian_min_cost([[math.inf, 1.0], [1.0, 0.0]])


def test_hungarian_empty():
    assert hungarian_min_cost(np.zeros((0, 3))) == []


# -------------------------------------------------------------- rect types

def test_rect_validation():
    with pytest.raises(GeometryError):
        Rect(0, 0, 0, 5)
    with pytest.raises(GeometryError):
        Rect(-1, 0, 5, 5)
    with pytest.raises(GeometryError):
        Rect(0, 0, math.nan, 5)


def test_normrect_validation_and_roundtrip():
    with pytest.raises(GeometryError):
        NormRect(0.5, 0.0, 0.6, 0.1)
    n = NormRect.from_pixels(Rect(100, 50, 300, 200), 1000, 800)
    assert n == NormRect(0.1, 0.0625, 0.3, 0.25)
    back = n.to_pixels(1000, 800)
    assert back.x == pytest.approx(100, abs=0.5)
    assert back.y == pytest.approx(50, abs=0.5)
    assert back.w == pytest.approx(300, abs=0.5)
    assert back.h == pytest.approx(200, abs=0.5)
