"""Geometric operations shared by every pipeline stage.

Wrappers here own validation, ordering, and tie-break policy; the numeric
inner loops live in the kernel backend (compiled or pure Python).
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from screencoder.errors import DegenerateFitError, FullCoverageError, GeometryError
from screencoder.geometry._backend import BACKEND, kernels
from screencoder.geometry.types import AffineTransform, Rect

__all__ = [
    "BACKEND",
    "iou",
    "ciou",
    "nms_per_class",
    "max_empty_rect",
    "fit_affine",
    "hungarian_min_cost",
]


def iou(a: Rect, b: Rect) -> float:
    """Intersection area over union area, in [0, 1]."""
    return kernels.iou_kernel(a.x, a.y, a.w, a.h, b.x, b.y, b.w, b.h)


def ciou(a: Rect, b: Rect) -> float:
    """Complete IoU in (-2, 1]: IoU minus normalized center-distance and
    aspect-ratio penalties. Equals 1 only for identical boxes."""
    return kernels.ciou_kernel(a.x, a.y, a.w, a.h, b.x, b.y, b.w, b.h)


def nms_per_class(
    regions: Iterable[tuple[Rect, str, float]],
    iou_threshold: float = 0.5,
) -> list[tuple[Rect, str, float]]:
    """Class-specific non-maximum suppression.

    Within each label, keeps the most confident boxes and drops any box
    whose IoU with an already kept same-label box exceeds the threshold.
    Boxes with different labels never suppress each other. Output is
    ordered by descending confidence, then input order.
    """
    items = list(regions)
    if not (0.0 < iou_threshold < 1.0):
        raise GeometryError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    for rect, label, conf in items:
        if not (0.0 <= conf <= 1.0):
            raise GeometryError(f"confidence outside [0, 1] for {label!r}: {conf}")
    if not items:
        return []

    by_label: dict[str, list[int]] = {}
    for idx, (_, label, _) in enumerate(items):
        by_label.setdefault(label, []).append(idx)

    keep_global = [False] * len(items)
    for indices in by_label.values():
        boxes = np.array([items[i][0].as_tuple() for i in indices], dtype=np.float64)
        order = np.array(
            sorted(range(len(indices)), key=lambda k: (-items[indices[k]][2], k)),
            dtype=np.int64,
        )
        kept = kernels.nms_kernel(boxes, order, iou_threshold)
        for local, flag in enumerate(kept):
            if flag:
                keep_global[indices[local]] = True

    survivors = [i for i, f in enumerate(keep_global) if f]
    survivors.sort(key=lambda i: (-items[i][2], i))
    return [items[i] for i in survivors]


def max_empty_rect(page: Rect, obstacles: Sequence[Rect]) -> Rect:
    """Maximum-area axis-aligned rectangle inside ``page`` whose interior
    avoids every obstacle interior.

    Exact over the grid induced by obstacle edges (coordinate compression).
    Ties break to the topmost, then leftmost top-left corner. Raises
    FullCoverageError when the obstacles blanket the page.
    """
    clipped = []
    for obs in obstacles:
        c = obs.clip_to(page)
        if c is not None:
            clipped.append(c)

    xs = sorted({page.x, page.x2, *(v for o in clipped for v in (o.x, o.x2))})
    ys = sorted({page.y, page.y2, *(v for o in clipped for v in (o.y, o.y2))})
    xs = [v for v in xs if page.x <= v <= page.x2]
    ys = [v for v in ys if page.y <= v <= page.y2]

    ncols = len(xs) - 1
    nrows = len(ys) - 1
    occ = np.zeros((nrows, ncols), dtype=np.uint8)
    for o in clipped:
        # Cell boundaries include every obstacle edge, so a cell is either
        # fully inside an obstacle or disjoint from it: test cell centers.
        for i in range(nrows):
            cy = (ys[i] + ys[i + 1]) / 2.0
            if not (o.y < cy < o.y2):
                continue
            for j in range(ncols):
                cx = (xs[j] + xs[j + 1]) / 2.0
                if o.x < cx < o.x2:
                    occ[i, j] = 1

    area, li, ti, ri, bi = kernels.max_rect_kernel(
        np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64), occ
    )
    if area <= 0.0:
        raise FullCoverageError("obstacles cover the entire page")
    return Rect(xs[li], ys[ti], xs[ri] - xs[li], ys[bi] - ys[ti])


def fit_affine(
    src_points: Sequence[tuple[float, float]],
    dst_points: Sequence[tuple[float, float]],
) -> tuple[AffineTransform, float]:
    """Least-squares fit of x' = sx*x + ox, y' = sy*y + oy.

    Returns the transform and the residual sum of squares. Raises
    DegenerateFitError when a scale is unidentifiable (no spread on an
    axis) or comes out non-positive.
    """
    if len(src_points) != len(dst_points):
        raise DegenerateFitError("src and dst point lists differ in length")
    n = len(src_points)
    if n < 2:
        raise DegenerateFitError(f"need at least 2 point pairs, got {n}")

    def solve_axis(src: list[float], dst: list[float]) -> tuple[float, float, float]:
        mean_s = math.fsum(src) / n
        mean_d = math.fsum(dst) / n
        sxx = math.fsum((s - mean_s) ** 2 for s in src)
        if sxx == 0.0:
            raise DegenerateFitError("all source points share one coordinate; scale unidentifiable")
        sxy = math.fsum((s - mean_s) * (d - mean_d) for s, d in zip(src, dst))
        scale = sxy / sxx
        offset = mean_d - scale * mean_s
        resid = math.fsum((scale * s + offset - d) ** 2 for s, d in zip(src, dst))
        return scale, offset, resid

    sx, ox, rx = solve_axis([p[0] for p in src_points], [p[0] for p in dst_points])
    sy, oy, ry = solve_axis([p[1] for p in src_points], [p[1] for p in dst_points])
    if sx <= 0.0 or sy <= 0.0:
        raise DegenerateFitError(f"fitted scales must be positive, got ({sx}, {sy})")
    return AffineTransform(sx, sy, ox, oy), rx + ry


def hungarian_min_cost(costs) -> list[tuple[int, int]]:
    """Minimum-cost one-to-one assignment of min(rows, cols) pairs.

    Accepts any 2D array-like of finite costs (rectangular allowed).
    Returns (row, col) pairs sorted lexicographically.
    """
    mat = np.asarray(costs, dtype=np.float64)
    if mat.ndim != 2:
        raise GeometryError(f"cost matrix must be 2D, got shape {mat.shape}")
    n, m = mat.shape
    if n == 0 or m == 0:
        return []
    if not np.isfinite(mat).all():
        raise GeometryError("cost matrix entries must be finite")

    if n <= m:
        assign = kernels.hungarian_kernel(np.ascontiguousarray(mat.reshape(-1)), n, m)
        pairs = [(i, int(c)) for i, c in enumerate(assign)]
    else:
        assign = kernels.hungarian_kernel(np.ascontiguousarray(mat.T.reshape(-1)), m, n)
        pairs = [(int(r), j) for j, r in enumerate(assign)]
    pairs.sort()
    return pairs
