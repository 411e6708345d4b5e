"""Pure-Python geometry kernels.

Fallback used when the compiled extension is unavailable. Signatures and
tie-break rules match ``_kernels.pyx`` exactly; the test suite cross-checks
both backends on identical inputs.
"""

from __future__ import annotations

import math

IMPLEMENTATION = "python"


def iou_kernel(ax, ay, aw, ah, bx, by, bw, bh):
    ix = min(ax + aw, bx + bw) - max(ax, bx)
    if ix <= 0.0:
        return 0.0
    iy = min(ay + ah, by + bh) - max(ay, by)
    if iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (aw * ah + bw * bh - inter)


def ciou_kernel(ax, ay, aw, ah, bx, by, bw, bh):
    """Complete IoU: IoU minus center-distance and aspect-ratio penalties."""
    iou = iou_kernel(ax, ay, aw, ah, bx, by, bw, bh)

    dx = (ax + aw / 2.0) - (bx + bw / 2.0)
    dy = (ay + ah / 2.0) - (by + bh / 2.0)
    rho2 = dx * dx + dy * dy

    cw = max(ax + aw, bx + bw) - min(ax, bx)
    ch = max(ay + ah, by + bh) - min(ay, by)
    c2 = cw * cw + ch * ch

    dv = math.atan(aw / ah) - math.atan(bw / bh)
    v = (4.0 / (math.pi * math.pi)) * dv * dv
    alpha = 0.0 if v == 0.0 else v / (1.0 - iou + v)

    return iou - rho2 / c2 - alpha * v


def nms_kernel(boxes, order, threshold):
    """Greedy suppression over ``order``; returns kept flags per input index.

    ``boxes`` is a sequence of (x, y, w, h); ``order`` lists indices by
    descending priority. A box is suppressed when its IoU with an already
    kept box strictly exceeds ``threshold``.
    """
    keep = [False] * len(boxes)
    kept: list[int] = []
    for i in order:
        bx, by, bw, bh = boxes[i]
        for j in kept:
            ox, oy, ow, oh = boxes[j]
            if iou_kernel(bx, by, bw, bh, ox, oy, ow, oh) > threshold:
                break
        else:
            keep[i] = True
            kept.append(i)
    return keep


def max_rect_kernel(xs, ys, occ):
    """Largest empty rectangle on a coordinate-compressed occupancy grid.

    ``xs``/``ys`` are sorted cell boundaries, ``occ[i][j]`` marks cell
    (row i, col j) as blocked. Scans every row band, tracking per-column
    emptiness, and takes maximal horizontal runs; ties go to the smaller
    (top, left) corner, then to the earliest find.

    Returns (area, left_idx, top_idx, right_idx, bottom_idx) with right and
    bottom exclusive; area < 0 when every cell is blocked.
    """
    ncols = len(xs) - 1
    nrows = len(ys) - 1
    best_area = -1.0
    best = (-1.0, 0, 0, 0, 0)
    alive = [False] * ncols

    for ti in range(nrows):
        for j in range(ncols):
            alive[j] = True
        for bi in range(ti, nrows):
            row = occ[bi]
            for j in range(ncols):
                if row[j]:
                    alive[j] = False
            height = ys[bi + 1] - ys[ti]
            j = 0
            while j < ncols:
                if not alive[j]:
                    j += 1
                    continue
                start = j
                while j < ncols and alive[j]:
                    j += 1
                area = (xs[j] - xs[start]) * height
                if area > best_area or (
                    area == best_area
                    and (ys[ti], xs[start]) < (ys[best[2]], xs[best[1]])
                ):
                    best_area = area
                    best = (area, start, ti, j, bi + 1)
    return best


def hungarian_kernel(cost, n, m):
    """Min-cost assignment for an n x m matrix with n <= m.

    Shortest-augmenting-path formulation with row/column potentials
    (O(n^2 m)). ``cost`` is a flat row-major list. Returns the assigned
    column for each row.
    """
    INF = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)  # p[j]: row (1-based) matched to column j; 0 = free
    way = [0] * (m + 1)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            row_off = (i0 - 1) * m
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = cost[row_off + j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    assign = [-1] * n
    for j in range(1, m + 1):
        if p[j] > 0:
            assign[p[j] - 1] = j - 1
    return assign
