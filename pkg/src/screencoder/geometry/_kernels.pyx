# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels.

Hot inner loops of the pipeline: pairwise overlap measures, suppression,
the empty-rectangle grid scan, and the assignment solver. Behavior,
including tie-break rules, mirrors ``_pykernels.py`` exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan, pi, INFINITY

IMPLEMENTATION = "cython"


cdef inline double _iou(double ax, double ay, double aw, double ah,
                        double bx, double by, double bw, double bh) nogil:
    cdef double ix = min(ax + aw, bx + bw) - max(ax, bx)
    if ix <= 0.0:
        return 0.0
    cdef double iy = min(ay + ah, by + bh) - max(ay, by)
    if iy <= 0.0:
        return 0.0
    cdef double inter = ix * iy
    return inter / (aw * ah + bw * bh - inter)


cdef inline double _ciou(double ax, double ay, double aw, double ah,
                         double bx, double by, double bw, double bh) nogil:
    cdef double iou = _iou(ax, ay, aw, ah, bx, by, bw, bh)
    cdef double dx = (ax + aw / 2.0) - (bx + bw / 2.0)
    cdef double dy = (ay + ah / 2.0) - (by + bh / 2.0)
    cdef double rho2 = dx * dx + dy * dy
    cdef double cw = max(ax + aw, bx + bw) - min(ax, bx)
    cdef double ch = max(ay + ah, by + bh) - min(ay, by)
    cdef double c2 = cw * cw + ch * ch
    cdef double dv = atan(aw / ah) - atan(bw / bh)
    cdef double v = (4.0 / (pi * pi)) * dv * dv
    cdef double alpha = 0.0
    if v != 0.0:
        alpha = v / (1.0 - iou + v)
    return iou - rho2 / c2 - alpha * v


def iou_kernel(double ax, double ay, double aw, double ah,
               double bx, double by, double bw, double bh):
    return _iou(ax, ay, aw, ah, bx, by, bw, bh)


def ciou_kernel(double ax, double ay, double aw, double ah,
                double bx, double by, double bw, double bh):
    return _ciou(ax, ay, aw, ah, bx, by, bw, bh)


def nms_kernel(double[:, ::1] boxes, long[::1] order, double threshold):
    cdef Py_ssize_t n = boxes.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] keep = np.zeros(n, dtype=np.uint8)
    cdef long[::1] kept = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t nkept = 0
    cdef Py_ssize_t oi, k
    cdef long i, j
    cdef bint suppressed
    for oi in range(order.shape[0]):
        i = order[oi]
        suppressed = False
        for k in range(nkept):
            j = kept[k]
            if _iou(boxes[i, 0], boxes[i, 1], boxes[i, 2], boxes[i, 3],
                    boxes[j, 0], boxes[j, 1], boxes[j, 2], boxes[j, 3]) > threshold:
                suppressed = True
                break
        if not suppressed:
            keep[i] = 1
            kept[nkept] = i
            nkept += 1
    return [bool(keep[k]) for k in range(n)]


def max_rect_kernel(double[::1] xs, double[::1] ys, cnp.uint8_t[:, ::1] occ):
    cdef Py_ssize_t ncols = xs.shape[0] - 1
    cdef Py_ssize_t nrows = ys.shape[0] - 1
    cdef double best_area = -1.0
    cdef Py_ssize_t best_li = 0, best_ti = 0, best_ri = 0, best_bi = 0
    cdef cnp.uint8_t[::1] alive = np.empty(ncols, dtype=np.uint8)
    cdef Py_ssize_t ti, bi, j, start
    cdef double height, area
    cdef bint better

    for ti in range(nrows):
        for j in range(ncols):
            alive[j] = 1
        for bi in range(ti, nrows):
            for j in range(ncols):
                if occ[bi, j]:
                    alive[j] = 0
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
                better = area > best_area
                if not better and area == best_area:
                    if ys[ti] < ys[best_ti]:
                        better = True
                    elif ys[ti] == ys[best_ti] and xs[start] < xs[best_li]:
                        better = True
                if better:
                    best_area = area
                    best_li = start
                    best_ti = ti
                    best_ri = j
                    best_bi = bi + 1
    return (best_area, best_li, best_ti, best_ri, best_bi)


def hungarian_kernel(double[::1] cost, Py_ssize_t n, Py_ssize_t m):
    """Min-cost assignment, n <= m, shortest augmenting paths with potentials."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.zeros(n + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.zeros(m + 1)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] p = np.zeros(m + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] way = np.zeros(m + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] minv = np.empty(m + 1)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] used = np.empty(m + 1, dtype=np.uint8)
    cdef double[::1] u_v = u
    cdef double[::1] v_v = v
    cdef long[::1] p_v = p
    cdef long[::1] way_v = way
    cdef double[::1] minv_v = minv
    cdef cnp.uint8_t[::1] used_v = used
    cdef Py_ssize_t i, j, j0, j1, i0, row_off
    cdef double delta, cur

    for i in range(1, n + 1):
        p_v[0] = i
        j0 = 0
        for j in range(m + 1):
            minv_v[j] = INFINITY
            used_v[j] = 0
        while True:
            used_v[j0] = 1
            i0 = p_v[j0]
            delta = INFINITY
            j1 = 0
            row_off = (i0 - 1) * m
            for j in range(1, m + 1):
                if used_v[j]:
                    continue
                cur = cost[row_off + j - 1] - u_v[i0] - v_v[j]
                if cur < minv_v[j]:
                    minv_v[j] = cur
                    way_v[j] = j0
                if minv_v[j] < delta:
                    delta = minv_v[j]
                    j1 = j
            for j in range(m + 1):
                if used_v[j]:
                    u_v[p_v[j]] += delta
                    v_v[j] -= delta
                else:
                    minv_v[j] -= delta
            j0 = j1
            if p_v[j0] == 0:
                break
        while j0 != 0:
            j1 = way_v[j0]
            p_v[j0] = p_v[j1]
            j0 = j1

    assign = [-1] * n
    for j in range(1, m + 1):
        if p_v[j] > 0:
            assign[p_v[j] - 1] = j - 1
    return assign
