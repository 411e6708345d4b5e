"""Geometric primitives: rects, overlap measures, NMS, empty-rectangle
search, affine fitting, and the assignment solver.

The numeric kernels run on a compiled extension when built, with a
pure-Python fallback selected at import (see ``_backend``).
"""

from screencoder.geometry.core import (
    BACKEND,
    ciou,
    fit_affine,
    hungarian_min_cost,
    iou,
    max_empty_rect,
    nms_per_class,
)
from screencoder.geometry.types import NORM_EPS, AffineTransform, NormRect, Rect

__all__ = [
    "BACKEND",
    "NORM_EPS",
    "AffineTransform",
    "NormRect",
    "Rect",
    "ciou",
    "fit_affine",
    "hungarian_min_cost",
    "iou",
    "max_empty_rect",
    "nms_per_class",
]
