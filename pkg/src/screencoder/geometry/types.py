"""Rectangle and transform value types used throughout the pipeline.

Pixel-space boxes are (x, y, w, h) with the origin at the top-left corner;
normalized boxes are unit fractions of the page dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from screencoder.errors import GeometryError

NORM_EPS = 1e-6


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel-space box; width and height must be positive."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise GeometryError(f"Rect.{name} is not finite: {v}")
        if self.x < 0 or self.y < 0:
            raise GeometryError(f"Rect origin must be non-negative: ({self.x}, {self.y})")
        if self.w <= 0 or self.h <= 0:
            raise GeometryError(f"Rect dims must be positive: {self.w}x{self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def contains(self, other: "Rect", eps: float = 1e-9) -> bool:
        return (
            other.x >= self.x - eps
            and other.y >= self.y - eps
            and other.x2 <= self.x2 + eps
            and other.y2 <= self.y2 + eps
        )

    def clip_to(self, bounds: "Rect") -> "Rect | None":
        """Intersect with ``bounds``; None when nothing positive remains."""
        x1 = max(self.x, bounds.x)
        y1 = max(self.y, bounds.y)
        x2 = min(self.x2, bounds.x2)
        y2 = min(self.y2, bounds.y2)
        if x2 - x1 <= 0 or y2 - y1 <= 0:
            return None
        return Rect(x1, y1, x2 - x1, y2 - y1)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class NormRect:
    """Box in unit fractions of page width/height; stays inside [0, 1]."""

    l: float
    t: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("l", "t", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0 or v > 1.0:
                raise GeometryError(f"NormRect.{name} outside [0, 1]: {v}")
        if self.l + self.w > 1.0 + NORM_EPS:
            raise GeometryError(f"NormRect exceeds right edge: l={self.l} w={self.w}")
        if self.t + self.h > 1.0 + NORM_EPS:
            raise GeometryError(f"NormRect exceeds bottom edge: t={self.t} h={self.h}")

    @property
    def r(self) -> float:
        return self.l + self.w

    @property
    def b(self) -> float:
        return self.t + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.l + self.w / 2.0, self.t + self.h / 2.0)

    def contains(self, other: "NormRect", eps: float = NORM_EPS) -> bool:
        return (
            other.l >= self.l - eps
            and other.t >= self.t - eps
            and other.r <= self.r + eps
            and other.b <= self.b + eps
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.l, self.t, self.w, self.h)

    def to_pixels(self, page_w: float, page_h: float) -> Rect:
        return Rect(self.l * page_w, self.t * page_h, self.w * page_w, self.h * page_h)

    @staticmethod
    def from_pixels(rect: Rect, page_w: float, page_h: float, digits: int | None = 6) -> "NormRect":
        """Normalize a pixel rect; coordinates quantized to ``digits`` decimals.

        Quantization keeps serialized trees round-trippable; at 6 decimals the
        denormalization error stays under half a pixel for any sane page size.
        """
        vals = [rect.x / page_w, rect.y / page_h, rect.w / page_w, rect.h / page_h]
        if digits is not None:
            vals = [round(v, digits) for v in vals]
        l, t, w, h = vals
        # Rounding may push the far edge a hair past 1.0; pull the size back.
        w = min(w, round(1.0 - l, digits) if digits is not None else 1.0 - l)
        h = min(h, round(1.0 - t, digits) if digits is not None else 1.0 - t)
        return NormRect(l, t, w, h)


@dataclass(frozen=True)
class AffineTransform:
    """Axis-aligned scale + translation; no rotation or shear."""

    scale_x: float
    scale_y: float
    offset_x: float
    offset_y: float

    def __post_init__(self):
        if self.scale_x <= 0 or self.scale_y <= 0:
            raise GeometryError(f"affine scales must be positive: ({self.scale_x}, {self.scale_y})")

    @staticmethod
    def identity() -> "AffineTransform":
        return AffineTransform(1.0, 1.0, 0.0, 0.0)

    def apply_point(self, x: float, y: float) -> tuple[float, float]:
        return (self.scale_x * x + self.offset_x, self.scale_y * y + self.offset_y)

    def apply_rect(self, rect: Rect) -> Rect:
        x1, y1 = self.apply_point(rect.x, rect.y)
        x2, y2 = self.apply_point(rect.x2, rect.y2)
        return Rect(x1, y1, x2 - x1, y2 - y1)

    def apply_box(self, box: tuple[float, float, float, float]) -> tuple[float, float, float, float]:
        """Raw (x, y, w, h) mapping without Rect validation; callers clip."""
        x, y, w, h = box
        x1, y1 = self.apply_point(x, y)
        x2, y2 = self.apply_point(x + w, y + h)
        return (x1, y1, x2 - x1, y2 - y1)
