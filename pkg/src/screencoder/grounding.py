"""Grounding stage: labeled structural regions from a screenshot.

Queries a vision backend once per label, post-processes the answers
(clipping, class-specific NMS, best-per-label), recovers missing labels
from spatial priors, and infers the main content region as the largest
empty rectangle. Output is the layout dictionary consumed by planning.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from screencoder.backends import GroundingBackend
from screencoder.config import PipelineConfig
from screencoder.errors import (
    BackendError,
    EmptyGroundingError,
    FullCoverageError,
    SchemaError,
)
from screencoder.geometry import Rect, iou, max_empty_rect, nms_per_class
from screencoder.imaging import image_to_b64, load_image

log = logging.getLogger(__name__)

MAIN_CONTENT = "main_content"

PROVENANCE_BACKEND = "backend"
PROVENANCE_FALLBACK = "fallback"
PROVENANCE_INFERRED = "inferred"


@dataclass(frozen=True)
class GroundedRegion:
    box: Rect
    label: str
    confidence: float
    source: str = PROVENANCE_BACKEND  # backend | fallback


@dataclass
class LayoutEntry:
    box: Rect
    provenance: str  # backend | fallback | inferred
    confidence: float = 1.0


@dataclass
class LayoutMap:
    """Label -> box dictionary for one page, with provenance per entry."""

    page_size: tuple[int, int]
    entries: dict[str, LayoutEntry] = field(default_factory=dict)
    backend_errors: list[str] = field(default_factory=list)  # diagnostics, not serialized

    @property
    def page_rect(self) -> Rect:
        return Rect(0, 0, self.page_size[0], self.page_size[1])

    def boxes(self) -> dict[str, Rect]:
        return {label: e.box for label, e in self.entries.items()}

    def validate(self):
        page = self.page_rect
        for label, entry in self.entries.items():
            if not page.contains(entry.box):
                raise SchemaError(f"layout entry {label!r} outside page bounds")
            if entry.provenance not in (PROVENANCE_BACKEND, PROVENANCE_FALLBACK, PROVENANCE_INFERRED):
                raise SchemaError(f"layout entry {label!r} has bad provenance {entry.provenance!r}")

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "page_size": [self.page_size[0], self.page_size[1]],
            "entries": {
                label: {
                    "box": [e.box.x, e.box.y, e.box.w, e.box.h],
                    "provenance": e.provenance,
                    "confidence": e.confidence,
                }
                for label, e in self.entries.items()
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "LayoutMap":
        try:
            w, h = d["page_size"]
            entries = {}
            for label, raw in d.get("entries", {}).items():
                x, y, bw, bh = raw["box"]
                entries[label] = LayoutEntry(
                    box=Rect(float(x), float(y), float(bw), float(bh)),
                    provenance=raw.get("provenance", PROVENANCE_BACKEND),
                    confidence=float(raw.get("confidence", 1.0)),
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed layout map: {exc}") from exc
        layout = LayoutMap(page_size=(int(w), int(h)), entries=entries)
        layout.validate()
        return layout


# ----------------------------------------------------------- fallbacks

def fallback_recover(
    missing_label: str,
    detected: list[GroundedRegion],
    page: Rect,
    config: PipelineConfig | None = None,
) -> GroundedRegion | None:
    """Spatial-prior recovery for a label the backend failed to return.

    header/navigation: a full-width strip starting in the top band
    (navigation goes below an already-resolved header); sidebar: a tall
    strip flush to the left or right edge. A candidate overlapping any
    resolved region with IoU above the veto threshold is discarded;
    returning None is a valid outcome.
    """
    cfg = config or PipelineConfig()

    def vetoed(candidate: Rect) -> bool:
        return any(iou(candidate, r.box) > cfg.fallback_overlap_veto_iou for r in detected)

    if missing_label in ("header", "navigation"):
        top = page.y
        if missing_label == "navigation":
            headers = [r.box for r in detected if r.label == "header"]
            if headers:
                top = max(b.y2 for b in headers)
        if top - page.y >= cfg.fallback_top_frac * page.h:
            return None
        height = min(cfg.fallback_header_height_frac, cfg.fallback_header_max_height_frac) * page.h
        if top + height > page.y2:
            return None
        candidate = Rect(page.x, top, page.w, height)
        if vetoed(candidate):
            return None
        return GroundedRegion(candidate, missing_label, 0.0, PROVENANCE_FALLBACK)

    if missing_label == "sidebar":
        width = min(cfg.fallback_sidebar_width_frac, cfg.fallback_sidebar_max_width_frac) * page.w
        height = page.h
        if height < cfg.fallback_sidebar_min_height_frac * page.h:
            return None
        for candidate in (
            Rect(page.x, page.y, width, height),
            Rect(page.x2 - width, page.y, width, height),
        ):
            if not vetoed(candidate):
                return GroundedRegion(candidate, missing_label, 0.0, PROVENANCE_FALLBACK)
        return None

    # no prior for other labels; absence is fine
    return None


def infer_main_content(page: Rect, resolved: list[GroundedRegion]) -> Rect:
    """Largest empty rectangle not overlapping any resolved region."""
    return max_empty_rect(page, [r.box for r in resolved])


# ------------------------------------------------------------- grounding

def _query_label(
    backend: GroundingBackend,
    image_b64: str,
    label: str,
    page: Rect,
    cfg: PipelineConfig,
    allowed: set[str],
    errors: list[str],
) -> list[GroundedRegion]:
    try:
        rows = backend.detect(image_b64, cfg.query_for(label), label)
    except BackendError as exc:
        errors.append(f"{label}: {exc}")
        return []
    regions = []
    for row in rows:
        if row["label"] not in allowed:
            log.warning("dropping detection with foreign label %r", row["label"])
            continue
        x, y, w, h = row["box"]
        # clip in raw coordinates; Rect itself cannot hold a negative origin
        x1, y1 = max(x, page.x), max(y, page.y)
        x2, y2 = min(x + w, page.x2), min(y + h, page.y2)
        if x2 - x1 <= 0 or y2 - y1 <= 0:
            continue
        clipped = Rect(x1, y1, x2 - x1, y2 - y1)
        regions.append(GroundedRegion(clipped, row["label"], row["confidence"], PROVENANCE_BACKEND))
    return regions


def ground(
    image,
    backend: GroundingBackend,
    config: PipelineConfig | None = None,
) -> LayoutMap:
    """Run the full grounding stage on one screenshot.

    Queries the backend per label, dedups with class-specific NMS, keeps
    the most confident box per label, recovers missing labels from priors
    when enabled, and resolves main_content per the configured variant.
    """
    cfg = config or PipelineConfig()
    img, data = load_image(image)
    page = Rect(0, 0, img.width, img.height)
    image_b64 = image_to_b64(data)

    prompted_main = cfg.main_content == "prompted"
    allowed = set(cfg.labels) | ({MAIN_CONTENT} if prompted_main else set())
    backend_errors: list[str] = []

    candidates: list[GroundedRegion] = []
    for label in cfg.labels:
        candidates.extend(
            _query_label(backend, image_b64, label, page, cfg, allowed, backend_errors)
        )
    if prompted_main:
        candidates.extend(
            _query_label(backend, image_b64, MAIN_CONTENT, page, cfg, allowed, backend_errors)
        )

    if backend_errors and not candidates and not cfg.fallback_enabled:
        raise BackendError(
            "grounding backend unreachable for every query: " + "; ".join(backend_errors)
        )

    deduped = nms_per_class(
        [(r.box, r.label, r.confidence) for r in candidates], cfg.nms_iou_threshold
    )
    best: dict[str, GroundedRegion] = {}
    for box, label, conf in deduped:  # already ordered by confidence
        if label not in best:
            best[label] = GroundedRegion(box, label, conf, PROVENANCE_BACKEND)

    resolved = [best[label] for label in cfg.labels if label in best]
    if cfg.fallback_enabled:
        for label in cfg.labels:
            if label in best:
                continue
            recovered = fallback_recover(label, resolved, page, cfg)
            if recovered is not None:
                best[label] = recovered
                resolved.append(recovered)
    elif not best:
        raise EmptyGroundingError(
            "backend returned no usable region and fallback recovery is disabled"
        )

    layout = LayoutMap(page_size=(img.width, img.height))
    for label in cfg.labels:
        if label in best:
            region = best[label]
            layout.entries[label] = LayoutEntry(region.box, region.source, region.confidence)

    main_entry: LayoutEntry | None = None
    if prompted_main and MAIN_CONTENT in best:
        region = best[MAIN_CONTENT]
        main_entry = LayoutEntry(region.box, PROVENANCE_BACKEND, region.confidence)
    else:
        try:
            main_box = infer_main_content(page, resolved)
            main_entry = LayoutEntry(main_box, PROVENANCE_INFERRED, 1.0)
        except FullCoverageError:
            log.warning("resolved regions cover the page; no main_content emitted")
    if main_entry is not None:
        layout.entries[MAIN_CONTENT] = main_entry

    layout.backend_errors = backend_errors
    layout.validate()
    if backend_errors:
        log.warning("grounding degraded by backend errors: %s", "; ".join(backend_errors))
    return layout


def ground_direct_main(
    image,
    backend: GroundingBackend,
    config: PipelineConfig | None = None,
) -> LayoutMap:
    """Variant that prompts the backend for main_content explicitly."""
    cfg = (config or PipelineConfig()).with_overrides(main_content="prompted")
    return ground(image, backend, cfg)
