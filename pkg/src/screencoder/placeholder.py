"""Placeholder restoration: put real screenshot patches back into the page.

Detected UI elements (from the ingestion file format or the built-in
baseline detector) are partitioned by layout region, aligned into render
space with a per-region affine fit, matched one-to-one against placeholder
slots by negative-CIoU Hungarian assignment, and the winning patches are
cropped out of the screenshot and swapped into the document.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from screencoder.docmodel import Element, GeneratedDocument, PLACEHOLDER_CLASS
from screencoder.errors import SchemaError
from screencoder.evaluation import resolve_geometry
from screencoder.geometry import AffineTransform, Rect, ciou, fit_affine, hungarian_min_cost
from screencoder.grounding import LayoutMap
from screencoder.imaging import mean_color, png_data_uri

log = logging.getLogger(__name__)

DETECTIONS_SCHEMA_VERSION = 1
ELEMENT_KINDS = ("image", "text", "icon", "other")


@dataclass(frozen=True)
class DetectedElement:
    box: Rect  # screenshot pixel space unless transformed
    kind: str = "image"
    confidence: float = 1.0
    origin: "DetectedElement | None" = None  # pre-transform element, when mapped

    def __post_init__(self):
        if self.kind not in ELEMENT_KINDS:
            raise SchemaError(f"bad element kind {self.kind!r}")

    def source(self) -> "DetectedElement":
        return self.origin if self.origin is not None else self


@dataclass
class RegionPartition:
    by_region: dict[str, list[DetectedElement]] = field(default_factory=dict)
    unassigned: list[DetectedElement] = field(default_factory=list)


@dataclass(frozen=True)
class PlaceholderSlot:
    path: str  # element path inside the document
    box: Rect  # render pixel space
    node_ref: str | None = None


@dataclass
class MatchResult:
    pairs: list[tuple[PlaceholderSlot, DetectedElement, float]] = field(default_factory=list)
    unmatched_slots: list[PlaceholderSlot] = field(default_factory=list)
    unmatched_elements: list[DetectedElement] = field(default_factory=list)

    def merge(self, other: "MatchResult"):
        self.pairs.extend(other.pairs)
        self.unmatched_slots.extend(other.unmatched_slots)
        self.unmatched_elements.extend(other.unmatched_elements)


# -------------------------------------------------------------- detection

def _dominant_border_color(arr: np.ndarray) -> np.ndarray:
    border = np.concatenate([arr[0, :], arr[-1, :], arr[:, 0], arr[:, -1]])
    colors, counts = np.unique(border, axis=0, return_counts=True)
    return colors[int(np.argmax(counts))]


def _box_gap(a: Rect, b: Rect) -> float:
    dx = max(a.x, b.x) - min(a.x2, b.x2)
    dy = max(a.y, b.y) - min(a.y2, b.y2)
    return max(dx, dy)


def _merge_nearby(boxes: list[Rect], gap_px: float) -> list[Rect]:
    """Union boxes whose bounding gap is under ``gap_px`` until stable."""
    boxes = list(boxes)
    merged = True
    while merged:
        merged = False
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                if _box_gap(boxes[i], boxes[j]) < gap_px:
                    a, b = boxes[i], boxes[j]
                    x1, y1 = min(a.x, b.x), min(a.y, b.y)
                    x2, y2 = max(a.x2, b.x2), max(a.y2, b.y2)
                    boxes[i] = Rect(x1, y1, x2 - x1, y2 - y1)
                    del boxes[j]
                    merged = True
                    break
            if merged:
                break
    return boxes


def _classify(rect: Rect, fill: float) -> str:
    if rect.w <= 20 and rect.h <= 20:
        return "icon"
    if rect.h <= 20 and rect.w / rect.h >= 3.0 and fill < 0.8:
        return "text"
    return "image"


def detect_elements_baseline(
    screenshot: Image.Image,
    merge_gap_px: int = 4,
    color_tolerance: int = 16,
    min_area_px: int = 16,
) -> list[DetectedElement]:
    """Minimal connected-component detector for self-contained tests.

    Estimates the background as the dominant border color, binarizes
    against it, extracts connected components, merges boxes closer than
    ``merge_gap_px``, and classifies each by aspect/fill heuristics.
    Output is sorted by area, largest first.
    """
    arr = np.asarray(screenshot.convert("RGB"), dtype=np.int16)
    background = _dominant_border_color(arr)
    mask = (np.abs(arr - background).max(axis=2) > color_tolerance)
    if not mask.any():
        return []

    labels, count = ndimage.label(mask)
    boxes = []
    for slc in ndimage.find_objects(labels):
        if slc is None:
            continue
        y0, y1 = slc[0].start, slc[0].stop
        x0, x1 = slc[1].start, slc[1].stop
        if (x1 - x0) * (y1 - y0) >= min_area_px:
            boxes.append(Rect(float(x0), float(y0), float(x1 - x0), float(y1 - y0)))
    boxes = _merge_nearby(boxes, float(merge_gap_px))

    elements = []
    for rect in boxes:
        region = mask[int(rect.y) : int(rect.y2), int(rect.x) : int(rect.x2)]
        fill = float(region.mean()) if region.size else 0.0
        elements.append(DetectedElement(box=rect, kind=_classify(rect, fill), confidence=1.0))
    elements.sort(key=lambda e: (-e.box.area, e.box.x, e.box.y))
    return elements


def load_detections(source: str | Path | dict) -> list[DetectedElement]:
    """Read externally produced detections (the primary ingestion path)."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = source
    if not isinstance(payload, dict):
        raise SchemaError("detections file must be a JSON object")
    if payload.get("schema_version") != DETECTIONS_SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported detections schema_version {payload.get('schema_version')!r}"
        )
    elements = []
    for i, raw in enumerate(payload.get("elements", [])):
        where = f"elements[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError(f"{where} must be an object")
        box = raw.get("box")
        if not isinstance(box, (list, tuple)) or len(box) != 4:
            raise SchemaError(f"{where}.box must be [x, y, w, h]")
        try:
            rect = Rect(*(float(v) for v in box))
        except Exception as exc:
            raise SchemaError(f"{where}.box invalid: {exc}") from exc
        kind = raw.get("kind", "image")
        conf = raw.get("confidence", 1.0)
        try:
            conf = float(conf)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}.confidence invalid: {exc}") from exc
        if not math.isfinite(conf) or not (0.0 <= conf <= 1.0):
            raise SchemaError(f"{where}.confidence outside [0, 1]")
        try:
            elements.append(DetectedElement(box=rect, kind=kind, confidence=conf))
        except SchemaError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    return elements


# ------------------------------------------------------------ partitioning

def partition_by_region(
    elements: list[DetectedElement], layout: LayoutMap
) -> RegionPartition:
    """Assign each element to the region with maximal intersection area."""
    part = RegionPartition(by_region={label: [] for label in layout.entries})
    for el in elements:
        best_label = None
        best_area = 0.0
        for label, entry in layout.entries.items():
            r = entry.box
            ix = min(el.box.x2, r.x2) - max(el.box.x, r.x)
            iy = min(el.box.y2, r.y2) - max(el.box.y, r.y)
            overlap = ix * iy if (ix > 0 and iy > 0) else 0.0
            if overlap > best_area:
                best_area = overlap
                best_label = label
        if best_label is None:
            part.unassigned.append(el)
        else:
            part.by_region[best_label].append(el)
    return part


# --------------------------------------------------------------- alignment

def align_region(
    region_elements: list[DetectedElement],
    region_src: Rect,
    region_dst: Rect,
) -> tuple[AffineTransform, list[DetectedElement]]:
    """Fit the src->dst corner transform and map the region's elements.

    Returned elements carry their pre-transform selves in ``origin`` so
    restoration can crop from the original screenshot space.
    """
    src_corners = [(region_src.x, region_src.y), (region_src.x2, region_src.y),
                   (region_src.x, region_src.y2), (region_src.x2, region_src.y2)]
    dst_corners = [(region_dst.x, region_dst.y), (region_dst.x2, region_dst.y),
                   (region_dst.x, region_dst.y2), (region_dst.x2, region_dst.y2)]
    transform, _ = fit_affine(src_corners, dst_corners)

    mapped = []
    for el in region_elements:
        x, y, w, h = transform.apply_box(el.box.as_tuple())
        mapped.append(
            DetectedElement(
                box=Rect(max(0.0, x), max(0.0, y), w, h),
                kind=el.kind,
                confidence=el.confidence,
                origin=el.source(),
            )
        )
    return transform, mapped


# ---------------------------------------------------------------- matching

def placeholder_slots(
    doc: GeneratedDocument, viewport: tuple[int, int] | None = None
) -> list[PlaceholderSlot]:
    """Placeholder-flagged elements with their resolved render geometry."""
    slots = []
    for path, el, rect in resolve_geometry(doc, viewport):
        if el.placeholder:
            slots.append(PlaceholderSlot(path=path, box=rect, node_ref=el.node_ref))
    return slots


def match_placeholders(
    slots: list[PlaceholderSlot],
    elements: list[DetectedElement],
    ciou_floor: float = 0.0,
) -> MatchResult:
    """Hungarian assignment on negative CIoU; pairs below the floor are
    pushed back to the unmatched sets."""
    if not slots or not elements:
        return MatchResult(unmatched_slots=list(slots), unmatched_elements=list(elements))
    costs = [[-ciou(slot.box, el.box) for el in elements] for slot in slots]
    pairs = []
    matched_s, matched_e = set(), set()
    for i, j in hungarian_min_cost(costs):
        value = -costs[i][j]
        if value >= ciou_floor:
            pairs.append((slots[i], elements[j], value))
            matched_s.add(i)
            matched_e.add(j)
    return MatchResult(
        pairs=pairs,
        unmatched_slots=[s for i, s in enumerate(slots) if i not in matched_s],
        unmatched_elements=[e for j, e in enumerate(elements) if j not in matched_e],
    )


def match_by_region(
    doc: GeneratedDocument,
    layout: LayoutMap,
    elements: list[DetectedElement],
    ciou_floor: float = 0.0,
    viewport: tuple[int, int] | None = None,
) -> MatchResult:
    """Full mapping flow: partition, per-region align, per-region match.

    Slots belong to the region of their top-level node (by node_ref
    prefix); elements go to the region of maximal overlap in screenshot
    space. Alignment maps each region's screenshot box onto its rendered
    box before matching.
    """
    vw, vh = viewport or doc.page_size
    slots = placeholder_slots(doc, (vw, vh))
    partition = partition_by_region(elements, layout)

    rendered_regions: dict[str, Rect] = {}
    for path, el, rect in resolve_geometry(doc, (vw, vh)):
        if el.node_ref and el.node_ref.startswith("node-"):
            label = el.node_ref[len("node-") :]
            if label in layout.entries and label not in rendered_regions:
                rendered_regions[label] = rect

    def slot_region(slot: PlaceholderSlot) -> str | None:
        best_label, best_area = None, 0.0
        for label, rect in rendered_regions.items():
            ix = min(slot.box.x2, rect.x2) - max(slot.box.x, rect.x)
            iy = min(slot.box.y2, rect.y2) - max(slot.box.y, rect.y)
            overlap = ix * iy if (ix > 0 and iy > 0) else 0.0
            if overlap > best_area:
                best_label, best_area = label, overlap
        return best_label

    slots_by_region: dict[str, list[PlaceholderSlot]] = {}
    orphan_slots: list[PlaceholderSlot] = []
    for slot in slots:
        label = slot_region(slot)
        if label is None:
            orphan_slots.append(slot)
        else:
            slots_by_region.setdefault(label, []).append(slot)

    result = MatchResult(unmatched_slots=orphan_slots, unmatched_elements=list(partition.unassigned))
    for label, entry in layout.entries.items():
        region_slots = slots_by_region.get(label, [])
        region_elements = partition.by_region.get(label, [])
        if region_elements and label in rendered_regions:
            _, region_elements = align_region(region_elements, entry.box, rendered_regions[label])
        result.merge(match_placeholders(region_slots, region_elements, ciou_floor))
    return result


# -------------------------------------------------------------- restoration

def restore_images(
    doc: GeneratedDocument,
    matches: MatchResult,
    screenshot: Image.Image,
    embed: str = "data-uri",
    assets_dir: str | Path | None = None,
) -> tuple[GeneratedDocument, dict]:
    """Swap matched placeholders for cropped screenshot patches.

    Returns a new document plus the restoration report. Crops are clipped
    to the screenshot with a warning; unmatched placeholders stay gray.
    """
    restored = doc.clone()
    elements_by_path = {path: el for path, el in restored.iter_elements()}
    warnings: list[str] = []
    rows = []

    if embed == "assets":
        assets = Path(assets_dir or "assets")
        assets.mkdir(parents=True, exist_ok=True)

    for n, (slot, element, value) in enumerate(matches.pairs):
        target = elements_by_path.get(slot.path)
        if target is None or not target.placeholder:
            warnings.append(f"slot {slot.path} no longer a placeholder; skipped")
            continue
        src_box = element.source().box
        x1 = int(max(0, math.floor(src_box.x)))
        y1 = int(max(0, math.floor(src_box.y)))
        x2 = int(min(screenshot.width, math.ceil(src_box.x2)))
        y2 = int(min(screenshot.height, math.ceil(src_box.y2)))
        if x2 - x1 < 1 or y2 - y1 < 1:
            warnings.append(f"crop for slot {slot.path} empty after clipping; kept gray")
            continue
        if (x1, y1, x2, y2) != (
            int(math.floor(src_box.x)),
            int(math.floor(src_box.y)),
            int(math.ceil(src_box.x2)),
            int(math.ceil(src_box.y2)),
        ):
            warnings.append(f"crop for slot {slot.path} clipped to screenshot bounds")
        patch = screenshot.crop((x1, y1, x2, y2))

        target.tag = "img"
        target.text = ""
        target.children = []
        target.classes = [c for c in target.classes if c != PLACEHOLDER_CLASS]
        if "restored" not in target.classes:
            target.classes.append("restored")
        if embed == "assets":
            name = f"patch_{n:03d}.png"
            patch.save(assets / name)
            target.attrs["src"] = f"assets/{name}"
        else:
            target.attrs["src"] = png_data_uri(patch)
        r, g, b = mean_color(patch)
        target.attrs["data-mean-color"] = f"{r:.4f},{g:.4f},{b:.4f}"
        rows.append(
            {
                "slot": slot.path,
                "node": slot.node_ref,
                "slot_box": list(slot.box.as_tuple()),
                "patch_box": [x1, y1, x2 - x1, y2 - y1],
                "ciou": value,
            }
        )

    report = {
        "schema_version": 1,
        "restored": rows,
        "unmatched_slots": len(matches.unmatched_slots),
        "unmatched_elements": len(matches.unmatched_elements),
        "warnings": warnings,
    }
    return restored, report
