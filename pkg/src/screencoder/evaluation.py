"""Layout evaluation: visual blocks, alignment, and reward terms.

Blocks come either from the constrained-layout resolver (geometry computed
directly from the emitted HTML, no browser involved) or from an external
OCR ingestion file. Matched blocks feed four bounded scores: block-area
coverage, text similarity, position alignment, and color consistency,
combined into a weighted composite.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from screencoder.config import PipelineConfig
from screencoder.docmodel import (
    GAP_STEP_FRAC,
    GRAY_PALETTE,
    Element,
    GeneratedDocument,
    parse_pct,
)
from screencoder.errors import ResolverError, SchemaError
from screencoder.geometry import NormRect, Rect, ciou, hungarian_min_cost
from screencoder.grounding import LayoutMap

log = logging.getLogger(__name__)

BLOCKS_SCHEMA_VERSION = 1

_KNOWN_CLASS_RE = re.compile(
    r"^(root|box|container|grid|placeholder|restored|grid-cols-\d+|gap-\d+|bg-gray-\d00)$"
)


@dataclass(frozen=True)
class Block:
    box: NormRect
    text: str = ""
    mean_color: tuple[float, float, float] = (1.0, 1.0, 1.0)
    kind: str = "text"  # text | image | container

    def __post_init__(self):
        if self.kind not in ("text", "image", "container"):
            raise SchemaError(f"bad block kind {self.kind!r}")
        if any(not (0.0 <= c <= 1.0) for c in self.mean_color):
            raise SchemaError(f"block color outside [0, 1]: {self.mean_color}")


def _canonical_order(blocks: list[Block]) -> list[Block]:
    return sorted(
        blocks, key=lambda b: (b.box.t, b.box.l, b.box.w, b.box.h, b.kind, b.text)
    )


@dataclass
class BlockSet:
    blocks: list[Block]
    source: str = "resolver"  # resolver | ocr_ingest

    def __post_init__(self):
        self.blocks = _canonical_order(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)


@dataclass
class BlockMatching:
    pairs: list[tuple[int, int, float]] = field(default_factory=list)
    unmatched_reference: list[int] = field(default_factory=list)
    unmatched_candidate: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class RewardBreakdown:
    r_block: float
    r_text: float
    r_pos: float
    r_color: float
    composite: float
    weights: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "r_block": self.r_block,
            "r_text": self.r_text,
            "r_pos": self.r_pos,
            "r_color": self.r_color,
            "composite": self.composite,
            "weights": list(self.weights),
        }


# ----------------------------------------------------------- the resolver

_GEOMETRY_PROPS = ("left", "top", "width", "height")


def _own_box_fraction(el: Element, path: str) -> tuple[float, float, float, float] | None:
    """Inline percentage geometry as parent-relative fractions, if any."""
    present = [p for p in _GEOMETRY_PROPS if p in el.style]
    if not present:
        return None
    vals = {}
    for prop in _GEOMETRY_PROPS:
        raw = el.style.get(prop, "0%" if prop in ("left", "top") else "100%")
        try:
            vals[prop] = parse_pct(raw)
        except ValueError as exc:
            raise ResolverError(
                f"element at {path} has non-percentage {prop}: {raw!r}"
            ) from exc
    return (vals["left"], vals["top"], vals["width"], vals["height"])


def _warn_unknown_classes(el: Element, seen: set[str]):
    for cls in el.classes:
        if cls not in seen and not _KNOWN_CLASS_RE.match(cls):
            seen.add(cls)
            log.warning("resolver ignoring unknown class %r", cls)


def resolve_geometry(
    doc: GeneratedDocument,
    viewport: tuple[int, int] | None = None,
) -> list[tuple[str, Element, Rect]]:
    """Absolute pixel geometry for every element of the document.

    Grid containers place children on equal tracks (columns from the
    ``grid-cols-*`` class, rows implied by child count) in document order;
    gaps span ``gap-k`` * 0.5% of the container width on both axes.
    Elements without geometry of their own fill their parent.
    """
    vw, vh = viewport or doc.page_size
    out: list[tuple[str, Element, Rect]] = []
    warned: set[str] = set()

    def walk(el: Element, path: str, box: tuple[float, float, float, float]):
        _warn_unknown_classes(el, warned)
        x, y, w, h = box
        own = _own_box_fraction(el, path)
        if own is not None:
            l, t, bw, bh = own
            x, y, w, h = (x + l * w, y + t * h, bw * w, bh * h)
        if w <= 0 or h <= 0:
            raise ResolverError(f"element at {path} resolves to empty geometry")
        out.append((path, el, Rect(max(0.0, x), max(0.0, y), w, h)))

        if el.has_class("grid") and el.children:
            cols = el.grid_columns() or 1
            n = len(el.children)
            rows = max(1, math.ceil(n / cols))
            gap = el.gap_step() * GAP_STEP_FRAC * w
            track_w = (w - gap * (cols - 1)) / cols
            track_h = (h - gap * (rows - 1)) / rows
            if track_w <= 0 or track_h <= 0:
                raise ResolverError(f"grid at {path} has non-positive tracks")
            for i, child in enumerate(el.children):
                r, c = divmod(i, cols)
                cell = (x + c * (track_w + gap), y + r * (track_h + gap), track_w, track_h)
                walk(child, f"{path}/{i}", cell)
        else:
            for i, child in enumerate(el.children):
                walk(child, f"{path}/{i}", (x, y, w, h))

    walk(doc.root, "0", (0.0, 0.0, float(vw), float(vh)))
    return out


def _parse_mean_color_attr(el: Element) -> tuple[float, float, float] | None:
    raw = el.attrs.get("data-mean-color")
    if not raw:
        return None
    try:
        r, g, b = (float(v) for v in raw.split(","))
    except ValueError:
        return None
    clamp = lambda v: min(1.0, max(0.0, v))  # noqa: E731
    return (clamp(r), clamp(g), clamp(b))


def _hex_to_rgb(hex_color: str) -> tuple[float, float, float]:
    v = hex_color.lstrip("#")
    return (int(v[0:2], 16) / 255.0, int(v[2:4], 16) / 255.0, int(v[4:6], 16) / 255.0)


def resolve_blocks(
    doc: GeneratedDocument,
    viewport: tuple[int, int] | None = None,
) -> BlockSet:
    """Leaf text/image/placeholder elements as normalized blocks.

    Block color is the effective background (nearest declared fill up the
    ancestor chain, white default); restored images override it with their
    recorded patch mean.
    """
    vw, vh = viewport or doc.page_size
    geometry = {path: rect for path, _, rect in resolve_geometry(doc, (vw, vh))}

    blocks: list[Block] = []

    def effective_color(el: Element, inherited: tuple[float, float, float]):
        attr = _parse_mean_color_attr(el)
        if attr is not None:
            return attr
        bg = el.bg_gray()
        if bg is not None:
            return _hex_to_rgb(bg)
        return inherited

    def walk(el: Element, path: str, color: tuple[float, float, float]):
        color = effective_color(el, color)
        if not el.children:
            rect = geometry[path]
            norm = NormRect(
                l=min(1.0, rect.x / vw),
                t=min(1.0, rect.y / vh),
                w=min(1.0, rect.w / vw, 1.0 - min(1.0, rect.x / vw)),
                h=min(1.0, rect.h / vh, 1.0 - min(1.0, rect.y / vh)),
            )
            if el.placeholder or el.tag == "img":
                blocks.append(Block(box=norm, text=el.text, mean_color=color, kind="image"))
            elif el.text:
                blocks.append(Block(box=norm, text=el.text, mean_color=color, kind="text"))
            return
        for i, child in enumerate(el.children):
            walk(child, f"{path}/{i}", color)

    walk(doc.root, "0", (1.0, 1.0, 1.0))
    return BlockSet(blocks=blocks, source="resolver")


def layout_reference_blocks(layout: LayoutMap) -> BlockSet:
    """Reference blocks straight from the layout dictionary: one labeled
    gray block per region. This is what a faithful offline render of the
    layout must reproduce."""
    page_w, page_h = layout.page_size
    gray = _hex_to_rgb(GRAY_PALETTE[400])
    blocks = [
        Block(
            box=NormRect.from_pixels(entry.box, page_w, page_h),
            text=label,
            mean_color=gray,
            kind="image",
        )
        for label, entry in layout.entries.items()
    ]
    return BlockSet(blocks=blocks, source="resolver")


# ----------------------------------------------------------- block ingest

def ingest_ocr_blocks(source: str | Path | dict) -> BlockSet:
    """Load externally produced (OCR-style) blocks from the published schema.

    Boxes are pixel-space and normalized against the declared page size;
    boxes poking past the page are clipped with a warning. Schema
    violations raise with the offending field named.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = source
    if not isinstance(payload, dict):
        raise SchemaError("blocks file must be a JSON object")
    if payload.get("schema_version") != BLOCKS_SCHEMA_VERSION:
        raise SchemaError(f"unsupported blocks schema_version {payload.get('schema_version')!r}")
    try:
        page_w, page_h = (float(v) for v in payload["page_size"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"blocks file: bad page_size: {exc}") from exc
    if page_w <= 0 or page_h <= 0:
        raise SchemaError("blocks file: page_size must be positive")

    page = Rect(0, 0, page_w, page_h)
    blocks = []
    for i, raw in enumerate(payload.get("blocks", [])):
        where = f"blocks[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError(f"{where} must be an object")
        box = raw.get("box")
        if not isinstance(box, (list, tuple)) or len(box) != 4:
            raise SchemaError(f"{where}.box must be [x, y, w, h]")
        try:
            rect = Rect(*(float(v) for v in box))
        except Exception as exc:
            raise SchemaError(f"{where}.box invalid: {exc}") from exc
        clipped = rect.clip_to(page)
        if clipped is None:
            raise SchemaError(f"{where}.box lies entirely outside the page")
        if clipped != rect:
            log.warning("%s.box exceeds page bounds; clipped", where)
            rect = clipped
        text = raw.get("text", "")
        if not isinstance(text, str):
            raise SchemaError(f"{where}.text must be a string")
        kind = raw.get("kind", "text")
        color = raw.get("color", [1.0, 1.0, 1.0])
        if not isinstance(color, (list, tuple)) or len(color) != 3:
            raise SchemaError(f"{where}.color must be [r, g, b]")
        try:
            rgb = tuple(float(c) for c in color)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}.color invalid: {exc}") from exc
        try:
            blocks.append(
                Block(
                    box=NormRect.from_pixels(rect, page_w, page_h),
                    text=text,
                    mean_color=rgb,  # type: ignore[arg-type]
                    kind=kind,
                )
            )
        except SchemaError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    return BlockSet(blocks=blocks, source="ocr_ingest")


# ------------------------------------------------------------- similarity

def text_similarity(r: str, g: str) -> float:
    """Dice coefficient over character-bigram multisets.

    Both strings empty -> 1.0; exactly one empty -> 0.0. Single-character
    operands fall back to character multisets.
    """
    if not r and not g:
        return 1.0
    if not r or not g:
        return 0.0
    if len(r) < 2 or len(g) < 2:
        a = Counter(r)
        b = Counter(g)
    else:
        a = Counter(r[i : i + 2] for i in range(len(r) - 1))
        b = Counter(g[i : i + 2] for i in range(len(g) - 1))
    inter = sum((a & b).values())
    return 2.0 * inter / (sum(a.values()) + sum(b.values()))


def _block_ciou(a: Block, b: Block) -> float:
    ra = Rect(a.box.l, a.box.t, a.box.w, a.box.h) if a.box.area > 0 else None
    rb = Rect(b.box.l, b.box.t, b.box.w, b.box.h) if b.box.area > 0 else None
    if ra is None or rb is None:
        return -2.0
    return ciou(ra, rb)


def match_blocks(
    reference: BlockSet,
    candidate: BlockSet,
    threshold: float = 0.5,
    image_ciou_threshold: float = 0.1,
) -> BlockMatching:
    """One-to-one alignment maximizing pair similarity.

    Pairs with text on both sides compare by text similarity (accepted at
    ``threshold``); textless image pairs compare by CIoU (accepted at
    ``image_ciou_threshold``); mixed pairs never match.
    """
    if not (0.0 < threshold < 1.0):
        raise SchemaError(f"matching threshold must be in (0, 1), got {threshold}")
    n, m = len(reference.blocks), len(candidate.blocks)
    if n == 0 or m == 0:
        return BlockMatching(
            pairs=[],
            unmatched_reference=list(range(n)),
            unmatched_candidate=list(range(m)),
        )

    sim = [[0.0] * m for _ in range(n)]
    accept = [[False] * m for _ in range(n)]
    cost = [[0.0] * m for _ in range(n)]
    for i, rb in enumerate(reference.blocks):
        for j, cb in enumerate(candidate.blocks):
            overlap = _block_ciou(rb, cb)
            if rb.text and cb.text:
                s = text_similarity(rb.text, cb.text)
                sim[i][j] = s
                accept[i][j] = s >= threshold
            elif rb.kind == "image" and cb.kind == "image":
                sim[i][j] = overlap
                accept[i][j] = overlap >= image_ciou_threshold
            # A tiny geometric term disambiguates equal-text ties so that
            # identical sets always align block-for-block.
            cost[i][j] = -(sim[i][j] + 1e-6 * overlap)

    pairs = []
    matched_r, matched_c = set(), set()
    for i, j in hungarian_min_cost(cost):
        if accept[i][j]:
            pairs.append((i, j, sim[i][j]))
            matched_r.add(i)
            matched_c.add(j)
    return BlockMatching(
        pairs=pairs,
        unmatched_reference=[i for i in range(n) if i not in matched_r],
        unmatched_candidate=[j for j in range(m) if j not in matched_c],
    )


# ----------------------------------------------------------- reward terms

def union_area(boxes: list[NormRect]) -> float:
    """Exact union area via coordinate-compressed cell sweep."""
    boxes = [b for b in boxes if b.area > 0]
    if not boxes:
        return 0.0
    xs = sorted({v for b in boxes for v in (b.l, b.r)})
    ys = sorted({v for b in boxes for v in (b.t, b.b)})
    total = 0.0
    for i in range(len(ys) - 1):
        cy = (ys[i] + ys[i + 1]) / 2.0
        for j in range(len(xs) - 1):
            cx = (xs[j] + xs[j + 1]) / 2.0
            if any(b.l <= cx <= b.r and b.t <= cy <= b.b for b in boxes):
                total += (xs[j + 1] - xs[j]) * (ys[i + 1] - ys[i])
    return total


def block_reward(
    matching: BlockMatching,
    reference: BlockSet,
    candidate: BlockSet,
    include_unmatched_candidates: bool = True,
) -> float:
    """Matched reference area over the union of all blocks, in [0, 1].

    Both sets empty -> 1.0. The union spans reference plus candidate
    blocks (optionally only matched candidates). Overlapping matched
    reference blocks could push the raw ratio past 1, so it is clamped.
    """
    if not reference.blocks and not candidate.blocks:
        return 1.0
    matched_area = sum(reference.blocks[i].box.area for i, _, _ in matching.pairs)
    union_boxes = [b.box for b in reference.blocks]
    if include_unmatched_candidates:
        union_boxes += [b.box for b in candidate.blocks]
    else:
        union_boxes += [candidate.blocks[j].box for _, j, _ in matching.pairs]
    denom = union_area(union_boxes)
    if denom <= 0.0:
        return 1.0 if matched_area <= 0.0 else 0.0
    return min(1.0, matched_area / denom)


def position_reward(ref_block: Block, cand_block: Block) -> float:
    """1 - Chebyshev distance between normalized block centers."""
    rx, ry = ref_block.box.center
    cx, cy = cand_block.box.center
    return 1.0 - max(abs(rx - cx), abs(ry - cy))


def _srgb_to_lab(rgb: tuple[float, float, float]) -> tuple[float, float, float]:
    def linearize(c: float) -> float:
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4

    r, g, b = (linearize(c) for c in rgb)
    x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b
    y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b
    z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b
    xn, yn, zn = 0.95047, 1.0, 1.08883

    def f(t: float) -> float:
        d = 6.0 / 29.0
        return t ** (1.0 / 3.0) if t > d**3 else t / (3 * d * d) + 4.0 / 29.0

    fx, fy, fz = f(x / xn), f(y / yn), f(z / zn)
    return (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))


def color_similarity(ref_block: Block, cand_block: Block) -> float:
    """1 - (CIELAB Euclidean distance / black-to-white distance), clamped."""
    la = _srgb_to_lab(ref_block.mean_color)
    lb = _srgb_to_lab(cand_block.mean_color)
    dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(la, lb)))
    return min(1.0, max(0.0, 1.0 - dist / 100.0))


def _mean_over_pairs(matching: BlockMatching, reference: BlockSet, candidate: BlockSet, fn) -> float:
    if not matching.pairs:
        return 1.0
    return sum(
        fn(reference.blocks[i], candidate.blocks[j]) for i, j, _ in matching.pairs
    ) / len(matching.pairs)


def composite_reward(
    r_block: float,
    r_text: float,
    r_pos: float,
    r_color: float,
    weights: tuple[float, float, float] = (0.4, 0.3, 0.3),
) -> RewardBreakdown:
    """Weighted sum of block/text/position; color reported but excluded."""
    if any(w < 0 for w in weights):
        raise SchemaError(f"weights must be non-negative: {weights}")
    composite = weights[0] * r_block + weights[1] * r_text + weights[2] * r_pos
    return RewardBreakdown(
        r_block=r_block,
        r_text=r_text,
        r_pos=r_pos,
        r_color=r_color,
        composite=composite,
        weights=weights,
    )


def evaluate_blocksets(
    reference: BlockSet,
    candidate: BlockSet,
    config: PipelineConfig | None = None,
) -> tuple[RewardBreakdown, BlockMatching]:
    """Match, score all four terms, and build the composite."""
    cfg = config or PipelineConfig()
    matching = match_blocks(
        reference,
        candidate,
        threshold=cfg.text_match_threshold,
        image_ciou_threshold=cfg.image_match_ciou_threshold,
    )
    r_block = block_reward(
        matching, reference, candidate, cfg.union_includes_unmatched_candidates
    )
    r_text = _mean_over_pairs(
        matching, reference, candidate, lambda a, b: text_similarity(a.text, b.text)
    )
    r_pos = _mean_over_pairs(matching, reference, candidate, position_reward)
    r_color = _mean_over_pairs(matching, reference, candidate, color_similarity)
    breakdown = composite_reward(r_block, r_text, r_pos, r_color, cfg.reward_weights)
    return breakdown, matching


def metrics_report(
    breakdown: RewardBreakdown,
    matching: BlockMatching,
    reference: BlockSet,
    candidate: BlockSet,
    clip_score: float | None = None,
) -> dict:
    return {
        "schema_version": 1,
        **breakdown.to_dict(),
        "matched_pairs": len(matching.pairs),
        "reference_blocks": len(reference.blocks),
        "candidate_blocks": len(candidate.blocks),
        "clip": clip_score,
    }
