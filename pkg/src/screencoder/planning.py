"""Planning stage: layout dictionary -> hierarchical layout tree.

Pixel boxes are normalized against the page, top-level regions are ordered
by reading order (top-to-bottom with row banding, then left-to-right), and
containers with children get a grid configuration inferred from child edge
alignment. The tree serializes to a canonical, versioned JSON document.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field

from screencoder.config import PipelineConfig
from screencoder.errors import DegenerateChildrenError, SchemaError
from screencoder.geometry import NORM_EPS, NormRect
from screencoder.grounding import LayoutMap

TREE_SCHEMA_VERSION = 1


@dataclass
class CellSpan:
    col_start: int
    row_start: int
    col_span: int = 1
    row_span: int = 1

    def footprint(self) -> set[tuple[int, int]]:
        return {
            (c, r)
            for c in range(self.col_start, self.col_start + self.col_span)
            for r in range(self.row_start, self.row_start + self.row_span)
        }


@dataclass
class GridConfig:
    columns: int
    rows: int
    gap: float = 0.0  # fraction of container width
    cells: dict[str, CellSpan] = field(default_factory=dict)

    def validate(self):
        if self.columns < 1 or self.rows < 1:
            raise SchemaError(f"grid must have positive tracks, got {self.columns}x{self.rows}")
        seen: set[tuple[int, int]] = set()
        for child_id, span in self.cells.items():
            if span.col_start < 0 or span.row_start < 0 or span.col_span < 1 or span.row_span < 1:
                raise SchemaError(f"bad cell span for {child_id!r}")
            if span.col_start + span.col_span > self.columns or span.row_start + span.row_span > self.rows:
                raise SchemaError(f"cell span for {child_id!r} exceeds grid bounds")
            footprint = span.footprint()
            if footprint & seen:
                raise SchemaError(f"cell footprint of {child_id!r} overlaps a sibling")
            seen |= footprint


@dataclass
class LayoutNode:
    id: str
    label: str
    box: NormRect
    order_index: int = 0
    grid: GridConfig | None = None
    children: list["LayoutNode"] = field(default_factory=list)

    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class LayoutTree:
    root: LayoutNode
    page_size: tuple[int, int]

    def iter_nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def find(self, node_id: str) -> LayoutNode | None:
        for node in self.iter_nodes():
            if node.id == node_id:
                return node
        return None

    def validate(self):
        ids: set[str] = set()
        for node in self.iter_nodes():
            if node.id in ids:
                raise SchemaError(f"duplicate node id {node.id!r}")
            ids.add(node.id)
            orders = sorted(c.order_index for c in node.children)
            if orders != list(range(len(node.children))):
                raise SchemaError(f"children of {node.id!r} have non-dense order indexes {orders}")
            for child in node.children:
                if not node.box.contains(child.box, eps=NORM_EPS):
                    raise SchemaError(f"child {child.id!r} escapes parent {node.id!r}")
            if node.grid is not None:
                node.grid.validate()
                child_ids = {c.id for c in node.children}
                for cid in node.grid.cells:
                    if cid not in child_ids:
                        raise SchemaError(f"grid cell references unknown child {cid!r}")
        if self.root.box != NormRect(0.0, 0.0, 1.0, 1.0):
            raise SchemaError("root must cover the full viewport")


# ------------------------------------------------------------ tree build

def _reading_order(entries: list[tuple[str, NormRect]], band_tol: float) -> list[str]:
    """Total order: top-to-bottom rows (with banding tolerance), then
    left-to-right, ties broken by label. Permutation-invariant because it
    sorts before banding."""
    ordered = sorted(entries, key=lambda e: (e[1].t, e[1].l, e[0]))
    bands: list[list[tuple[str, NormRect]]] = []
    anchor = None
    for label, box in ordered:
        if anchor is not None and box.t - anchor <= band_tol:
            bands[-1].append((label, box))
        else:
            bands.append([(label, box)])
            anchor = box.t
    result = []
    for band in bands:
        band.sort(key=lambda e: (e[1].l, e[0]))
        result.extend(label for label, _ in band)
    return result


def build_tree(
    layout: LayoutMap,
    config: PipelineConfig | None = None,
    subdividable: tuple[str, ...] = (),
) -> LayoutTree:
    """Normalize the layout dictionary into a tree with reading order.

    Labels in ``subdividable`` get an empty grid container child, ready for
    later subdivision; the planner itself never invents content children.
    """
    cfg = config or PipelineConfig()
    layout.validate()
    page_w, page_h = layout.page_size

    norm_entries = [
        (label, NormRect.from_pixels(entry.box, page_w, page_h))
        for label, entry in layout.entries.items()
    ]
    order = _reading_order(norm_entries, cfg.row_band_tolerance)
    rank = {label: i for i, label in enumerate(order)}

    root = LayoutNode(id="root", label="container", box=NormRect(0.0, 0.0, 1.0, 1.0))
    for label, box in sorted(norm_entries, key=lambda e: rank[e[0]]):
        node = LayoutNode(id=f"node-{label}", label=label, box=box, order_index=rank[label])
        if label in subdividable:
            inner = LayoutNode(id=f"{node.id}-grid", label="container", box=box, order_index=0)
            node.children.append(inner)
            node.grid = GridConfig(columns=1, rows=1, cells={inner.id: CellSpan(0, 0)})
        root.children.append(node)

    tree = LayoutTree(root=root, page_size=(page_w, page_h))
    tree.validate()
    return tree


# ------------------------------------------------------------- grid infer

def _cluster_values(values: list[float], tol: float) -> list[float]:
    """Merge sorted values within ``tol`` of the running cluster mean."""
    reps: list[float] = []
    members: list[list[float]] = []
    for v in sorted(values):
        if reps and v - reps[-1] <= tol:
            members[-1].append(v)
            reps[-1] = sum(members[-1]) / len(members[-1])
        else:
            reps.append(v)
            members.append([v])
    return reps


def _nearest_index(reps: list[float], value: float) -> int:
    return min(range(len(reps)), key=lambda i: (abs(reps[i] - value), i))


def _axis_tracks(
    child_spans: list[tuple[float, float]],
    lo: float,
    hi: float,
    tol: float,
) -> tuple[list[tuple[float, float]], list[tuple[int, int]], list[float]]:
    """Derive occupied tracks on one axis.

    Returns (track intervals, per-child (start, span) over those tracks,
    gutter widths between occupied tracks).
    """
    boundaries = _cluster_values(
        [lo, hi, *(v for span in child_spans for v in span)], tol
    )
    ntracks = len(boundaries) - 1
    occupied = [False] * ntracks
    snapped = []
    for start, end in child_spans:
        si = _nearest_index(boundaries, start)
        ei = _nearest_index(boundaries, end)
        ei = max(ei, si + 1)
        snapped.append((si, ei))
        for t in range(si, ei):
            occupied[t] = True

    track_idx = [t for t in range(ntracks) if occupied[t]]
    gutters = []
    for a, b in zip(track_idx, track_idx[1:]):
        if b > a + 1:
            gutters.append(boundaries[b] - boundaries[a + 1])
    remap = {t: i for i, t in enumerate(track_idx)}
    cells = []
    for si, ei in snapped:
        covered = [remap[t] for t in range(si, ei) if t in remap]
        cells.append((covered[0], covered[-1] - covered[0] + 1))
    tracks = [(boundaries[t], boundaries[t + 1]) for t in track_idx]
    return tracks, cells, gutters


def infer_grid(
    container: LayoutNode,
    child_boxes: list[NormRect],
    config: PipelineConfig | None = None,
) -> GridConfig:
    """Cluster child edges into column/row tracks and assign minimal spans.

    Gutter strips between occupied tracks become the grid gap (median
    spacing, as a fraction of container width).
    """
    cfg = config or PipelineConfig()
    for i, box in enumerate(child_boxes):
        if box.area <= 0.0:
            raise DegenerateChildrenError(f"child {i} has zero area after normalization")
        if not container.box.contains(box):
            raise SchemaError(f"child {i} lies outside container {container.id!r}")

    tol = cfg.track_merge_tolerance
    c = container.box
    _, col_cells, col_gutters = _axis_tracks(
        [(b.l, b.r) for b in child_boxes], c.l, c.r, tol
    )
    _, row_cells, row_gutters = _axis_tracks(
        [(b.t, b.b) for b in child_boxes], c.t, c.b, tol
    )

    columns = max(start + span for start, span in col_cells)
    rows = max(start + span for start, span in row_cells)
    gutters = col_gutters + row_gutters
    gap = round(statistics.median(gutters) / c.w, 6) if gutters and c.w > 0 else 0.0

    cells = {
        f"cell-{i}": CellSpan(cs, rs, cspan, rspan)
        for i, ((cs, cspan), (rs, rspan)) in enumerate(zip(col_cells, row_cells))
    }
    grid = GridConfig(columns=columns, rows=rows, gap=gap, cells=cells)
    grid.validate()
    return grid


def subdivide(
    node: LayoutNode,
    child_boxes: list[NormRect],
    labels: list[str] | None = None,
    config: PipelineConfig | None = None,
) -> LayoutNode:
    """Attach children to ``node`` and infer its grid from their boxes.

    Children are ordered row-major by their grid cell.
    """
    grid = infer_grid(node, child_boxes, config)
    spans = list(grid.cells.values())
    order = sorted(
        range(len(child_boxes)),
        key=lambda i: (spans[i].row_start, spans[i].col_start, i),
    )
    children = []
    cells: dict[str, CellSpan] = {}
    for order_index, i in enumerate(order):
        child_id = f"{node.id}-c{order_index}"
        label = labels[i] if labels else "container"
        children.append(
            LayoutNode(id=child_id, label=label, box=child_boxes[i], order_index=order_index)
        )
        cells[child_id] = spans[i]
    node.children = children
    node.grid = GridConfig(columns=grid.columns, rows=grid.rows, gap=grid.gap, cells=cells)
    node.grid.validate()
    return node


# ---------------------------------------------------------- serialization

def _node_to_dict(node: LayoutNode) -> dict:
    grid = None
    if node.grid is not None:
        grid = {
            "columns": node.grid.columns,
            "rows": node.grid.rows,
            "gap": round(node.grid.gap, 6),
            "cells": {
                cid: {
                    "col_start": span.col_start,
                    "row_start": span.row_start,
                    "col_span": span.col_span,
                    "row_span": span.row_span,
                }
                for cid, span in node.grid.cells.items()
            },
        }
    return {
        "id": node.id,
        "label": node.label,
        "box": [node.box.l, node.box.t, node.box.w, node.box.h],
        "order_index": node.order_index,
        "grid": grid,
        "children": [_node_to_dict(c) for c in node.children],
    }


def tree_to_dict(tree: LayoutTree) -> dict:
    return {
        "schema_version": TREE_SCHEMA_VERSION,
        "page_size": [tree.page_size[0], tree.page_size[1]],
        "root": _node_to_dict(tree.root),
    }


def serialize_tree(tree: LayoutTree) -> str:
    """Canonical JSON: fixed field order, 6-decimal boxes, trailing newline."""
    tree.validate()
    return json.dumps(tree_to_dict(tree), indent=2, ensure_ascii=False) + "\n"


def _node_from_dict(d: dict) -> LayoutNode:
    try:
        box = d["box"]
        node = LayoutNode(
            id=str(d["id"]),
            label=str(d["label"]),
            box=NormRect(float(box[0]), float(box[1]), float(box[2]), float(box[3])),
            order_index=int(d["order_index"]),
        )
        grid = d.get("grid")
        if grid is not None:
            node.grid = GridConfig(
                columns=int(grid["columns"]),
                rows=int(grid["rows"]),
                gap=float(grid.get("gap", 0.0)),
                cells={
                    cid: CellSpan(
                        col_start=int(cell["col_start"]),
                        row_start=int(cell["row_start"]),
                        col_span=int(cell["col_span"]),
                        row_span=int(cell["row_span"]),
                    )
                    for cid, cell in grid.get("cells", {}).items()
                },
            )
        node.children = [_node_from_dict(c) for c in d.get("children", [])]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed tree node: {exc}") from exc
    return node


def tree_from_dict(d: dict) -> LayoutTree:
    if d.get("schema_version") != TREE_SCHEMA_VERSION:
        raise SchemaError(f"unsupported tree schema_version {d.get('schema_version')!r}")
    try:
        w, h = d["page_size"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed tree document: {exc}") from exc
    tree = LayoutTree(root=_node_from_dict(d["root"]), page_size=(int(w), int(h)))
    tree.validate()
    return tree


def parse_tree(text: str) -> LayoutTree:
    try:
        payload = json.loads(text)
    except ValueError as exc:
        raise SchemaError(f"tree document is not valid JSON: {exc}") from exc
    return tree_from_dict(payload)
