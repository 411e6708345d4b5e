import json
import random

import pytest

from conftest import layout_from_boxes
from screencoder.config import PipelineConfig
from screencoder.errors import DegenerateChildrenError, SchemaError
from screencoder.geometry import NormRect, Rect
from screencoder.planning import (
    CellSpan,
    GridConfig,
    LayoutNode,
    LayoutTree,
    build_tree,
    infer_grid,
    parse_tree,
    serialize_tree,
    subdivide,
    tree_to_dict,
)


def test_build_tree_normalizes_boxes():
    layout = layout_from_boxes(
        (1000, 800),
        {"header": Rect(0, 0, 1000, 100), "main_content": Rect(0, 100, 1000, 700)},
    )
    tree = build_tree(layout)
    header, main = tree.root.children
    assert header.box == NormRect(0.0, 0.0, 1.0, 0.125)
    assert header.order_index == 0
    assert main.box == NormRect(0.0, 0.125, 1.0, 0.875)
    assert main.order_index == 1


def test_build_tree_reading_order_with_row_banding():
    layout = layout_from_boxes(
        (1000, 800),
        {
            "header": Rect(0, 0, 1000, 80),
            "sidebar": Rect(0, 96, 200, 704),
            "main_content": Rect(200, 100, 800, 700),  # 4px below sidebar top: same band
        },
    )
    tree = build_tree(layout)
    labels = [n.label for n in sorted(tree.root.children, key=lambda n: n.order_index)]
    assert labels == ["header", "sidebar", "main_content"]


def test_build_tree_order_invariant_under_entry_permutation():
    rng = random.Random(5)
    boxes = {
        "header": Rect(0, 0, 1000, 80),
        "navigation": Rect(200, 80, 800, 60),
        "sidebar": Rect(0, 80, 200, 720),
        "main_content": Rect(200, 140, 800, 660),
    }
    base = None
    for _ in range(6):
        items = list(boxes.items())
        rng.shuffle(items)
        layout = layout_from_boxes((1000, 800), dict(items))
        order = [
            n.label for n in sorted(build_tree(layout).root.children, key=lambda n: n.order_index)
        ]
        if base is None:
            base = order
        assert order == base
    assert base == ["header", "sidebar", "navigation", "main_content"]


def test_build_tree_empty_layout():
    layout = layout_from_boxes((640, 480), {})
    tree = build_tree(layout)
    assert tree.root.children == []


def test_build_tree_denormalization_within_half_pixel():
    rng = random.Random(11)
    for _ in range(50):
        page_w = rng.randrange(300, 2000)
        page_h = rng.randrange(300, 2000)
        w = rng.randrange(10, page_w)
        h = rng.randrange(10, page_h)
        box = Rect(rng.randrange(0, page_w - w + 1), rng.randrange(0, page_h - h + 1), w, h)
        layout = layout_from_boxes((page_w, page_h), {"header": box})
        node = build_tree(layout).root.children[0]
        back = node.box.to_pixels(page_w, page_h)
        for got, want in zip(back.as_tuple(), box.as_tuple()):
            assert abs(got - want) <= 0.5


def test_build_tree_subdividable_gets_container():
    layout = layout_from_boxes((640, 480), {"main_content": Rect(0, 0, 640, 480)})
    tree = build_tree(layout, subdividable=("main_content",))
    main = tree.root.children[0]
    assert main.grid is not None
    assert len(main.children) == 1
    assert main.children[0].label == "container"


# ------------------------------------------------------------- infer_grid

def _container(box=NormRect(0.0, 0.0, 1.0, 1.0)) -> LayoutNode:
    return LayoutNode(id="c", label="container", box=box)


def test_infer_grid_three_columns():
    children = [
        NormRect(0.0, 0.0, 1 / 3, 1.0),
        NormRect(1 / 3, 0.0, 1 / 3, 1.0),
        NormRect(2 / 3, 0.0, 1 / 3, 1.0),
    ]
    grid = infer_grid(_container(), children)
    assert (grid.columns, grid.rows) == (3, 1)
    spans = list(grid.cells.values())
    assert [(s.col_start, s.col_span) for s in spans] == [(0, 1), (1, 1), (2, 1)]
    assert grid.gap == 0.0


def test_infer_grid_single_child():
    grid = infer_grid(_container(), [NormRect(0.0, 0.0, 1.0, 1.0)])
    assert (grid.columns, grid.rows) == (1, 1)


def test_infer_grid_two_by_two():
    children = [
        NormRect(0.0, 0.0, 0.5, 0.5),
        NormRect(0.5, 0.0, 0.5, 0.5),
        NormRect(0.0, 0.5, 0.5, 0.5),
        NormRect(0.5, 0.5, 0.5, 0.5),
    ]
    grid = infer_grid(_container(), children)
    assert (grid.columns, grid.rows) == (2, 2)
    footprints = [
        (s.col_start, s.row_start, s.col_span, s.row_span) for s in grid.cells.values()
    ]
    assert sorted(footprints) == [(0, 0, 1, 1), (0, 1, 1, 1), (1, 0, 1, 1), (1, 1, 1, 1)]


def test_infer_grid_gutters_become_gap():
    children = [
        NormRect(0.0, 0.0, 0.3, 1.0),
        NormRect(0.35, 0.0, 0.3, 1.0),
        NormRect(0.7, 0.0, 0.3, 1.0),
    ]
    grid = infer_grid(_container(), children)
    assert (grid.columns, grid.rows) == (3, 1)
    assert grid.gap == pytest.approx(0.05, abs=1e-6)


def test_infer_grid_spanning_child():
    children = [
        NormRect(0.0, 0.0, 1.0, 0.5),  # full-width banner spans both columns
        NormRect(0.0, 0.5, 0.5, 0.5),
        NormRect(0.5, 0.5, 0.5, 0.5),
    ]
    grid = infer_grid(_container(), children)
    assert (grid.columns, grid.rows) == (2, 2)
    banner = grid.cells["cell-0"]
    assert (banner.col_start, banner.col_span) == (0, 2)


def test_infer_grid_rejects_zero_area_child():
    with pytest.raises(DegenerateChildrenError):
        infer_grid(_container(), [NormRect(0.0, 0.0, 0.0, 1.0)])


def test_infer_grid_edge_jitter_absorbed():
    # edges off by less than the 1% merge tolerance collapse to shared tracks
    children = [
        NormRect(0.0, 0.0, 0.334, 1.0),
        NormRect(0.336, 0.0, 0.33, 1.0),
        NormRect(0.669, 0.0, 0.331, 1.0),
    ]
    grid = infer_grid(_container(), children)
    assert (grid.columns, grid.rows) == (3, 1)


def test_subdivide_orders_children_row_major():
    node = LayoutNode(id="n", label="main_content", box=NormRect(0.0, 0.0, 1.0, 1.0))
    boxes = [
        NormRect(0.5, 0.5, 0.5, 0.5),
        NormRect(0.0, 0.0, 0.5, 0.5),
        NormRect(0.5, 0.0, 0.5, 0.5),
        NormRect(0.0, 0.5, 0.5, 0.5),
    ]
    subdivide(node, boxes)
    assert [c.order_index for c in node.children] == [0, 1, 2, 3]
    cells = node.grid.cells
    first = cells[node.children[0].id]
    assert (first.row_start, first.col_start) == (0, 0)


# ------------------------------------------------------- serialize / parse

def _random_tree(rng: random.Random) -> LayoutTree:
    root = LayoutNode(id="root", label="container", box=NormRect(0.0, 0.0, 1.0, 1.0))
    labels = ["header", "sidebar", "navigation", "main_content"]
    n = rng.randint(0, 4)
    y = 0.0
    for i in range(n):
        h = round(rng.uniform(0.05, (1.0 - y) / (n - i + 1)), 6)
        node = LayoutNode(
            id=f"node-{labels[i]}",
            label=labels[i],
            box=NormRect(0.0, round(y, 6), 1.0, h),
            order_index=i,
        )
        if rng.random() < 0.4:
            cols = rng.randint(1, 3)
            node.grid = GridConfig(columns=cols, rows=1)
            for c in range(cols):
                cw = round(1.0 / cols, 6)
                child = LayoutNode(
                    id=f"{node.id}-c{c}",
                    label="container",
                    box=NormRect(round(c * cw, 6), round(y, 6), cw, h),
                    order_index=c,
                )
                node.children.append(child)
                node.grid.cells[child.id] = CellSpan(c, 0)
        root.children.append(node)
        y = round(y + h + 0.01, 6)
    return LayoutTree(root=root, page_size=(rng.randrange(300, 1500), rng.randrange(300, 1500)))


def test_serialize_root_only():
    tree = LayoutTree(
        root=LayoutNode(id="root", label="container", box=NormRect(0.0, 0.0, 1.0, 1.0)),
        page_size=(640, 480),
    )
    doc = json.loads(serialize_tree(tree))
    assert doc["schema_version"] == 1
    assert doc["root"]["children"] == []


def test_serialize_parse_round_trip_random_trees():
    rng = random.Random(2)
    for _ in range(40):
        tree = _random_tree(rng)
        text = serialize_tree(tree)
        again = parse_tree(text)
        assert serialize_tree(again) == text
        assert tree_to_dict(again) == tree_to_dict(tree)


def test_parse_rejects_overlapping_sibling_cells():
    tree = _random_tree(random.Random(4))
    node = LayoutNode(id="node-x", label="main_content", box=NormRect(0.0, 0.0, 1.0, 1.0))
    a = LayoutNode(id="a", label="container", box=NormRect(0.0, 0.0, 0.5, 1.0), order_index=0)
    b = LayoutNode(id="b", label="container", box=NormRect(0.5, 0.0, 0.5, 1.0), order_index=1)
    node.children = [a, b]
    node.grid = GridConfig(columns=2, rows=1, cells={"a": CellSpan(0, 0), "b": CellSpan(0, 0)})
    tree.root.children = [node]
    node.order_index = 0
    text = json.dumps(
        {
            "schema_version": 1,
            "page_size": [640, 480],
            "root": {
                "id": "root",
                "label": "container",
                "box": [0, 0, 1, 1],
                "order_index": 0,
                "grid": None,
                "children": [
                    {
                        "id": "node-x",
                        "label": "main_content",
                        "box": [0, 0, 1, 1],
                        "order_index": 0,
                        "grid": {
                            "columns": 2,
                            "rows": 1,
                            "gap": 0,
                            "cells": {"a": {"col_start": 0, "row_start": 0, "col_span": 1, "row_span": 1},
                                      "b": {"col_start": 0, "row_start": 0, "col_span": 1, "row_span": 1}},
                        },
                        "children": [
                            {"id": "a", "label": "container", "box": [0, 0, 0.5, 1], "order_index": 0,
                             "grid": None, "children": []},
                            {"id": "b", "label": "container", "box": [0.5, 0, 0.5, 1], "order_index": 1,
                             "grid": None, "children": []},
                        ],
                    }
                ],
            },
        }
    )
    with pytest.raises(SchemaError):
        parse_tree(text)


def test_parse_rejects_child_escaping_parent():
    text = json.dumps(
        {
            "schema_version": 1,
            "page_size": [640, 480],
            "root": {
                "id": "root", "label": "container", "box": [0, 0, 1, 1], "order_index": 0,
                "grid": None,
                "children": [
                    {"id": "n", "label": "header", "box": [0, 0, 0.5, 0.5], "order_index": 0,
                     "grid": None,
                     "children": [
                         {"id": "m", "label": "container", "box": [0.4, 0.4, 0.5, 0.5],
                          "order_index": 0, "grid": None, "children": []}
                     ]},
                ],
            },
        }
    )
    with pytest.raises(SchemaError):
        parse_tree(text)


def test_parse_rejects_garbage():
    with pytest.raises(SchemaError):
        parse_tree("not json at all")
    with pytest.raises(SchemaError):
        parse_tree(json.dumps({"schema_version": 99}))
