"""Generation stage: layout tree -> constrained HTML document.

Each leaf node gets an adaptive prompt (label-specific template plus layout
context plus optional user instruction); fragments come from a generation
backend and are assembled into the document AST in tree order. A backend
failure on one node degrades to the deterministic template backend instead
of failing the pipeline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from screencoder.backends import GenerationBackend, TemplateGenerationBackend
from screencoder.config import PipelineConfig
from screencoder.docmodel import (
    MAX_GAP_STEP,
    MAX_GRID_COLS,
    GAP_STEP_FRAC,
    Element,
    GeneratedDocument,
    box_style,
    parse_fragment,
    render_html,
    sanitize_element,
)
from screencoder.errors import (
    BackendError,
    MissingFragmentError,
    SchemaError,
    UnknownLabelError,
    UnparseableFragmentError,
)
from screencoder.planning import LayoutNode, LayoutTree

log = logging.getLogger(__name__)

PROMPT_TEMPLATES = {
    "header": "Generate the page header: brand block on the left, horizontal actions on the right.",
    "sidebar": "Generate a vertical sidebar with stacked navigation entries.",
    "navigation": "Generate a horizontal navigation bar with menu items.",
    "main_content": "Generate the main content area with its primary blocks.",
    "container": "Generate a neutral layout container for nested content.",
}
GENERIC_TEMPLATE = "Generate the {label} region of the page."


@dataclass(frozen=True)
class ComponentPrompt:
    node_id: str
    label: str
    layout_context: str
    user_instruction: str | None
    template_id: str
    text: str


def _format_box(node: LayoutNode) -> str:
    b = node.box
    return f"(l={b.l:.4f}, t={b.t:.4f}, w={b.w:.4f}, h={b.h:.4f})"


def build_prompt(
    node: LayoutNode,
    instruction: str | None = None,
    config: PipelineConfig | None = None,
    neighbors: tuple[tuple[str, str], ...] = (),
    grid_cell: str | None = None,
) -> ComponentPrompt:
    """Adaptive prompt for one node: template by label, layout context,
    optional instruction appended verbatim at the end."""
    cfg = config or PipelineConfig()
    if node.label in PROMPT_TEMPLATES:
        template_id = node.label
        guidance = PROMPT_TEMPLATES[node.label]
    elif cfg.allow_generic_template:
        template_id = "generic"
        guidance = GENERIC_TEMPLATE.format(label=node.label)
    else:
        raise UnknownLabelError(f"no prompt template for label {node.label!r}")

    context_parts = [f"Region '{node.label}' occupies normalized box {_format_box(node)} of the page."]
    if grid_cell:
        context_parts.append(f"It sits in grid cell {grid_cell}.")
    if neighbors:
        listed = "; ".join(f"{label} at {box}" for label, box in neighbors)
        context_parts.append(f"Neighboring regions: {listed}.")
    layout_context = " ".join(context_parts)

    text = f"{guidance}\nLayout context: {layout_context}"
    if instruction:
        text = f"{text}\nUser instruction: {instruction}"
    return ComponentPrompt(
        node_id=node.id,
        label=node.label,
        layout_context=layout_context,
        user_instruction=instruction,
        template_id=template_id,
        text=text,
    )


def generate_component(
    prompt: ComponentPrompt,
    backend: GenerationBackend,
    image_b64: str | None = None,
) -> Element:
    """Fetch and sanitize one fragment; the root carries the node reference.

    Raises BackendError (retryable) or UnparseableFragmentError; the batch
    driver catches both and substitutes the template backend.
    """
    markup = backend.generate(prompt, image_b64)
    roots = [sanitize_element(el) for el in parse_fragment(markup)]
    if len(roots) == 1:
        root = roots[0]
    else:
        root = Element(tag="div", children=roots)
    root.node_ref = prompt.node_id
    return root


def leaf_nodes(tree: LayoutTree) -> list[LayoutNode]:
    """Nodes that need a generated fragment (leaves; the root never does)."""
    return [n for n in tree.iter_nodes() if n.is_leaf() and n.id != tree.root.id]


def _region_crop_b64(image, node: LayoutNode, page_size: tuple[int, int]) -> str | None:
    """Base64 PNG of the node's region, for backends that accept images."""
    from screencoder.imaging import image_to_b64, png_bytes

    page_w, page_h = page_size
    box = node.box.to_pixels(page_w, page_h)
    x1, y1 = int(box.x), int(box.y)
    x2, y2 = min(image.width, int(box.x2) + 1), min(image.height, int(box.y2) + 1)
    if x2 - x1 < 1 or y2 - y1 < 1:
        return None
    return image_to_b64(png_bytes(image.crop((x1, y1, x2, y2))))


def generate_all(
    tree: LayoutTree,
    backend: GenerationBackend,
    instructions: dict[str, str] | None = None,
    config: PipelineConfig | None = None,
    image=None,
) -> tuple[dict[str, Element], list[dict]]:
    """Generate fragments for every leaf node with per-node degradation.

    When ``image`` (a PIL image) is given, each request carries the crop
    of that node's region. Returns (fragments by node id, per-node report
    rows).
    """
    cfg = config or PipelineConfig()
    instructions = instructions or {}
    template = TemplateGenerationBackend()
    top_level = {n.id: n for n in tree.root.children}

    fragments: dict[str, Element] = {}
    report: list[dict] = []
    for node in leaf_nodes(tree):
        neighbors = tuple(
            (sib.label, _format_box(sib))
            for sib in tree.root.children
            if sib.id != node.id and node.id in top_level
        )
        prompt = build_prompt(node, instructions.get(node.id), cfg, neighbors=neighbors)
        region_b64 = _region_crop_b64(image, node, tree.page_size) if image is not None else None
        row = {
            "node_id": node.id,
            "label": node.label,
            "template_id": prompt.template_id,
            "backend": backend.name,
            "status": "ok",
            "error": None,
        }
        try:
            fragments[node.id] = generate_component(prompt, backend, region_b64)
        except (BackendError, UnparseableFragmentError) as exc:
            log.warning("node %s degraded to template backend: %s", node.id, exc)
            fragments[node.id] = generate_component(prompt, template)
            row["backend"] = template.name
            row["status"] = "substituted"
            row["error"] = str(exc)
        report.append(row)
    return fragments, report


# ---------------------------------------------------------------- assembly

def _gap_class(gap: float) -> str:
    step = min(MAX_GAP_STEP, max(0, round(gap / GAP_STEP_FRAC)))
    return f"gap-{step}"


def _cols_class(columns: int) -> str:
    return f"grid-cols-{min(MAX_GRID_COLS, max(1, columns))}"


def _node_element(node: LayoutNode, fragments: dict[str, Element], top_level: bool) -> Element:
    if node.is_leaf():
        el = fragments[node.id].clone()
        el.node_ref = node.id
    else:
        grid = node.grid
        container = Element(
            tag="div",
            classes=[
                "container",
                "grid",
                _cols_class(grid.columns if grid else 1),
                _gap_class(grid.gap if grid else 0.0),
            ],
        )
        for child in sorted(node.children, key=lambda c: c.order_index):
            container.children.append(_node_element(child, fragments, top_level=False))
        el = Element(tag="div", children=[container])
        el.node_ref = node.id

    if top_level:
        if "box" not in el.classes:
            el.classes = ["box", *el.classes]
        b = node.box
        position = box_style(b.l, b.t, b.w, b.h)
        # geometry always wins over whatever the fragment declared
        el.style = {**position, **{k: v for k, v in el.style.items() if k not in position}}
    return el


def assemble(tree: LayoutTree, fragments: dict[str, Element]) -> GeneratedDocument:
    """Fold fragments into the page document in tree order.

    Top-level nodes become absolutely positioned ``.box`` elements with
    inline percentage styles; nodes with children wrap them in a
    ``container grid`` with column/gap utilities from their GridConfig.
    """
    needed = {n.id for n in leaf_nodes(tree)}
    missing = sorted(needed - set(fragments))
    if missing:
        raise MissingFragmentError(missing)

    root = Element(
        tag="div",
        classes=["root"],
        style={"position": "relative", "width": "100%", "height": "100%"},
    )
    root.node_ref = tree.root.id
    root.attrs["data-page-size"] = f"{tree.page_size[0]}x{tree.page_size[1]}"
    for node in sorted(tree.root.children, key=lambda n: n.order_index):
        root.children.append(_node_element(node, fragments, top_level=True))

    doc = GeneratedDocument(root=root, page_size=tree.page_size)
    validate_document(doc, tree)
    return doc


def validate_document(doc: GeneratedDocument, tree: LayoutTree | None = None):
    """Check the document invariants (one root, unique node references)."""
    style = doc.root.style
    if style.get("position") != "relative" or style.get("width") != "100%" or style.get("height") != "100%":
        raise SchemaError("document root must carry position: relative; width: 100%; height: 100%")
    refs: dict[str, int] = {}
    for _, el in doc.iter_elements():
        if el.node_ref is not None:
            refs[el.node_ref] = refs.get(el.node_ref, 0) + 1
    duplicated = sorted(r for r, n in refs.items() if n > 1)
    if duplicated:
        raise SchemaError(f"nodes referenced by multiple elements: {', '.join(duplicated)}")
    if tree is not None:
        unreferenced = sorted(n.id for n in tree.iter_nodes() if refs.get(n.id, 0) != 1)
        if unreferenced:
            raise SchemaError(f"tree nodes not referenced exactly once: {', '.join(unreferenced)}")


__all__ = [
    "ComponentPrompt",
    "PROMPT_TEMPLATES",
    "assemble",
    "build_prompt",
    "generate_all",
    "generate_component",
    "leaf_nodes",
    "render_html",
    "validate_document",
]
