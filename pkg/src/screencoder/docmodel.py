"""Constrained HTML document model.

The generated pages use a frozen vocabulary the layout resolver can
interpret without a browser: a relative root, absolutely positioned
``.box`` regions with inline percentage styles, ``.container.grid``
wrappers with ``grid-cols-*`` / ``gap-*`` utilities, and ``bg-gray-*``
fills. This module owns the element AST plus deterministic serialization,
parsing, and sanitization.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Iterator

from screencoder.errors import UnparseableFragmentError

MAX_GRID_COLS = 12
MAX_GAP_STEP = 8
GAP_STEP_FRAC = 0.005  # gap-k spans k * 0.5% of the container width

# Gray fill palette (Tailwind values), the only colors the emitters use.
GRAY_PALETTE = {
    100: "#f3f4f6",
    200: "#e5e7eb",
    300: "#d1d5db",
    400: "#9ca3af",
    500: "#6b7280",
    600: "#4b5563",
    700: "#374151",
    800: "#1f2937",
    900: "#111827",
}

PLACEHOLDER_CLASS = "placeholder"
VOID_TAGS = {"img", "br", "hr", "input", "meta", "link", "source"}

_GRID_COLS_RE = re.compile(r"^grid-cols-(\d+)$")
_GAP_RE = re.compile(r"^gap-(\d+)$")
_BG_GRAY_RE = re.compile(r"^bg-gray-(\d00)$")


@dataclass
class Element:
    """One node of the document AST."""

    tag: str = "div"
    classes: list[str] = field(default_factory=list)
    style: dict[str, str] = field(default_factory=dict)
    attrs: dict[str, str] = field(default_factory=dict)
    text: str = ""
    children: list["Element"] = field(default_factory=list)

    @property
    def node_ref(self) -> str | None:
        return self.attrs.get("data-node")

    @node_ref.setter
    def node_ref(self, value: str | None):
        if value is None:
            self.attrs.pop("data-node", None)
        else:
            self.attrs["data-node"] = value

    @property
    def placeholder(self) -> bool:
        return PLACEHOLDER_CLASS in self.classes

    def has_class(self, name: str) -> bool:
        return name in self.classes

    def grid_columns(self) -> int | None:
        for cls in self.classes:
            m = _GRID_COLS_RE.match(cls)
            if m:
                return max(1, min(MAX_GRID_COLS, int(m.group(1))))
        return None

    def gap_step(self) -> int:
        for cls in self.classes:
            m = _GAP_RE.match(cls)
            if m:
                return max(0, min(MAX_GAP_STEP, int(m.group(1))))
        return 0

    def bg_gray(self) -> str | None:
        for cls in self.classes:
            m = _BG_GRAY_RE.match(cls)
            if m and int(m.group(1)) in GRAY_PALETTE:
                return GRAY_PALETTE[int(m.group(1))]
        return None

    def clone(self) -> "Element":
        return Element(
            tag=self.tag,
            classes=list(self.classes),
            style=dict(self.style),
            attrs=dict(self.attrs),
            text=self.text,
            children=[c.clone() for c in self.children],
        )


@dataclass
class GeneratedDocument:
    """A constrained page: one relative root plus the region tree."""

    root: Element
    page_size: tuple[int, int]

    def iter_elements(self) -> Iterator[tuple[str, Element]]:
        """Depth-first (path, element) pairs; paths like '0/2/1'."""

        def walk(el: Element, path: str):
            yield path, el
            for i, child in enumerate(el.children):
                yield from walk(child, f"{path}/{i}")

        yield from walk(self.root, "0")

    def find_by_node_ref(self, node_id: str) -> Element | None:
        for _, el in self.iter_elements():
            if el.node_ref == node_id:
                return el
        return None

    def clone(self) -> "GeneratedDocument":
        return GeneratedDocument(root=self.root.clone(), page_size=self.page_size)


# --------------------------------------------------------------- formatting

def fmt_pct(fraction: float) -> str:
    """Percentage at 2 decimals; integral values drop the decimals."""
    value = round(fraction * 100.0, 2)
    if value == int(value):
        return f"{int(value)}%"
    return f"{value:.2f}%"


def parse_pct(text: str) -> float:
    """Inverse of fmt_pct: '12.50%' -> 0.125."""
    text = text.strip()
    if not text.endswith("%"):
        raise ValueError(f"not a percentage: {text!r}")
    return float(text[:-1]) / 100.0


def box_style(l: float, t: float, w: float, h: float) -> dict[str, str]:
    return {
        "left": fmt_pct(l),
        "top": fmt_pct(t),
        "width": fmt_pct(w),
        "height": fmt_pct(h),
    }


# ------------------------------------------------------------ serialization

def _stylesheet() -> str:
    lines = [
        "html, body { margin: 0; padding: 0; width: 100%; height: 100%; }",
        ".root { position: relative; width: 100%; height: 100%; }",
        ".box { position: absolute; overflow: hidden; }",
        ".box > .container { display: grid; }",
        ".container.grid { width: 100%; height: 100%; }",
        f".{PLACEHOLDER_CLASS} {{ width: 100%; height: 100%; }}",
        "img { display: block; width: 100%; height: 100%; object-fit: cover; }",
    ]
    for k in range(1, MAX_GRID_COLS + 1):
        lines.append(f".grid-cols-{k} {{ grid-template-columns: repeat({k}, minmax(0, 1fr)); }}")
    for k in range(0, MAX_GAP_STEP + 1):
        lines.append(f".gap-{k} {{ gap: {fmt_pct(k * GAP_STEP_FRAC)}; }}")
    for shade, color in GRAY_PALETTE.items():
        lines.append(f".bg-gray-{shade} {{ background-color: {color}; }}")
    return "\n".join("      " + ln for ln in lines)


def _format_attrs(el: Element) -> str:
    parts = []
    if el.classes:
        parts.append(f'class="{html.escape(" ".join(el.classes), quote=True)}"')
    if el.style:
        style = "; ".join(f"{k}: {v}" for k, v in el.style.items())
        parts.append(f'style="{html.escape(style, quote=True)}"')
    for key in sorted(el.attrs):
        parts.append(f'{key}="{html.escape(el.attrs[key], quote=True)}"')
    return (" " + " ".join(parts)) if parts else ""


def _render_element(el: Element, indent: int, out: list[str]):
    pad = "  " * indent
    open_tag = f"{pad}<{el.tag}{_format_attrs(el)}>"
    if el.tag in VOID_TAGS:
        out.append(open_tag)
        return
    if not el.children and not el.text:
        out.append(f"{open_tag}</{el.tag}>")
        return
    if not el.children:
        out.append(f"{open_tag}{html.escape(el.text)}</{el.tag}>")
        return
    out.append(open_tag)
    if el.text:
        out.append(f"{'  ' * (indent + 1)}{html.escape(el.text)}")
    for child in el.children:
        _render_element(child, indent + 1, out)
    out.append(f"{pad}</{el.tag}>")


def render_html(doc: GeneratedDocument, title: str = "Generated page") -> str:
    """Deterministic full-page serialization; self-contained stylesheet."""
    body: list[str] = []
    _render_element(doc.root, 2, body)
    lines = [
        "<!DOCTYPE html>",
        "<html>",
        "  <head>",
        '    <meta charset="utf-8">',
        f"    <title>{html.escape(title)}</title>",
        "    <style>",
        _stylesheet(),
        "    </style>",
        "  </head>",
        "  <body>",
        *body,
        "  </body>",
        "</html>",
        "",
    ]
    return "\n".join(lines)


def render_fragment(el: Element) -> str:
    out: list[str] = []
    _render_element(el, 0, out)
    return "\n".join(out)


# ------------------------------------------------------------------ parsing

class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.roots: list[Element] = []
        self.stack: list[Element] = []
        self.skip_depth = 0  # inside a stripped subtree (script/style/link)
        self.skipped_tags: list[str] = []

    def _make_element(self, tag: str, attrs) -> Element:
        el = Element(tag=tag)
        for key, value in attrs:
            value = value or ""
            if key == "class":
                el.classes = value.split()
            elif key == "style":
                for decl in value.split(";"):
                    if ":" in decl:
                        prop, val = decl.split(":", 1)
                        el.style[prop.strip()] = val.strip()
            else:
                el.attrs[key] = value
        return el

    def _attach(self, el: Element):
        if self.stack:
            self.stack[-1].children.append(el)
        else:
            self.roots.append(el)

    def handle_starttag(self, tag, attrs):
        if self.skip_depth:
            self.skip_depth += 1
            return
        if tag in ("script", "style"):
            self.skip_depth = 1
            self.skipped_tags.append(tag)
            return
        if tag in ("html", "head", "body", "title", "meta"):
            return
        el = self._make_element(tag, attrs)
        if tag == "link":
            self.skipped_tags.append(tag)
            return
        self._attach(el)
        if tag not in VOID_TAGS:
            self.stack.append(el)

    def handle_startendtag(self, tag, attrs):
        if self.skip_depth:
            return
        if tag in ("script", "style", "link"):
            self.skipped_tags.append(tag)
            return
        if tag in ("html", "head", "body", "title", "meta"):
            return
        self._attach(self._make_element(tag, attrs))

    def handle_endtag(self, tag):
        if self.skip_depth:
            self.skip_depth -= 1
            return
        if tag in ("html", "head", "body", "title") or tag in VOID_TAGS:
            return
        for i in range(len(self.stack) - 1, -1, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return

    def handle_data(self, data):
        if self.skip_depth or not self.stack:
            return
        text = data.strip()
        if not text:
            return
        top = self.stack[-1]
        top.text = f"{top.text} {text}".strip() if top.text else text


def parse_fragment(markup: str) -> list[Element]:
    """Parse an HTML fragment into elements; raises when none are found."""
    builder = _TreeBuilder()
    builder.feed(markup)
    builder.close()
    if not builder.roots:
        raise UnparseableFragmentError("fragment contains no parseable element")
    return builder.roots


def parse_document(markup: str, page_size: tuple[int, int] | None = None) -> GeneratedDocument:
    """Rebuild a GeneratedDocument from serialized page markup.

    When ``page_size`` is omitted it is read from the root's
    ``data-page-size`` attribute (written by assembly).
    """
    roots = parse_fragment(markup)
    if len(roots) != 1:
        raise UnparseableFragmentError(f"expected a single root element, found {len(roots)}")
    if page_size is None:
        raw = roots[0].attrs.get("data-page-size", "")
        try:
            w, h = raw.split("x")
            page_size = (int(w), int(h))
        except ValueError as exc:
            raise UnparseableFragmentError(
                "page has no data-page-size attribute; pass page_size explicitly"
            ) from exc
    return GeneratedDocument(root=roots[0], page_size=page_size)


# --------------------------------------------------------------- sanitizing

_EVENT_ATTR_RE = re.compile(r"^on", re.IGNORECASE)


def sanitize_element(el: Element) -> Element:
    """Strip script/style-link vectors: event handlers and js: URLs.

    Script, style, and link elements are already dropped at parse time;
    this pass cleans attributes on whatever remains.
    """
    el.attrs = {
        k: v
        for k, v in el.attrs.items()
        if not _EVENT_ATTR_RE.match(k)
        and not (k in ("href", "src") and v.strip().lower().startswith("javascript:"))
    }
    el.children = [sanitize_element(c) for c in el.children if c.tag not in ("script", "style", "link")]
    return el
