"""Raster rendering of generated documents.

Paints resolved element geometry onto a PIL canvas: background fills from
the gray utility classes, restored image patches from their data URIs.
Good enough to produce synthetic screenshots for the data engine and the
round-trip tests; no text glyphs are drawn.
"""

from __future__ import annotations

import base64
import io

from PIL import Image, ImageDraw

from screencoder.docmodel import GeneratedDocument
from screencoder.evaluation import resolve_geometry


def _hex_to_rgb255(hex_color: str) -> tuple[int, int, int]:
    v = hex_color.lstrip("#")
    return (int(v[0:2], 16), int(v[2:4], 16), int(v[4:6], 16))


def render_raster(
    doc: GeneratedDocument,
    viewport: tuple[int, int] | None = None,
    background: tuple[int, int, int] = (255, 255, 255),
) -> Image.Image:
    vw, vh = viewport or doc.page_size
    canvas = Image.new("RGB", (int(vw), int(vh)), background)
    draw = ImageDraw.Draw(canvas)

    for _, el, rect in resolve_geometry(doc, (int(vw), int(vh))):
        x1, y1 = int(round(rect.x)), int(round(rect.y))
        x2, y2 = int(round(rect.x2)), int(round(rect.y2))
        if x2 <= x1 or y2 <= y1:
            continue
        src = el.attrs.get("src", "")
        if el.tag == "img" and src.startswith("data:image/png;base64,"):
            try:
                patch = Image.open(io.BytesIO(base64.b64decode(src.split(",", 1)[1])))
                canvas.paste(patch.convert("RGB").resize((x2 - x1, y2 - y1)), (x1, y1))
            except Exception:
                draw.rectangle([x1, y1, x2 - 1, y2 - 1], fill=(128, 128, 128))
            continue
        bg = el.bg_gray()
        if bg is not None:
            draw.rectangle([x1, y1, x2 - 1, y2 - 1], fill=_hex_to_rgb255(bg))
    return canvas
