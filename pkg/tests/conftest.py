import random

from PIL import Image, ImageDraw

from screencoder.evaluation import Block, BlockSet
from screencoder.geometry import NormRect, Rect
from screencoder.grounding import LayoutEntry, LayoutMap
from screencoder.imaging import image_hash, png_bytes

BLOCK_WORDS = ["alpha", "beta", "gamma", "delta", "menu", "search", "login", "cart", "news"]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" in rep.nodeid:
                name = rep.nodeid.split("::")[-1]
                lines.append(f"ACCEPTANCE {name}: {'PASS' if outcome == 'passed' else 'FAIL'}")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.line(line)


def rand_rect(rng: random.Random, page_w: float = 100.0, page_h: float = 100.0,
              min_size: float = 1.0) -> Rect:
    w = rng.uniform(min_size, page_w * 0.6)
    h = rng.uniform(min_size, page_h * 0.6)
    x = rng.uniform(0.0, page_w - w)
    y = rng.uniform(0.0, page_h - h)
    return Rect(x, y, w, h)


def make_image(w: int = 640, h: int = 480, rects=(), background=(255, 255, 255)) -> Image.Image:
    img = Image.new("RGB", (w, h), background)
    draw = ImageDraw.Draw(img)
    for rect, color in rects:
        draw.rectangle([int(rect.x), int(rect.y), int(rect.x2) - 1, int(rect.y2) - 1], fill=color)
    return img


def grounding_fixture_for(image_bytes: bytes, responses: dict) -> dict:
    """Mock-grounding fixture answering for exactly this image."""
    return {"schema_version": 1, "by_image": {image_hash(image_bytes): responses}}


def region_responses(boxes: dict[str, Rect], confidence: float = 0.9) -> dict:
    return {
        label: [{"label": label, "box": list(box.as_tuple()), "confidence": confidence}]
        for label, box in boxes.items()
    }


def layout_from_boxes(page_size: tuple[int, int], boxes: dict[str, Rect],
                      provenance: str = "backend") -> LayoutMap:
    return LayoutMap(
        page_size=page_size,
        entries={label: LayoutEntry(box=box, provenance=provenance) for label, box in boxes.items()},
    )


def rand_blockset(rng: random.Random, max_blocks: int = 10, quantize: bool = False) -> BlockSet:
    blocks = []
    for _ in range(rng.randint(1, max_blocks)):
        w = rng.uniform(0.05, 0.5)
        h = rng.uniform(0.05, 0.5)
        l = rng.uniform(0.0, 1.0 - w)
        t = rng.uniform(0.0, 1.0 - h)
        if quantize:
            l, t = round(l, 3), round(t, 3)
            w, h = round(w, 3), round(h, 3)
        kind = rng.choice(["text", "image"])
        text = rng.choice(BLOCK_WORDS) if kind == "text" else ""
        color = (rng.random(), rng.random(), rng.random())
        blocks.append(Block(box=NormRect(l, t, w, h), text=text, mean_color=color, kind=kind))
    return BlockSet(blocks=blocks)


def three_region_layout(rng: random.Random, with_navigation: bool = True):
    """Synthetic page whose main-content inference is unambiguous.

    Header spans the top, sidebar fills the remaining left edge, optional
    navigation tops the content column; the complement is a single
    rectangle. Returns (page_w, page_h, boxes, expected_main).
    """
    page_w = rng.randrange(400, 1281, 16)
    page_h = rng.randrange(320, 961, 16)
    header_h = rng.randrange(int(0.06 * page_h), int(0.15 * page_h))
    sidebar_w = rng.randrange(int(0.12 * page_w), int(0.26 * page_w))
    boxes = {
        "header": Rect(0, 0, page_w, header_h),
        "sidebar": Rect(0, header_h, sidebar_w, page_h - header_h),
    }
    content_top = header_h
    if with_navigation:
        nav_h = rng.randrange(int(0.05 * page_h), int(0.10 * page_h))
        boxes["navigation"] = Rect(sidebar_w, header_h, page_w - sidebar_w, nav_h)
        content_top += nav_h
    expected_main = Rect(sidebar_w, content_top, page_w - sidebar_w, page_h - content_top)
    return page_w, page_h, boxes, expected_main
