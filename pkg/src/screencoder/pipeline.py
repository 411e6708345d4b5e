"""End-to-end pipeline driver: ground -> plan -> generate -> restore -> score.

Shared by the CLI, the HTTP service, and the batch data engine so that all
three produce identical artifacts for identical inputs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from screencoder.backends import GenerationBackend, GroundingBackend
from screencoder.config import PipelineConfig
from screencoder.docmodel import GeneratedDocument, render_html
from screencoder.evaluation import (
    BlockSet,
    evaluate_blocksets,
    layout_reference_blocks,
    metrics_report,
    resolve_blocks,
)
from screencoder.generation import assemble, generate_all
from screencoder.grounding import LayoutMap, ground
from screencoder.imaging import load_image
from screencoder.placeholder import (
    DetectedElement,
    detect_elements_baseline,
    match_by_region,
    restore_images,
)
from screencoder.planning import LayoutTree, build_tree, serialize_tree

log = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    layout: LayoutMap
    tree: LayoutTree
    document: GeneratedDocument
    html: str
    report: dict
    metrics: dict
    status: str  # ok | degraded

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "ok" else 2


@dataclass
class PipelineOptions:
    instructions: dict[str, str] = field(default_factory=dict)  # node id -> text
    global_instruction: str | None = None
    detections: list[DetectedElement] | None = None
    detect_baseline: bool = False
    reference_blocks: BlockSet | None = None  # external OCR reference, optional
    assets_dir: str | Path | None = None
    send_region_images: bool = False  # attach the cropped image to prompts


def _clip_score(cfg: PipelineConfig, screenshot: Image.Image, doc: GeneratedDocument) -> float | None:
    """Optional external visual-similarity scorer; never fatal."""
    if not cfg.clip_endpoint:
        return None
    try:
        import httpx

        from screencoder.imaging import png_bytes, image_to_b64 as b64
        from screencoder.rasterize import render_raster

        rendered = render_raster(doc)
        resp = httpx.post(
            cfg.clip_endpoint,
            json={
                "reference": b64(png_bytes(screenshot)),
                "candidate": b64(png_bytes(rendered)),
            },
            timeout=30.0,
        )
        resp.raise_for_status()
        return float(resp.json()["score"])
    except Exception as exc:  # noqa: BLE001
        log.warning("external visual scorer failed: %s", exc)
        return None


def run_pipeline(
    image,
    grounding_backend: GroundingBackend,
    generation_backend: GenerationBackend,
    config: PipelineConfig | None = None,
    options: PipelineOptions | None = None,
) -> PipelineResult:
    cfg = config or PipelineConfig()
    opts = options or PipelineOptions()
    img, data = load_image(image)

    layout = ground(data, grounding_backend, cfg)
    tree = build_tree(layout, cfg)

    instructions = dict(opts.instructions)
    if opts.global_instruction:
        for node in tree.iter_nodes():
            if node.id != tree.root.id:
                instructions.setdefault(node.id, opts.global_instruction)
    fragments, gen_rows = generate_all(
        tree, generation_backend, instructions, cfg,
        image=img if opts.send_region_images else None,
    )
    document = assemble(tree, fragments)

    restoration = None
    elements = opts.detections
    if elements is None and opts.detect_baseline:
        elements = detect_elements_baseline(img, cfg.detector_merge_gap_px)
    if elements:
        matches = match_by_region(document, layout, elements, cfg.ciou_floor)
        document, restoration = restore_images(
            document, matches, img, embed=cfg.image_embed, assets_dir=opts.assets_dir
        )

    html = render_html(document)

    reference = opts.reference_blocks or layout_reference_blocks(layout)
    candidate = resolve_blocks(document)
    breakdown, matching = evaluate_blocksets(reference, candidate, cfg)
    metrics = metrics_report(
        breakdown, matching, reference, candidate, clip_score=_clip_score(cfg, img, document)
    )

    substitutions = sum(1 for row in gen_rows if row["status"] == "substituted")
    degraded = substitutions > 0 or bool(layout.backend_errors)
    report = {
        "schema_version": 1,
        "status": "degraded" if degraded else "ok",
        "config_hash": cfg.config_hash(),
        "grounding": {
            "backend": grounding_backend.name,
            "provenance": {label: e.provenance for label, e in layout.entries.items()},
            "backend_errors": list(layout.backend_errors),
        },
        "generation": {
            "backend": generation_backend.name,
            "nodes": gen_rows,
            "substitutions": substitutions,
        },
        "restoration": restoration,
    }
    return PipelineResult(
        layout=layout,
        tree=tree,
        document=document,
        html=html,
        report=report,
        metrics=metrics,
        status=report["status"],
    )


def write_outputs(result: PipelineResult, out_dir: str | Path) -> dict[str, Path]:
    """Write the five stage artifacts into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "layout": out / "layout.json",
        "tree": out / "tree.json",
        "html": out / "index.html",
        "report": out / "report.json",
        "metrics": out / "metrics.json",
    }
    paths["layout"].write_text(
        json.dumps(result.layout.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    paths["tree"].write_text(serialize_tree(result.tree), encoding="utf-8")
    paths["html"].write_text(result.html, encoding="utf-8")
    paths["report"].write_text(
        json.dumps(result.report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    paths["metrics"].write_text(
        json.dumps(result.metrics, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return paths
