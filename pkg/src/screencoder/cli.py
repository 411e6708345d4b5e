"""Command-line interface.

Subcommands: ``run`` (single image through the full pipeline), ``serve``
(HTTP session service), ``batch`` (data engine over a corpus), ``filter``
(reward gate on a dataset), and ``eval`` (score a candidate page against
reference blocks). Exit codes for ``run``: 0 ok, 2 degraded, 1 failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from screencoder import __version__
from screencoder.backends import (
    NullGroundingBackend,
    TemplateGenerationBackend,
    make_generation_backend,
    make_grounding_backend,
)
from screencoder.config import PipelineConfig
from screencoder.dataengine import filter_by_reward, run_batch
from screencoder.docmodel import parse_document
from screencoder.errors import ScreencoderError
from screencoder.evaluation import (
    evaluate_blocksets,
    ingest_ocr_blocks,
    metrics_report,
    resolve_blocks,
)
from screencoder.pipeline import PipelineOptions, run_pipeline, write_outputs
from screencoder.placeholder import load_detections


def _load_config(path: str | None, main_content: str | None) -> PipelineConfig:
    cfg = PipelineConfig()
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = PipelineConfig.from_dict(json.load(fh))
    if main_content:
        cfg = cfg.with_overrides(main_content=main_content)
    return cfg


def _resolve_backends(backend: str | None, grounding: str | None, generation: str | None):
    """Precedence: explicit flag > --backend file > env var > offline default."""
    import os

    gspec = os.environ.get("SCREENCODER_GROUNDING", "null")
    nspec = os.environ.get("SCREENCODER_GENERATION", "template")
    if backend and backend != "offline":
        with open(backend, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
        gspec = spec.get("grounding", gspec)
        nspec = spec.get("generation", nspec)
    if grounding:
        gspec = grounding
    if generation:
        nspec = generation
    return make_grounding_backend(gspec), make_generation_backend(nspec)


@click.group()
@click.version_option(__version__)
def main():
    """Screenshot-to-HTML/CSS pipeline."""


@main.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default="out", show_default=True, help="Output directory.")
@click.option("--backend", default=None, help="'offline' or a JSON file with backend specs.")
@click.option("--grounding", default=None, help="Grounding backend: null | mock:FILE | http:URL.")
@click.option("--generation", default=None, help="Generation backend: template | mock:FILE | http:URL.")
@click.option(
    "--main-content",
    type=click.Choice(["inferred", "prompted"]),
    default=None,
    help="How to resolve the main content region.",
)
@click.option("--detections", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Detected-elements file for placeholder restoration.")
@click.option("--detect-baseline", is_flag=True, help="Run the built-in baseline detector.")
@click.option("--instruction", default=None, help="User instruction appended to every prompt.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def run(image, out_dir, backend, grounding, generation, main_content, detections,
        detect_baseline, instruction, config_path):
    """Convert one screenshot into layout.json, tree.json, index.html,
    report.json, and metrics.json."""
    try:
        cfg = _load_config(config_path, main_content)
        gb, nb = _resolve_backends(backend, grounding, generation)
        opts = PipelineOptions(
            global_instruction=instruction,
            detections=load_detections(detections) if detections else None,
            detect_baseline=detect_baseline,
            assets_dir=Path(out_dir) / "assets",
        )
        result = run_pipeline(image, gb, nb, cfg, opts)
        write_outputs(result, out_dir)
    except ScreencoderError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"{result.status}: wrote {out_dir}/ (composite {result.metrics['composite']:.3f})")
    sys.exit(result.exit_code)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--root", "root_dir", default="sessions", show_default=True)
@click.option("--backend", default=None)
@click.option("--grounding", default=None)
@click.option("--generation", default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def serve(host, port, root_dir, backend, grounding, generation, config_path):
    """Serve the session API (and the bundled design studio, if built)."""
    import uvicorn

    from screencoder.service import SessionStore, create_app

    cfg = _load_config(config_path, None)
    gb, nb = _resolve_backends(backend, grounding, generation)
    app = create_app(SessionStore(root_dir, gb, nb, cfg))
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.argument("corpus", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, help="Output directory for the dataset.")
@click.option("--workers", default=4, show_default=True, type=int)
@click.option("--backend", default=None)
@click.option("--grounding", default=None)
@click.option("--generation", default=None)
@click.option("--detect-baseline", is_flag=True)
@click.option("--reward-floor", default=None, type=float,
              help="Also write dataset.filtered.jsonl at this floor.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def batch(corpus, out_dir, workers, backend, grounding, generation, detect_baseline,
          reward_floor, config_path):
    """Run the data engine over an image corpus, producing JSONL records."""
    try:
        cfg = _load_config(config_path, None)
        gb, nb = _resolve_backends(backend, grounding, generation)
        manifest = run_batch(
            corpus, out_dir, gb, nb, cfg, workers=workers, detect_baseline=detect_baseline
        )
        if reward_floor is not None:
            stats = filter_by_reward(
                Path(out_dir) / "dataset.jsonl", reward_floor,
                Path(out_dir) / "dataset.filtered.jsonl",
            )
            click.echo(f"filter: kept {stats['kept']}/{stats['input']} at floor {reward_floor}")
    except ScreencoderError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    agg = manifest["aggregate"]
    click.echo(
        f"batch: {agg['ok']} ok, {agg['degraded']} degraded, {agg['failed']} failed "
        f"(reward mean {agg['reward_mean']})"
    )
    sys.exit(0 if agg["failed"] == 0 else 2)


@main.command("filter")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--floor", required=True, type=float)
@click.option("--out", "out_path", required=True)
def filter_cmd(dataset, floor, out_path):
    """Keep dataset records whose composite reward clears the floor."""
    try:
        stats = filter_by_reward(dataset, floor, out_path)
    except ScreencoderError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(stats))


@main.command("eval")
@click.option("--reference", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Reference blocks file (published schema).")
@click.option("--candidate", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Candidate: emitted .html page or a blocks file.")
@click.option("--out", "out_path", default=None, help="Write the metric report here.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def eval_cmd(reference, candidate, out_path, config_path):
    """Score a candidate page against reference blocks."""
    try:
        cfg = _load_config(config_path, None)
        ref = ingest_ocr_blocks(reference)
        cand_path = Path(candidate)
        if cand_path.suffix.lower() in (".html", ".htm"):
            doc = parse_document(cand_path.read_text(encoding="utf-8"), page_size=None)
            cand = resolve_blocks(doc)
        else:
            cand = ingest_ocr_blocks(cand_path)
        breakdown, matching = evaluate_blocksets(ref, cand, cfg)
        report = metrics_report(breakdown, matching, ref, cand)
    except ScreencoderError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    text = json.dumps(report, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


if __name__ == "__main__":
    main()
