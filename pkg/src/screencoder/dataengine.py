"""Batch data engine: image corpus -> JSONL of image/code/reward records.

Records are processed by a bounded worker pool with per-record isolation
(one bad input never kills the batch), persisted individually for
resumability, and folded into a sorted JSONL at the end so reruns with
deterministic backends are byte-identical. Timestamps live only in the
manifest, never in dataset records.
"""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from screencoder.backends import GenerationBackend, GroundingBackend
from screencoder.config import PipelineConfig
from screencoder.errors import ScreencoderError, SchemaError
from screencoder.pipeline import PipelineOptions, run_pipeline
from screencoder.planning import tree_to_dict

log = logging.getLogger(__name__)

DATASET_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}

COMPLETED = ("ok", "degraded")


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def list_corpus(corpus_dir: str | Path) -> list[Path]:
    corpus = Path(corpus_dir)
    images = sorted(
        p for p in corpus.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not images:
        raise ScreencoderError(f"corpus {corpus} contains no images")
    return images


def _record_id(path: Path, taken: set[str]) -> str:
    rid = path.stem
    if rid in taken:
        rid = path.name.replace(".", "_")
    taken.add(rid)
    return rid


def run_batch(
    corpus_dir: str | Path,
    out_dir: str | Path,
    grounding_backend: GroundingBackend,
    generation_backend: GenerationBackend,
    config: PipelineConfig | None = None,
    workers: int = 4,
    detect_baseline: bool = False,
) -> dict:
    """Run the pipeline over every image; returns the manifest dict.

    Writes ``records/<id>.json`` per record, ``dataset.jsonl`` (ok and
    degraded records, sorted by id), and ``manifest.json``. Rerunning
    skips records already completed in the manifest.
    """
    cfg = config or PipelineConfig()
    out = Path(out_dir)
    records_dir = out / "records"
    records_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"

    images = list_corpus(corpus_dir)
    taken: set[str] = set()
    jobs = [(_record_id(p, taken), p) for p in images]

    previous: dict = {}
    if manifest_path.exists():
        try:
            previous = json.loads(manifest_path.read_text(encoding="utf-8")).get("records", {})
        except (OSError, ValueError) as exc:
            log.warning("ignoring unreadable manifest: %s", exc)

    started = _utcnow()
    statuses: dict[str, dict] = {}
    lock = threading.Lock()

    def write_manifest(final: bool):
        counts = {"ok": 0, "degraded": 0, "failed": 0}
        composites = []
        for row in statuses.values():
            counts[row["status"]] += 1
            if row["composite"] is not None:
                composites.append(row["composite"])
        manifest = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "config_hash": cfg.config_hash(),
            "records": {rid: statuses[rid] for rid, _ in sorted(jobs) if rid in statuses},
            "aggregate": {
                "total": len(jobs),
                **counts,
                "reward_mean": (sum(composites) / len(composites)) if composites else None,
                "started": started,
                "finished": _utcnow() if final else None,
            },
        }
        tmp = manifest_path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        tmp.replace(manifest_path)
        return manifest

    def process(rid: str, path: Path):
        prior = previous.get(rid)
        if prior and prior.get("status") in COMPLETED and (records_dir / f"{rid}.json").exists():
            with lock:
                statuses[rid] = dict(prior, resumed=True)
            return
        try:
            result = run_pipeline(
                path,
                grounding_backend,
                generation_backend,
                cfg,
                PipelineOptions(detect_baseline=detect_baseline),
            )
            record = {
                "schema_version": DATASET_SCHEMA_VERSION,
                "id": rid,
                "image": path.name,
                "page_size": list(result.layout.page_size),
                "layout": result.layout.to_dict(),
                "tree": tree_to_dict(result.tree),
                "html": result.html,
                "reward": {
                    k: result.metrics[k]
                    for k in ("r_block", "r_text", "r_pos", "r_color", "composite", "weights")
                },
                "status": result.status,
                "meta": {
                    "grounding_backend": grounding_backend.name,
                    "generation_backend": generation_backend.name,
                    "config_hash": cfg.config_hash(),
                },
            }
            tmp = records_dir / f"{rid}.json.tmp"
            tmp.write_text(
                json.dumps(record, ensure_ascii=False, separators=(",", ":")),
                encoding="utf-8",
            )
            tmp.replace(records_dir / f"{rid}.json")
            row = {"status": result.status, "error": None, "composite": result.metrics["composite"]}
        except Exception as exc:  # noqa: BLE001 - per-record isolation
            log.warning("record %s failed: %s", rid, exc)
            row = {"status": "failed", "error": str(exc), "composite": None}
        with lock:
            statuses[rid] = row
            write_manifest(final=False)  # crash mid-batch -> rerun resumes

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for rid, path in jobs:
            pool.submit(process, rid, path)

    # fold per-record files into the dataset, sorted for determinism
    dataset_path = out / "dataset.jsonl"
    with dataset_path.open("w", encoding="utf-8") as fh:
        for rid, _ in sorted(jobs):
            if statuses.get(rid, {}).get("status") in COMPLETED:
                fh.write((records_dir / f"{rid}.json").read_text(encoding="utf-8"))
                fh.write("\n")

    return write_manifest(final=True)


def filter_by_reward(
    dataset_path: str | Path,
    floor: float,
    out_path: str | Path,
) -> dict:
    """Keep records whose composite reward clears ``floor``.

    Returns retention statistics; records without a reward are an error.
    """
    kept = 0
    total = 0
    src = Path(dataset_path)
    dst = Path(out_path)
    with src.open("r", encoding="utf-8") as fh, dst.open("w", encoding="utf-8") as out:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            total += 1
            record = json.loads(line)
            reward = record.get("reward")
            if not isinstance(reward, dict) or "composite" not in reward:
                raise SchemaError(f"{src}:{lineno}: record has no reward")
            if reward["composite"] >= floor:
                out.write(line + "\n")
                kept += 1
    return {
        "input": total,
        "kept": kept,
        "retention": (kept / total) if total else 0.0,
        "floor": floor,
    }
