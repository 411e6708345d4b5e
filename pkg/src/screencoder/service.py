"""HTTP service: session lifecycle over the pipeline stages.

Sessions persist as directories of the same stage artifacts the CLI
writes, so the two interoperate on identical files. Mutations use
optimistic concurrency: every PUT/regenerate carries the revision it was
based on and conflicts return 409. Edits re-run only downstream stages
(put-layout re-plans onward, put-tree re-generates onward, per-node
regenerate touches one fragment and re-assembles) - grounding is never
re-run by an edit.
"""

from __future__ import annotations

import base64
import json
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse
from pydantic import BaseModel

from screencoder.backends import GenerationBackend, GroundingBackend
from screencoder.config import PipelineConfig
from screencoder.docmodel import parse_fragment, render_fragment, render_html
from screencoder.errors import (
    RevisionConflictError,
    SchemaError,
    ScreencoderError,
    SessionNotFoundError,
)
from screencoder.evaluation import (
    evaluate_blocksets,
    layout_reference_blocks,
    metrics_report,
    resolve_blocks,
)
from screencoder.generation import assemble, build_prompt, generate_all, generate_component, leaf_nodes
from screencoder.grounding import LayoutMap, ground
from screencoder.imaging import load_image
from screencoder.planning import LayoutTree, build_tree, parse_tree, serialize_tree, tree_to_dict


class SessionStore:
    """Directory-backed sessions with revisioned stage artifacts."""

    def __init__(
        self,
        root: str | Path,
        grounding_backend: GroundingBackend,
        generation_backend: GenerationBackend,
        config: PipelineConfig | None = None,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.grounding = grounding_backend
        self.generation = generation_backend
        self.config = config or PipelineConfig()
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # ------------------------------------------------------------ plumbing

    def _lock(self, sid: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(sid, threading.Lock())

    def _dir(self, sid: str) -> Path:
        d = self.root / sid
        if not d.is_dir():
            raise SessionNotFoundError(f"unknown session {sid!r}")
        return d

    def _meta(self, sid: str) -> dict:
        return json.loads((self._dir(sid) / "session.json").read_text(encoding="utf-8"))

    def _write_meta(self, sid: str, meta: dict):
        path = self._dir(sid) / "session.json"
        path.write_text(json.dumps(meta, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")

    def _check_revision(self, meta: dict, basis: int):
        if int(basis) != int(meta["revision"]):
            raise RevisionConflictError(expected=int(meta["revision"]), got=int(basis))

    def _write_json(self, sid: str, name: str, payload: dict):
        (self._dir(sid) / name).write_text(
            json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    def _read_json(self, sid: str, name: str) -> dict:
        return json.loads((self._dir(sid) / name).read_text(encoding="utf-8"))

    # -------------------------------------------------------------- stages

    def _persist_fragments(self, sid: str, fragments: dict):
        frag_dir = self._dir(sid) / "fragments"
        frag_dir.mkdir(exist_ok=True)
        for old in frag_dir.glob("*.html"):
            old.unlink()
        for node_id, element in fragments.items():
            (frag_dir / f"{node_id}.html").write_text(
                render_fragment(element) + "\n", encoding="utf-8"
            )

    def _load_fragments(self, sid: str, tree: LayoutTree) -> dict:
        frag_dir = self._dir(sid) / "fragments"
        fragments = {}
        for node in leaf_nodes(tree):
            path = frag_dir / f"{node.id}.html"
            if path.exists():
                roots = parse_fragment(path.read_text(encoding="utf-8"))
                root = roots[0] if len(roots) == 1 else None
                if root is None:
                    continue
                fragments[node.id] = root
        return fragments

    def _assemble_and_score(self, sid: str, tree: LayoutTree, fragments: dict, gen_rows: list):
        layout = LayoutMap.from_dict(self._read_json(sid, "layout.json"))
        document = assemble(tree, fragments)
        (self._dir(sid) / "index.html").write_text(render_html(document), encoding="utf-8")

        reference = layout_reference_blocks(layout)
        candidate = resolve_blocks(document)
        breakdown, matching = evaluate_blocksets(reference, candidate, self.config)
        self._write_json(sid, "metrics.json", metrics_report(breakdown, matching, reference, candidate))

        substitutions = sum(1 for row in gen_rows if row.get("status") == "substituted")
        self._write_json(
            sid,
            "report.json",
            {
                "schema_version": 1,
                "status": "degraded" if substitutions else "ok",
                "config_hash": self.config.config_hash(),
                "grounding": {
                    "backend": self.grounding.name,
                    "provenance": {k: e.provenance for k, e in layout.entries.items()},
                    "backend_errors": list(layout.backend_errors),
                },
                "generation": {
                    "backend": self.generation.name,
                    "nodes": gen_rows,
                    "substitutions": substitutions,
                },
                "restoration": None,
            },
        )

    def _generate_onward(self, sid: str, tree: LayoutTree, instructions: dict):
        fragments, rows = generate_all(tree, self.generation, instructions, self.config)
        self._persist_fragments(sid, fragments)
        (self._dir(sid) / "tree.json").write_text(serialize_tree(tree), encoding="utf-8")
        self._assemble_and_score(sid, tree, fragments, rows)

    def _plan_onward(self, sid: str, layout: LayoutMap, instructions: dict):
        tree = build_tree(layout, self.config)
        self._generate_onward(sid, tree, instructions)

    # ----------------------------------------------------------------- api

    def create(self, image_bytes: bytes) -> dict:
        sid = uuid.uuid4().hex[:12]
        d = self.root / sid
        d.mkdir(parents=True)
        (d / "screenshot.png").write_bytes(image_bytes)

        img, _ = load_image(image_bytes)
        layout = ground(image_bytes, self.grounding, self.config)
        self._write_json(sid, "layout.json", layout.to_dict())
        meta = {
            "schema_version": 1,
            "id": sid,
            "revision": 1,
            "page_size": [img.width, img.height],
            "instructions": {},
            "history": {},
        }
        self._write_meta(sid, meta)
        self._plan_onward(sid, layout, {})
        return {"id": sid, "revision": 1, "page_size": [img.width, img.height]}

    def info(self, sid: str) -> dict:
        meta = self._meta(sid)
        return {
            "id": meta["id"],
            "revision": meta["revision"],
            "page_size": meta["page_size"],
        }

    def get_layout(self, sid: str) -> dict:
        return {"revision": self._meta(sid)["revision"], "layout": self._read_json(sid, "layout.json")}

    def get_tree(self, sid: str) -> dict:
        tree = parse_tree((self._dir(sid) / "tree.json").read_text(encoding="utf-8"))
        return {"revision": self._meta(sid)["revision"], "tree": tree_to_dict(tree)}

    def get_html(self, sid: str) -> str:
        return (self._dir(sid) / "index.html").read_text(encoding="utf-8")

    def get_metrics(self, sid: str) -> dict:
        return self._read_json(sid, "metrics.json")

    def get_report(self, sid: str) -> dict:
        return self._read_json(sid, "report.json")

    def put_layout(self, sid: str, layout_payload: dict, basis_revision: int) -> dict:
        with self._lock(sid):
            meta = self._meta(sid)
            self._check_revision(meta, basis_revision)
            layout = LayoutMap.from_dict(layout_payload)  # SchemaError -> 422
            if list(layout.page_size) != list(meta["page_size"]):
                raise SchemaError("layout page_size must match the session screenshot")
            self._write_json(sid, "layout.json", layout.to_dict())
            self._plan_onward(sid, layout, dict(meta["instructions"]))
            meta["revision"] += 1
            self._write_meta(sid, meta)
            return {"revision": meta["revision"]}

    def put_tree(self, sid: str, tree_payload: dict, basis_revision: int) -> dict:
        with self._lock(sid):
            meta = self._meta(sid)
            self._check_revision(meta, basis_revision)
            tree = parse_tree(json.dumps(tree_payload))
            if list(tree.page_size) != list(meta["page_size"]):
                raise SchemaError("tree page_size must match the session screenshot")
            self._generate_onward(sid, tree, dict(meta["instructions"]))
            meta["revision"] += 1
            self._write_meta(sid, meta)
            return {"revision": meta["revision"]}

    def regenerate_node(self, sid: str, node_id: str, instruction: str | None, basis_revision: int) -> dict:
        with self._lock(sid):
            meta = self._meta(sid)
            self._check_revision(meta, basis_revision)
            tree = parse_tree((self._dir(sid) / "tree.json").read_text(encoding="utf-8"))
            node = tree.find(node_id)
            if node is None:
                raise SessionNotFoundError(f"unknown node {node_id!r}")
            if not node.is_leaf():
                raise SchemaError(f"node {node_id!r} has children; regenerate its leaves instead")

            fragments = self._load_fragments(sid, tree)
            prompt = build_prompt(node, instruction, self.config)
            fragments[node_id] = generate_component(prompt, self.generation)
            self._persist_fragments(sid, fragments)

            if instruction:
                meta["instructions"][node_id] = instruction
                meta["history"].setdefault(node_id, []).append(instruction)
            rows = [
                {
                    "node_id": node_id,
                    "label": node.label,
                    "template_id": prompt.template_id,
                    "backend": self.generation.name,
                    "status": "ok",
                    "error": None,
                }
            ]
            self._assemble_and_score(sid, tree, fragments, rows)
            meta["revision"] += 1
            self._write_meta(sid, meta)
            return {"revision": meta["revision"]}


# ------------------------------------------------------------------- app

class CreateSessionBody(BaseModel):
    image_b64: str


class PutLayoutBody(BaseModel):
    revision: int
    layout: dict


class PutTreeBody(BaseModel):
    revision: int
    tree: dict


class RegenerateBody(BaseModel):
    revision: int
    instruction: str | None = None


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="screencoder", version="1")

    @app.exception_handler(SessionNotFoundError)
    async def _not_found(request: Request, exc: SessionNotFoundError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(RevisionConflictError)
    async def _conflict(request: Request, exc: RevisionConflictError):
        return JSONResponse(
            status_code=409,
            content={"detail": str(exc), "revision": exc.expected},
        )

    @app.exception_handler(SchemaError)
    async def _schema(request: Request, exc: SchemaError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ScreencoderError)
    async def _pipeline(request: Request, exc: ScreencoderError):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            image = base64.b64decode(body.image_b64, validate=True)
        except Exception as exc:
            raise SchemaError(f"image_b64 is not valid base64: {exc}") from exc
        return store.create(image)

    @app.get("/v1/sessions/{sid}")
    def session_info(sid: str):
        return store.info(sid)

    @app.get("/v1/sessions/{sid}/layout")
    def get_layout(sid: str):
        return store.get_layout(sid)

    @app.put("/v1/sessions/{sid}/layout")
    def put_layout(sid: str, body: PutLayoutBody):
        return store.put_layout(sid, body.layout, body.revision)

    @app.get("/v1/sessions/{sid}/tree")
    def get_tree(sid: str):
        return store.get_tree(sid)

    @app.put("/v1/sessions/{sid}/tree")
    def put_tree(sid: str, body: PutTreeBody):
        return store.put_tree(sid, body.tree, body.revision)

    @app.post("/v1/sessions/{sid}/nodes/{node_id}/regenerate")
    def regenerate(sid: str, node_id: str, body: RegenerateBody):
        return store.regenerate_node(sid, node_id, body.instruction, body.revision)

    @app.get("/v1/sessions/{sid}/html", response_class=HTMLResponse)
    def get_html(sid: str):
        return store.get_html(sid)

    @app.get("/v1/sessions/{sid}/metrics")
    def get_metrics(sid: str):
        return store.get_metrics(sid)

    @app.get("/v1/sessions/{sid}/report")
    def get_report(sid: str):
        return store.get_report(sid)

    return app
