"""Vision and generation backend implementations.

Wire contract, shared by both backend kinds: requests carry a base64 image
plus query/prompt text; grounding responses are a structured list of
``{label, box: [x, y, w, h], confidence}`` records. Free-form model output
is handled by extracting the first well-formed structured block and
rejecting everything else.

Mock backends replay canned fixture files so the full pipeline runs
offline and deterministically; the template generation backend emits the
gray-placeholder fragments used for offline operation and degradation.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import TYPE_CHECKING, Protocol

import httpx

from screencoder.docmodel import PLACEHOLDER_CLASS
from screencoder.errors import BackendError, SchemaError
from screencoder.imaging import image_hash

if TYPE_CHECKING:
    from screencoder.generation import ComponentPrompt


# ------------------------------------------------------- response parsing

def _coerce_region(entry, default_label: str | None) -> dict | None:
    """Validate one detection record; None rejects it."""
    if not isinstance(entry, dict):
        return None
    box = entry.get("box")
    if not isinstance(box, (list, tuple)) or len(box) != 4:
        return None
    try:
        x, y, w, h = (float(v) for v in box)
    except (TypeError, ValueError):
        return None
    if not all(math.isfinite(v) for v in (x, y, w, h)) or w <= 0 or h <= 0:
        return None
    label = entry.get("label", default_label)
    if not isinstance(label, str) or not label:
        return None
    conf = entry.get("confidence", 1.0)
    try:
        conf = float(conf)
    except (TypeError, ValueError):
        return None
    if not math.isfinite(conf):
        return None
    conf = min(1.0, max(0.0, conf))
    return {"label": label, "box": [x, y, w, h], "confidence": conf}


def extract_structured_regions(text: str, default_label: str | None = None) -> list[dict]:
    """Pull the first well-formed JSON block out of free-form backend text.

    Accepts a bare list of records or an object with a ``regions`` key;
    malformed records inside the block are dropped, everything after the
    first parseable block is ignored.
    """
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch not in "[{":
            continue
        try:
            payload, _ = decoder.raw_decode(text, i)
        except ValueError:
            continue
        if isinstance(payload, dict):
            payload = payload.get("regions", [])
        if not isinstance(payload, list):
            continue
        out = []
        for entry in payload:
            region = _coerce_region(entry, default_label)
            if region is not None:
                out.append(region)
        return out
    return []


def parse_grounding_response(payload, default_label: str | None = None) -> list[dict]:
    """Normalize a backend response (parsed JSON or raw text) to records."""
    if isinstance(payload, str):
        return extract_structured_regions(payload, default_label)
    if isinstance(payload, dict):
        payload = payload.get("regions", [])
    if not isinstance(payload, list):
        return []
    out = []
    for entry in payload:
        region = _coerce_region(entry, default_label)
        if region is not None:
            out.append(region)
    return out


# ---------------------------------------------------- grounding backends

class GroundingBackend(Protocol):
    name: str

    def detect(self, image_b64: str, query: str, label: str) -> list[dict]:
        """Return detection records for one labeled query."""
        ...


class NullGroundingBackend:
    """Returns nothing; grounding then relies on fallback heuristics."""

    name = "null"

    def detect(self, image_b64: str, query: str, label: str) -> list[dict]:
        return []


class MockGroundingBackend:
    """Replays canned responses keyed by (image sha256, label).

    Fixture schema::

        {"schema_version": 1,
         "by_image": {"<sha256>": {"<label>": [{label, box, confidence}]}},
         "default": {"<label>": [...]}}

    The optional ``default`` section answers for images missing from
    ``by_image`` (test convenience).
    """

    name = "mock"

    def __init__(self, fixture: str | Path | dict):
        if isinstance(fixture, (str, Path)):
            with open(fixture, "r", encoding="utf-8") as fh:
                fixture = json.load(fh)
        if not isinstance(fixture, dict):
            raise SchemaError("grounding fixture must be a JSON object")
        self.by_image: dict = fixture.get("by_image", {})
        self.default: dict = fixture.get("default", {})

    def detect(self, image_b64: str, query: str, label: str) -> list[dict]:
        import base64

        digest = image_hash(base64.b64decode(image_b64))
        table = self.by_image.get(digest, self.default)
        return parse_grounding_response(table.get(label, []), default_label=label)


def _auth_headers(token: str | None) -> dict[str, str]:
    token = token or os.environ.get("SCREENCODER_BACKEND_TOKEN")
    return {"authorization": f"Bearer {token}"} if token else {}


class HttpGroundingBackend:
    """POSTs {image, query} to a remote endpoint and parses defensively.

    Credentials come from the ``token`` argument or the
    ``SCREENCODER_BACKEND_TOKEN`` environment variable.
    """

    name = "http"

    def __init__(self, endpoint: str, timeout: float = 30.0, retries: int = 2,
                 token: str | None = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.headers = _auth_headers(token)

    def detect(self, image_b64: str, query: str, label: str) -> list[dict]:
        request = {"image": image_b64, "query": query}
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = httpx.post(
                    self.endpoint, json=request, timeout=self.timeout, headers=self.headers
                )
                resp.raise_for_status()
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            try:
                payload = resp.json()
            except ValueError:
                payload = resp.text
            return parse_grounding_response(payload, default_label=label)
        raise BackendError(f"grounding backend unreachable at {self.endpoint}: {last_exc}")


# --------------------------------------------------- generation backends

class GenerationBackend(Protocol):
    name: str

    def generate(self, prompt: "ComponentPrompt", image_b64: str | None = None) -> str:
        """Return an HTML fragment for one component prompt."""
        ...


class TemplateGenerationBackend:
    """Deterministic offline fragments: a gray box labeled by region.

    This is both the no-network backend and the substitution target when a
    remote backend degrades.
    """

    name = "template"

    def __init__(self, shade: int = 400):
        self.shade = shade

    def generate(self, prompt: "ComponentPrompt", image_b64: str | None = None) -> str:
        label = prompt.label
        return f'<div class="{PLACEHOLDER_CLASS} bg-gray-{self.shade}">{label}</div>'


class MockGenerationBackend:
    """Replays fixture fragments keyed by ``label`` or ``label::instruction``.

    Fixture schema::

        {"schema_version": 1, "fragments": {"header": "<div>...</div>",
                                            "sidebar::use dark theme": "..."}}
    """

    name = "mock"

    def __init__(self, fixture: str | Path | dict):
        if isinstance(fixture, (str, Path)):
            with open(fixture, "r", encoding="utf-8") as fh:
                fixture = json.load(fh)
        if not isinstance(fixture, dict):
            raise SchemaError("generation fixture must be a JSON object")
        self.fragments: dict = fixture.get("fragments", {})

    def generate(self, prompt: "ComponentPrompt", image_b64: str | None = None) -> str:
        keys = []
        if prompt.user_instruction:
            keys.append(f"{prompt.label}::{prompt.user_instruction}")
        keys.append(prompt.label)
        for key in keys:
            if key in self.fragments:
                return self.fragments[key]
        raise BackendError(f"no fixture fragment for {keys[-1]!r}")


class HttpGenerationBackend:
    """POSTs the component prompt to a remote generation endpoint."""

    name = "http"

    def __init__(self, endpoint: str, timeout: float = 60.0, retries: int = 2,
                 token: str | None = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.headers = _auth_headers(token)

    def generate(self, prompt: "ComponentPrompt", image_b64: str | None = None) -> str:
        request = {
            "node_id": prompt.node_id,
            "label": prompt.label,
            "prompt": prompt.text,
            "image": image_b64,
        }
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = httpx.post(
                    self.endpoint, json=request, timeout=self.timeout, headers=self.headers
                )
                resp.raise_for_status()
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            try:
                payload = resp.json()
                if isinstance(payload, dict) and "html" in payload:
                    return str(payload["html"])
            except ValueError:
                pass
            return resp.text
        raise BackendError(f"generation backend unreachable at {self.endpoint}: {last_exc}")


# ------------------------------------------------------------- factories

def make_grounding_backend(spec: str) -> GroundingBackend:
    """Build a grounding backend from a CLI-style spec string.

    ``null``, ``mock:<fixture.json>``, or ``http:<endpoint-url>``.
    """
    if spec == "null":
        return NullGroundingBackend()
    kind, _, arg = spec.partition(":")
    if kind == "mock" and arg:
        return MockGroundingBackend(arg)
    if kind == "http" and arg:
        return HttpGroundingBackend(arg)
    raise ValueError(f"unknown grounding backend spec: {spec!r}")


def make_generation_backend(spec: str) -> GenerationBackend:
    """``template``, ``mock:<fixture.json>``, or ``http:<endpoint-url>``."""
    if spec == "template":
        return TemplateGenerationBackend()
    kind, _, arg = spec.partition(":")
    if kind == "mock" and arg:
        return MockGenerationBackend(arg)
    if kind == "http" and arg:
        return HttpGenerationBackend(arg)
    raise ValueError(f"unknown generation backend spec: {spec!r}")
