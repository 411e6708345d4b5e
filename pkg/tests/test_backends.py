import json
import random

import pytest

from conftest import grounding_fixture_for, make_image, region_responses, three_region_layout
from screencoder.backends import (
    HttpGenerationBackend,
    HttpGroundingBackend,
    make_generation_backend,
    make_grounding_backend,
)
from screencoder.cli import _resolve_backends
from screencoder.imaging import png_bytes


def test_backend_factories():
    assert make_grounding_backend("null").name == "null"
    assert make_generation_backend("template").name == "template"
    assert make_grounding_backend("http:http://example/detect").name == "http"
    with pytest.raises(ValueError):
        make_grounding_backend("carrier-pigeon")
    with pytest.raises(ValueError):
        make_generation_backend("mock:")


def test_http_backends_pick_up_token_env(monkeypatch):
    monkeypatch.setenv("SCREENCODER_BACKEND_TOKEN", "sekrit")
    gb = HttpGroundingBackend("http://example/detect")
    nb = HttpGenerationBackend("http://example/generate")
    assert gb.headers == {"authorization": "Bearer sekrit"}
    assert nb.headers == {"authorization": "Bearer sekrit"}
    monkeypatch.delenv("SCREENCODER_BACKEND_TOKEN")
    assert HttpGroundingBackend("http://example/detect").headers == {}
    assert HttpGroundingBackend("http://example/detect", token="inline").headers == {
        "authorization": "Bearer inline"
    }


def test_cli_backend_env_defaults(monkeypatch, tmp_path):
    rng = random.Random(2)
    page_w, page_h, boxes, _ = three_region_layout(rng)
    data = png_bytes(make_image(page_w, page_h))
    fixture = tmp_path / "grounding.json"
    fixture.write_text(json.dumps(grounding_fixture_for(data, region_responses(boxes))))

    monkeypatch.setenv("SCREENCODER_GROUNDING", f"mock:{fixture}")
    gb, nb = _resolve_backends(None, None, None)
    assert gb.name == "mock"
    assert nb.name == "template"

    # explicit flags still win over the environment
    gb, _ = _resolve_backends(None, "null", None)
    assert gb.name == "null"
