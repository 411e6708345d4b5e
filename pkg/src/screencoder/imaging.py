"""Image loading and encoding helpers shared by the stages."""

from __future__ import annotations

import base64
import hashlib
import io
from pathlib import Path

from PIL import Image

from screencoder.errors import ImageDecodeError

MIN_DIMENSION = 32


def load_image(source) -> tuple[Image.Image, bytes]:
    """Decode ``source`` (path, bytes, or PIL image) into (image, raw bytes).

    The raw bytes feed backend requests and fixture keying, so they must be
    stable for a given input.
    """
    if isinstance(source, Image.Image):
        buf = io.BytesIO()
        source.save(buf, format="PNG")
        data = buf.getvalue()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        path = Path(source)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise ImageDecodeError(f"cannot read image {path}: {exc}") from exc
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}") from exc
    if img.width < MIN_DIMENSION or img.height < MIN_DIMENSION:
        raise ImageDecodeError(
            f"image too small: {img.width}x{img.height}, need at least "
            f"{MIN_DIMENSION}x{MIN_DIMENSION}"
        )
    return img.convert("RGB"), data


def image_to_b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def image_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def png_data_uri(img: Image.Image) -> str:
    return "data:image/png;base64," + image_to_b64(png_bytes(img))


def mean_color(img: Image.Image) -> tuple[float, float, float]:
    """Average RGB in [0, 1] components."""
    import numpy as np

    arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    r, g, b = arr.reshape(-1, 3).mean(axis=0)
    return (float(r), float(g), float(b))
