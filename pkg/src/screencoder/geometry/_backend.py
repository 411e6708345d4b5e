"""Kernel backend selection.

The compiled extension is preferred; the pure-Python module is the
fallback. ``SCREENCODER_GEOMETRY_BACKEND=python|cython`` forces a choice
(``cython`` raises if the extension is missing).
"""

from __future__ import annotations

import os

_choice = os.environ.get("SCREENCODER_GEOMETRY_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "cython", "python"):
    raise ImportError(f"SCREENCODER_GEOMETRY_BACKEND must be auto|cython|python, got {_choice!r}")

if _choice == "python":
    from screencoder.geometry import _pykernels as kernels
else:
    try:
        from screencoder.geometry import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        if _choice == "cython":
            raise
        from screencoder.geometry import _pykernels as kernels  # type: ignore[no-redef]

BACKEND: str = kernels.IMPLEMENTATION
