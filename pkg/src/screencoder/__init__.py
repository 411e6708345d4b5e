"""screencoder: screenshot-to-HTML/CSS engine.

Stages: grounding (labeled region detection), planning (layout tree),
generation (constrained HTML/CSS emission), placeholder restoration, and
block-based layout evaluation. A batch data engine and a CLI/HTTP service
drive the stages end to end.
"""

__version__ = "0.1.0"
