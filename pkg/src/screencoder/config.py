"""Pipeline configuration: every heuristic threshold in one place.

All values are config-exposed so deployments can tune them; defaults match
common web chrome proportions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

DEFAULT_LABELS = ("sidebar", "header", "navigation")

DEFAULT_QUERY_TEMPLATES = {
    "sidebar": "Where is the sidebar?",
    "header": "Locate the header area.",
    "navigation": "Identify the navigation bar.",
    "main_content": "Identify the main content area.",
}


@dataclass(frozen=True)
class PipelineConfig:
    # grounding
    labels: tuple[str, ...] = DEFAULT_LABELS
    query_templates: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_QUERY_TEMPLATES))
    main_content: str = "inferred"  # "inferred" (empty-rect) or "prompted" (ask the backend)
    nms_iou_threshold: float = 0.5
    fallback_enabled: bool = True
    fallback_top_frac: float = 0.15  # top band where header/nav candidates may start
    fallback_header_min_width_frac: float = 0.70
    fallback_header_max_height_frac: float = 0.12
    fallback_header_height_frac: float = 0.10  # emitted candidate height
    fallback_sidebar_max_width_frac: float = 0.25
    fallback_sidebar_width_frac: float = 0.20  # emitted candidate width
    fallback_sidebar_min_height_frac: float = 0.60
    fallback_overlap_veto_iou: float = 0.3

    # planning
    row_band_tolerance: float = 0.02  # fraction of page height
    track_merge_tolerance: float = 0.01  # fraction of container span

    # generation
    allow_generic_template: bool = True

    # placeholder mapping
    ciou_floor: float = 0.0
    detector_merge_gap_px: int = 4
    image_embed: str = "data-uri"  # "data-uri" or "assets"

    # evaluation
    text_match_threshold: float = 0.5
    image_match_ciou_threshold: float = 0.1
    reward_weights: tuple[float, float, float] = (0.4, 0.3, 0.3)
    union_includes_unmatched_candidates: bool = True
    clip_endpoint: str | None = None  # optional external visual scorer, off by default

    def __post_init__(self):
        if not self.labels:
            raise ValueError("label set must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")
        if "main_content" in self.labels:
            raise ValueError("main_content is inferred, not a detectable label")
        if self.main_content not in ("inferred", "prompted"):
            raise ValueError(f"main_content must be inferred|prompted, got {self.main_content!r}")
        if self.image_embed not in ("data-uri", "assets"):
            raise ValueError(f"image_embed must be data-uri|assets, got {self.image_embed!r}")
        if any(w < 0 for w in self.reward_weights):
            raise ValueError("reward weights must be non-negative")

    def query_for(self, label: str) -> str:
        return self.query_templates.get(label, f"Where is the {label}?")

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["labels"] = list(self.labels)
        d["reward_weights"] = list(self.reward_weights)
        return d

    @staticmethod
    def from_dict(d: dict) -> "PipelineConfig":
        d = dict(d)
        if "labels" in d:
            d["labels"] = tuple(d["labels"])
        if "reward_weights" in d:
            d["reward_weights"] = tuple(d["reward_weights"])
        return PipelineConfig(**d)

    def config_hash(self) -> str:
        """Stable 12-hex digest identifying this configuration."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
