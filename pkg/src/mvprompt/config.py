"""Engine-wide tuning constants.

All values are fixed defaults so that scores are reproducible run-to-run;
each is overridable through the config file for experimentation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from .errors import ConfigError

SCORE_DIMENSIONS = (
    "color_consistency",
    "light_consistency",
    "clip_score",
    "clip_i",
    "text_image_alignment",
    "plausibility_3d",
    "texture_geometry",
    "low_level_texture",
)
LOW_LEVEL_DIMENSIONS = SCORE_DIMENSIONS[:4]
HIGH_LEVEL_DIMENSIONS = SCORE_DIMENSIONS[4:]

VIEW_COUNT = 9
YAW_STEP_DEGREES = 45.0


@dataclass(frozen=True)
class EngineConfig:
    # imaging
    lab_bins_per_axis: int = 8     # joint Lab histogram: 8^3 = 512 bins
    l_channel_bins: int = 32
    histogram_mode: str = "lab3d"  # joint 3D chosen; "lab_per_channel" selectable

    # 3D-friendly gate
    gate_weights: tuple[float, float, float] = (0.3, 0.4, 0.3)  # (w_O, w_IoU, w_BB)
    gate_threshold: float = 0.5
    gate_mode: str = "dual"        # "dual": saliency vs provider mask; "saliency": single-estimator

    # defect heatmap
    patch_grid: int = 8
    patch_deviation_cutoff: float = 0.5
    flag_fraction: float = 0.25

    # judge
    judge_aggregate: str = "mean"  # or "median"
    judge_retries: int = 2

    # prompt lab
    augment_count: int = 16        # N, clamped to [4, 64]
    min_cluster_size: int = 3
    keywords_per_cluster: int = 12

    # layout
    satellite_r_min: float = 100.0
    satellite_r_max: float = 200.0
    font_min: float = 10.0
    font_max: float = 28.0

    # providers
    in_flight_limit: int = 4

    def __post_init__(self):
        w = self.gate_weights
        if len(w) != 3 or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigError(f"gate weights must sum to 1, got {w}")
        if not 4 <= self.augment_count <= 64:
            raise ConfigError(f"augment_count must be in [4, 64], got {self.augment_count}")
        if self.gate_mode not in ("dual", "saliency"):
            raise ConfigError(f"unknown gate_mode {self.gate_mode!r}")
        if self.histogram_mode not in ("lab3d", "lab_per_channel"):
            raise ConfigError(f"unknown histogram_mode {self.histogram_mode!r}")
        if self.judge_aggregate not in ("mean", "median"):
            raise ConfigError(f"unknown judge_aggregate {self.judge_aggregate!r}")

    def override(self, **kwargs: Any) -> "EngineConfig":
        return replace(self, **kwargs)


def engine_config_from_dict(raw: dict) -> EngineConfig:
    known = {f.name for f in EngineConfig.__dataclass_fields__.values()}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown engine config keys: {sorted(unknown)}")
    if "gate_weights" in raw:
        raw = dict(raw, gate_weights=tuple(raw["gate_weights"]))
    return EngineConfig(**raw)


DEFAULT_CONFIG = EngineConfig()
