"""Pipeline configuration: a flat ``key = value`` file overridable by flags.

Keys and defaults::

    fps                   30.0    frames per second of the source video
    width, height         0       frame size in pixels (required by score)
    frames                0       number of frames (required by score)
    iou_min               0.3     box overlap to continue a focus track
    gap_tolerance_s       0.5     focus interruption bridged within a track
    alpha_s               5.0     dwell time before novelty starts decaying
    threshold_percentile  75.0    relevance cut over nonzero scores
    min_seg_s             1.0     shortest segment kept after merging
    smooth_s              0.0     optional box filter on the score (0 = off)
    target_speedup        8.0     required global speed-up
    p_max                 auto    largest per-segment rate (auto = ceil(4 * target))
    lambda_emphasis       10.0    weight of the relevant-segment rate penalty
    gamma_semantic        0.5     weight of the per-frame score in sampling
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    fps: float = 30.0
    width: int = 0
    height: int = 0
    frames: int = 0
    iou_min: float = 0.3
    gap_tolerance_s: float = 0.5
    alpha_s: float = 5.0
    threshold_percentile: float = 75.0
    min_seg_s: float = 1.0
    smooth_s: float = 0.0
    target_speedup: float = 8.0
    p_max: Optional[int] = None
    lambda_emphasis: float = 10.0
    gamma_semantic: float = 0.5

    def __post_init__(self):
        if not self.fps > 0:
            raise ConfigError(f"fps must be positive, got {self.fps}")
        if self.width < 0 or self.height < 0 or self.frames < 0:
            raise ConfigError("width, height and frames must be non-negative")
        if not 0.0 < self.iou_min <= 1.0:
            raise ConfigError(f"iou_min must be in (0, 1], got {self.iou_min}")
        if self.gap_tolerance_s < 0:
            raise ConfigError("gap_tolerance_s must be >= 0")
        if not self.alpha_s > 0:
            raise ConfigError("alpha_s must be positive")
        if not 0.0 < self.threshold_percentile < 100.0:
            raise ConfigError("threshold_percentile must be in (0, 100)")
        if not self.min_seg_s > 0:
            raise ConfigError("min_seg_s must be positive")
        if self.smooth_s < 0:
            raise ConfigError("smooth_s must be >= 0")
        if not self.target_speedup > 1.0:
            raise ConfigError(f"target_speedup must exceed 1, got {self.target_speedup}")
        if self.p_max is not None and self.p_max < self.target_speedup:
            raise ConfigError(
                f"p_max={self.p_max} must be >= target_speedup={self.target_speedup}"
            )
        if self.lambda_emphasis < 0 or self.gamma_semantic < 0:
            raise ConfigError("lambda_emphasis and gamma_semantic must be >= 0")

    @property
    def gap_tolerance_frames(self) -> int:
        return int(round(self.gap_tolerance_s * self.fps))

    @property
    def smooth_frames(self) -> int:
        return int(round(self.smooth_s * self.fps))

    @property
    def resolved_p_max(self) -> int:
        if self.p_max is not None:
            return self.p_max
        return math.ceil(4 * self.target_speedup)

    def replace(self, **changes: Any) -> "PipelineConfig":
        return from_mapping({**self.to_dict(), **changes})

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(key: str, value: Any):
    kind = _TYPES[key]
    if value is None:
        if key == "p_max":
            return None
        raise ConfigError(f"{key} cannot be empty")
    if isinstance(value, str):
        value = value.strip()
        if key == "p_max" and value.lower() in ("", "auto", "none"):
            return None
    try:
        if "int" in kind:
            as_float = float(value)
            if as_float != int(as_float):
                raise ValueError
            return int(as_float)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def from_mapping(values: Mapping[str, Any]) -> PipelineConfig:
    unknown = sorted(set(values) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return PipelineConfig(**{k: _coerce(k, v) for k, v in values.items()})


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path=None, overrides: Optional[Mapping[str, Any]] = None) -> PipelineConfig:
    values: dict[str, Any] = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return from_mapping(values)


def format_config(cfg: PipelineConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        lines.append(f"{key} = {'auto' if value is None else value}")
    return "\n".join(lines) + "\n"
