"""Geometric relevance of the focused object.

Distances are measured in unit-normalized frame coordinates, so every term
lies in [0, 1] regardless of resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .attention import FocusResolution
from .ingest import BBox, FrameContext, GazeSample


@dataclass(frozen=True)
class SpatialFeatures:
    relative_area: float
    centrality: float
    focus_alignment: float
    confidence: float

    @property
    def score(self) -> float:
        return spatial_score(self)


def relative_area(bbox: BBox, frame_w: float, frame_h: float) -> float:
    frame_area = frame_w * frame_h
    if frame_area <= 0:
        raise ValueError(f"frame area must be positive, got {frame_w}x{frame_h}")
    return bbox.area / frame_area


def centrality(bbox: BBox, frame_w: float, frame_h: float) -> float:
    """Inverse (1 + distance) between box center and frame center."""
    cx, cy = bbox.center
    dist = math.hypot(cx / frame_w - 0.5, cy / frame_h - 0.5)
    return 1.0 / (1.0 + dist)


def focus_alignment(gaze: GazeSample, bbox: BBox, frame_w: float) -> float:
    """Inverse (1 + horizontal distance) between gaze and box center; y is ignored."""
    if not gaze.has_position:
        raise ValueError(f"frame {gaze.frame}: gaze sample has no position")
    cx, _ = bbox.center
    return 1.0 / (1.0 + abs(gaze.x / frame_w - cx / frame_w))


def spatial_features(ctx: FrameContext, res: FocusResolution) -> Optional[SpatialFeatures]:
    det = res.focused
    if det is None:
        return None
    return SpatialFeatures(
        relative_area=relative_area(det.bbox, ctx.width, ctx.height),
        centrality=centrality(det.bbox, ctx.width, ctx.height),
        focus_alignment=focus_alignment(ctx.gaze, det.bbox, ctx.width),
        confidence=det.confidence,
    )


def spatial_score(features: Optional[SpatialFeatures]) -> float:
    if features is None:
        return 0.0
    f = features
    return f.confidence * (f.relative_area + f.centrality + f.focus_alignment)
