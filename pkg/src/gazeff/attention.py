"""Focused-object resolution and the visual-interaction score."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ingest import Detection, FrameContext, Pattern

# visual-interaction level per eye-movement state, given a focused object
INTERACTION_LEVEL = {
    Pattern.FIXATION: 1.0,
    Pattern.SACCADE: 0.5,
    Pattern.BLINK: 0.0,
    Pattern.MISSING: 0.0,
}


@dataclass(frozen=True)
class FocusResolution:
    frame: int
    focused: Optional[Detection]
    candidates_hit: int


def _focus_key(indexed: tuple[int, Detection]):
    order, det = indexed
    # smallest area, then most confident, then lowest class id, then list order
    return (det.bbox.area, -det.confidence, det.class_id, order)


def resolve_focus(ctx: FrameContext) -> FocusResolution:
    """Pick the smallest box containing the gaze point as the object in focus.

    Blink and missing samples carry no gaze position, so nothing is focused.
    """
    gaze = ctx.gaze
    if not gaze.has_position:
        return FocusResolution(ctx.frame, None, 0)
    hits = [(k, d) for k, d in enumerate(ctx.detections) if d.bbox.contains(gaze.x, gaze.y)]
    if not hits:
        return FocusResolution(ctx.frame, None, 0)
    _, best = min(hits, key=_focus_key)
    return FocusResolution(ctx.frame, best, len(hits))


def visual_interaction(ctx: FrameContext, res: FocusResolution) -> float:
    if res.focused is None:
        return 0.0
    return INTERACTION_LEVEL[ctx.gaze.pattern]
