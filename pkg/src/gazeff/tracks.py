"""Focus tracks: spans of sustained interaction with one object.

A track collects the frames where the focused object keeps the same class
and overlaps its previous box (IoU). Short interruptions of up to
``gap_tolerance`` frames are bridged; longer ones close the track and a
later return starts a new one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .attention import FocusResolution
from .ingest import BBox


@dataclass
class FocusTrack:
    track_id: int
    class_id: int
    start_frame: int
    end_frame: int
    boxes: dict[int, BBox] = field(default_factory=dict)
    gap_frames: int = 0

    @property
    def duration(self) -> int:
        return self.end_frame - self.start_frame + 1

    @property
    def last_box(self) -> BBox:
        return self.boxes[self.end_frame]


@dataclass
class TrackAssignment:
    """Frame -> track id for frames whose focused object joined a track."""

    track_ids: dict[int, int] = field(default_factory=dict)

    def get(self, frame: int) -> Optional[int]:
        return self.track_ids.get(frame)

    def __len__(self):
        return len(self.track_ids)


def build_tracks(
    resolutions: Sequence[FocusResolution], iou_min: float = 0.3, gap_tolerance: int = 15
) -> tuple[list[FocusTrack], TrackAssignment]:
    if not 0.0 < iou_min <= 1.0:
        raise ValueError(f"iou_min must be in (0, 1], got {iou_min}")
    if gap_tolerance < 0:
        raise ValueError(f"gap_tolerance must be >= 0, got {gap_tolerance}")

    tracks: list[FocusTrack] = []
    open_tracks: list[FocusTrack] = []
    assignment = TrackAssignment()
    prev_frame = None
    for res in resolutions:
        i = res.frame
        if prev_frame is not None and i <= prev_frame:
            raise ValueError("resolutions must be sorted by strictly increasing frame")
        prev_frame = i
        # a track missing more than gap_tolerance frames has lost attention
        open_tracks = [t for t in open_tracks if i - t.end_frame - 1 <= gap_tolerance]
        det = res.focused
        if det is None:
            continue
        best, best_iou = None, -1.0
        for t in open_tracks:
            if t.class_id != det.class_id:
                continue
            score = t.last_box.iou(det.bbox)
            # strict '>' keeps the oldest track on equal overlap
            if score >= iou_min and score > best_iou:
                best, best_iou = t, score
        if best is None:
            best = FocusTrack(len(tracks), det.class_id, i, i, {i: det.bbox})
            tracks.append(best)
            open_tracks.append(best)
        else:
            best.gap_frames += i - best.end_frame - 1
            best.end_frame = i
            best.boxes[i] = det.bbox
        assignment.track_ids[i] = best.track_id
    return tracks, assignment


def t_max(tracks: Sequence[FocusTrack]) -> int:
    return max((t.duration for t in tracks), default=0)


def temporal_relevance(
    frame: int, assignment: TrackAssignment, tracks: Sequence[FocusTrack], longest: int
) -> float:
    tid = assignment.get(frame)
    if tid is None or longest <= 0:
        return 0.0
    return tracks[tid].duration / longest


def novelty_decay(elapsed_s: float, alpha_s: float) -> float:
    """1 while the focus is younger than ``alpha_s`` seconds, then exp(-(et - alpha)/2)."""
    if elapsed_s < alpha_s:
        return 1.0
    return math.exp(-(elapsed_s - alpha_s) / 2.0)


def novelty(
    frame: int,
    assignment: TrackAssignment,
    tracks: Sequence[FocusTrack],
    alpha_s: float = 5.0,
    fps: float = 30.0,
) -> float:
    if alpha_s <= 0:
        raise ValueError(f"alpha_s must be positive, got {alpha_s}")
    tid = assignment.get(frame)
    if tid is None:
        return 1.0
    elapsed = (frame - tracks[tid].start_frame) / fps
    return novelty_decay(elapsed, alpha_s)
