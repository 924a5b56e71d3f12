"""Evaluation protocol: high-attention tasks, emphasized actions, speed-up error, jitter."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .ingest import GazeSample, Pattern, TaskAnnotation
from .selection import SelectionResult

HIGH_ATTENTION_MIN_FIXATION = 0.5


@dataclass(frozen=True)
class HighAttentionTask:
    task: TaskAnnotation
    fixation_ratio: float


@dataclass
class EvalReport:
    ea_count: int
    ea_ratio: Optional[float]
    n_high_attention: int
    speedup_error: float
    jitter: float
    emphasized_segments: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def ea_defined(self) -> bool:
        return self.ea_ratio is not None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["emphasized_segments"] = [list(e) for e in self.emphasized_segments]
        d["ea_defined"] = self.ea_defined
        return d


def fixation_ratio(task: TaskAnnotation, fixation_frames: set[int]) -> float:
    hits = sum(1 for f in range(task.start_frame, task.end_frame + 1) if f in fixation_frames)
    return hits / task.length


def high_attention_tasks(
    tasks: Iterable[TaskAnnotation],
    gaze: Iterable[GazeSample],
    min_ratio: float = HIGH_ATTENTION_MIN_FIXATION,
) -> list[HighAttentionTask]:
    """Tasks with at least ``min_ratio`` of their frames logged as fixation.

    Frames with no gaze record count as non-fixation.
    """
    fixations = {g.frame for g in gaze if g.pattern is Pattern.FIXATION}
    out = []
    for task in tasks:
        r = fixation_ratio(task, fixations)
        if r >= min_ratio:
            out.append(HighAttentionTask(task, r))
    return out


def emphasized_segments(result: SelectionResult, target_speedup: float) -> list[tuple[int, int, int]]:
    plan = result.plan
    return [
        (seg.start_frame, seg.end_frame, p)
        for seg, p in zip(plan.segments, plan.rates)
        if p < target_speedup / 2.0
    ]


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


def emphasized_actions(
    emphasized: Sequence[tuple[int, ...]], high_attention: Sequence[tuple[int, int]]
) -> tuple[int, Optional[float]]:
    """Count high-attention spans that share at least one frame with an emphasized span."""
    count = sum(
        1 for h in high_attention if any(_overlaps((e[0], e[1]), (h[0], h[1])) for e in emphasized)
    )
    if not high_attention:
        return count, None
    return count, count / len(high_attention)


def speedup_error(result: SelectionResult, target_speedup: float) -> float:
    return abs(result.achieved_speedup - target_speedup)


def jitter(selected: Sequence[int]) -> float:
    """Coefficient of variation of consecutive gaps between selected frames."""
    if len(selected) < 2:
        raise ValueError("jitter needs at least two selected frames")
    gaps = np.diff(np.asarray(selected, dtype=float))
    return float(np.std(gaps) / np.mean(gaps))


def evaluate(
    result: SelectionResult,
    tasks: Iterable[TaskAnnotation],
    gaze: Iterable[GazeSample],
    target_speedup: float,
) -> EvalReport:
    H = high_attention_tasks(tasks, gaze)
    E = emphasized_segments(result, target_speedup)
    spans = [(h.task.start_frame, h.task.end_frame) for h in H]
    count, ratio = emphasized_actions(E, spans)
    jit = jitter(result.selected) if len(result.selected) >= 2 else 0.0
    return EvalReport(
        ea_count=count,
        ea_ratio=ratio,
        n_high_attention=len(H),
        speedup_error=speedup_error(result, target_speedup),
        jitter=jit,
        emphasized_segments=E,
    )
