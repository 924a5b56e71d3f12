"""Fused semantic profile and relevant/non-relevant segmentation."""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class Label(enum.Enum):
    RELEVANT = "relevant"
    NON_RELEVANT = "non_relevant"


@dataclass(frozen=True)
class SemanticProfile:
    v: np.ndarray
    t: np.ndarray
    s: np.ndarray
    n: np.ndarray
    S: np.ndarray
    S_hat: np.ndarray

    def __len__(self):
        return len(self.S)


@dataclass(frozen=True)
class Segment:
    start_frame: int
    end_frame: int
    label: Label
    mean_score: float

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame + 1

    @property
    def relevant(self) -> bool:
        return self.label is Label.RELEVANT


def box_filter(x: np.ndarray, width: int) -> np.ndarray:
    """Centered moving average with edge renormalization; width <= 1 is identity."""
    if width <= 1:
        return x.copy()
    kernel = np.ones(width)
    num = np.convolve(x, kernel, mode="same")
    den = np.convolve(np.ones_like(x), kernel, mode="same")
    return num / den


def normalize(S: np.ndarray) -> np.ndarray:
    peak = S.max() if len(S) else 0.0
    if peak <= 0:
        return np.zeros_like(S)
    return S / peak


def compose(v, t, s, n, smooth_frames: int = 0) -> SemanticProfile:
    """Multiply the four channels per frame and max-normalize.

    ``smooth_frames`` > 1 box-filters the product before normalization; ``S``
    always keeps the raw product.
    """
    chans = [np.asarray(c, dtype=float) for c in (v, t, s, n)]
    if len({c.shape for c in chans}) != 1 or chans[0].ndim != 1:
        raise ValueError(f"channel shapes differ: {[c.shape for c in chans]}")
    v, t, s, n = chans
    S = v * t * s * n
    S_hat = normalize(box_filter(S, smooth_frames))
    return SemanticProfile(v, t, s, n, S, S_hat)


def profile_from_scores(S_hat) -> SemanticProfile:
    """Wrap an externally computed, already normalized score vector."""
    S_hat = np.asarray(S_hat, dtype=float)
    ones = np.ones_like(S_hat)
    return SemanticProfile(ones, ones, S_hat, ones, S_hat.copy(), S_hat)


def relevance_threshold(S_hat: np.ndarray, percentile: float) -> float:
    nonzero = S_hat[S_hat > 0]
    if nonzero.size == 0:
        return math.inf
    return float(np.percentile(nonzero, percentile))


class Run:
    __slots__ = ("start", "end", "relevant", "prev", "next", "alive")

    def __init__(self, start: int, end: int, relevant: bool):
        self.start, self.end, self.relevant = start, end, relevant
        self.prev = self.next = None
        self.alive = True

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def __lt__(self, other):
        return self.start < other.start


def _runs(labels: np.ndarray) -> list[list[int]]:
    """[start, end, is_relevant] for each maximal constant run."""
    edges = np.flatnonzero(np.diff(labels.astype(np.int8))) + 1
    starts = np.concatenate(([0], edges))
    ends = np.concatenate((edges - 1, [len(labels) - 1]))
    return [[int(a), int(b), bool(labels[a])] for a, b in zip(starts, ends)]


def segment(
    S_hat: Sequence[float],
    threshold_percentile: float = 75.0,
    min_seg_s: float = 1.0,
    fps: float = 30.0,
) -> list[Segment]:
    """Split the video into relevant and non-relevant spans.

    A frame is relevant when its normalized score is nonzero and reaches the
    given percentile of the nonzero scores. Runs shorter than ``min_seg_s``
    are absorbed, shortest first, into the neighbour whose mean score is
    closer (the preceding one on ties).
    """
    S_hat = np.asarray(S_hat, dtype=float)
    if S_hat.size == 0:
        raise ValueError("cannot segment an empty profile")
    if not 0.0 < threshold_percentile < 100.0:
        raise ValueError(f"threshold_percentile must be in (0, 100), got {threshold_percentile}")
    if min_seg_s <= 0 or fps <= 0:
        raise ValueError("min_seg_s and fps must be positive")

    thr = relevance_threshold(S_hat, threshold_percentile)
    labels = (S_hat > 0) & (S_hat >= thr)
    runs = [Run(a, b, rel) for a, b, rel in _runs(labels)]
    for k, r in enumerate(runs):
        r.prev = runs[k - 1] if k else None
        r.next = runs[k + 1] if k + 1 < len(runs) else None
    min_len = math.ceil(min_seg_s * fps)
    csum = np.concatenate(([0.0], np.cumsum(S_hat)))

    def mean(a, b):
        return (csum[b + 1] - csum[a]) / (b - a + 1)

    # shortest run first, earliest on ties; stale heap entries are skipped
    heap = [(r.length, r.start, r) for r in runs]
    heapq.heapify(heap)
    head = runs[0]
    while heap:
        length, start, r = heapq.heappop(heap)
        if not r.alive or r.length != length or r.start != start:
            continue
        if length >= min_len or (r.prev is None and r.next is None):
            break
        m = mean(r.start, r.end)
        if r.prev is None:
            target = r.next
        elif r.next is None:
            target = r.prev
        else:
            before = abs(m - mean(r.prev.start, r.prev.end))
            after = abs(m - mean(r.next.start, r.next.end))
            target = r.prev if before <= after else r.next
        # absorb r into target, then coalesce with same-label neighbours
        merged = Run(min(r.start, target.start), max(r.end, target.end), target.relevant)
        left = r.prev if target is r.next else target.prev
        right = r.next if target is r.prev else target.next
        r.alive = target.alive = False
        while left is not None and left.relevant == merged.relevant:
            left.alive = False
            merged.start = left.start
            left = left.prev
        while right is not None and right.relevant == merged.relevant:
            right.alive = False
            merged.end = right.end
            right = right.next
        merged.prev, merged.next = left, right
        if left is None:
            head = merged
        else:
            left.next = merged
        if right is not None:
            right.prev = merged
        heapq.heappush(heap, (merged.length, merged.start, merged))

    out = []
    r = head
    while r is not None:
        label = Label.RELEVANT if r.relevant else Label.NON_RELEVANT
        out.append(Segment(r.start, r.end, label, float(mean(r.start, r.end))))
        r = r.next
    return out


def detection_count_scores(contexts) -> np.ndarray:
    """Baseline semantics: number of detected objects per frame, max-normalized."""
    counts = np.array([len(c.detections) for c in contexts], dtype=float)
    return normalize(counts)
