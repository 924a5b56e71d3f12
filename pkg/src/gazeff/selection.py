"""Speed-up allocation across segments and frame sampling within them.

Rates are integers chosen to make the output length match the global
target while keeping relevant segments at emphasized (low) rates. Inside a
segment, frames are picked by a shortest path whose edge cost prefers gaps
close to the segment rate and landing on high-score frames.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .profile import Segment

logger = logging.getLogger(__name__)

EXHAUSTIVE_MAX_SEGMENTS = 4
_TIE_TOL = 1e-12


class InvariantError(RuntimeError):
    """Internal consistency check failed."""


@dataclass
class RatePlan:
    segments: list[Segment]
    rates: list[int]
    target_speedup: float
    p_max: int
    emphasis_cap: int
    objective: float
    infeasible: bool = False

    @property
    def expected_output(self) -> int:
        return sum(math.ceil(s.length / p) for s, p in zip(self.segments, self.rates))


@dataclass
class SelectionResult:
    selected: list[int]
    plan: RatePlan
    n_frames: int
    achieved_speedup: float = field(init=False)

    def __post_init__(self):
        self.achieved_speedup = self.n_frames / len(self.selected)


def emphasis_cap(target_speedup: float) -> int:
    """Largest integer rate strictly below half the target speed-up."""
    return math.ceil(target_speedup / 2.0) - 1


def default_p_max(target_speedup: float) -> int:
    return math.ceil(4 * target_speedup)


class _Objective:
    """J = |sum L/p - N/F| + lam * sum_{relevant} L * max(0, p - cap) / N."""

    def __init__(self, lengths, relevant, target_speedup, cap, lam):
        self.L = np.asarray(lengths, dtype=float)
        self.rel = np.asarray(relevant, dtype=bool)
        self.N = float(self.L.sum())
        self.goal = self.N / target_speedup
        self.cap = cap
        self.lam = lam

    def output_terms(self, k, p):
        return self.L[k] / p

    def penalty_terms(self, k, p):
        if not self.rel[k]:
            return np.zeros_like(np.asarray(p, dtype=float))
        return self.lam * self.L[k] * np.maximum(0, p - self.cap) / self.N

    def __call__(self, rates) -> float:
        rates = np.asarray(rates, dtype=float)
        out = float(np.sum(self.L / rates))
        pen = float(np.sum(np.where(self.rel, self.L * np.maximum(0.0, rates - self.cap), 0.0)))
        return abs(out - self.goal) + self.lam * pen / self.N


def _tie_key(rates, relevant):
    return tuple(p for p, r in zip(rates, relevant) if r), tuple(rates)


def _exhaustive(obj: _Objective, K: int, p_max: int) -> list[int]:
    P = np.arange(1, p_max + 1, dtype=float)
    if K == 1:
        J = np.abs(obj.output_terms(0, P) - obj.goal) + obj.penalty_terms(0, P)
        best = J.min()
        return [int(np.flatnonzero(J <= best + _TIE_TOL * max(1.0, best))[0]) + 1]

    # the first axis is looped over to bound memory at p_max ** (K - 1) floats
    rest_shape = (p_max,) * (K - 1)
    out_rest = np.zeros(rest_shape)
    pen_rest = np.zeros(rest_shape)
    for k in range(1, K):
        shape = [1] * (K - 1)
        shape[k - 1] = p_max
        out_rest = out_rest + obj.output_terms(k, P).reshape(shape)
        pen_rest = pen_rest + obj.penalty_terms(k, P).reshape(shape)

    def chunk(p0):
        out = obj.output_terms(0, p0) + out_rest
        return np.abs(out - obj.goal) + obj.penalty_terms(0, p0) + pen_rest

    best = min(float(chunk(p0).min()) for p0 in P)
    tol = _TIE_TOL * max(1.0, best)
    candidates = []
    for p0 in P:
        J = chunk(p0)
        for idx in zip(*np.nonzero(J <= best + tol)):
            candidates.append([int(p0)] + [int(i) + 1 for i in idx])
    return min(candidates, key=lambda r: _tie_key(r, obj.rel))


def _descend(obj: _Objective, rates: list[int], p_max: int, max_sweeps: int = 200) -> list[int]:
    """Block coordinate descent over single rates, then pairs of rates."""
    P = np.arange(1, p_max + 1, dtype=float)
    K = len(rates)
    rates = list(rates)
    out = sum(obj.L[k] / rates[k] for k in range(K))
    pen = sum(float(obj.penalty_terms(k, rates[k])) for k in range(K))
    current = abs(out - obj.goal) + pen

    for _ in range(max_sweeps):
        improved = False
        for k in range(K):
            base_out = out - obj.L[k] / rates[k]
            base_pen = pen - float(obj.penalty_terms(k, rates[k]))
            J = np.abs(base_out + obj.output_terms(k, P) - obj.goal) + base_pen + obj.penalty_terms(k, P)
            j = int(np.argmin(J))
            if J[j] < current - 1e-12:
                rates[k] = j + 1
                out = base_out + obj.L[k] / rates[k]
                pen = base_pen + float(obj.penalty_terms(k, rates[k]))
                current = float(J[j])
                improved = True
        for k, m in itertools.combinations(range(K), 2):
            base_out = out - obj.L[k] / rates[k] - obj.L[m] / rates[m]
            base_pen = (
                pen - float(obj.penalty_terms(k, rates[k])) - float(obj.penalty_terms(m, rates[m]))
            )
            J = (
                np.abs(base_out + obj.output_terms(k, P)[:, None] + obj.output_terms(m, P)[None, :] - obj.goal)
                + base_pen
                + obj.penalty_terms(k, P)[:, None]
                + obj.penalty_terms(m, P)[None, :]
            )
            a, b = np.unravel_index(int(np.argmin(J)), J.shape)
            if J[a, b] < current - 1e-12:
                rates[k], rates[m] = int(a) + 1, int(b) + 1
                out = base_out + obj.L[k] / rates[k] + obj.L[m] / rates[m]
                pen = base_pen + float(obj.penalty_terms(k, rates[k])) + float(obj.penalty_terms(m, rates[m]))
                current = float(J[a, b])
                improved = True
        if not improved:
            break
    return rates


def _starts(obj: _Objective, K: int, F: float, p_max: int, restarts: int) -> list[list[int]]:
    def clamp(p):
        return int(min(max(round(p), 1), p_max))

    uniform = [clamp(F)] * K
    low = max(obj.cap, 1)
    rel_out = float(np.sum(obj.L[obj.rel])) / low
    nonrel_len = float(np.sum(obj.L[~obj.rel]))
    remaining = obj.goal - rel_out
    balance = clamp(nonrel_len / remaining) if remaining > 0 and nonrel_len > 0 else p_max
    emphasized = [low if r else balance for r in obj.rel]
    starts = [uniform, emphasized, [low if r else p_max for r in obj.rel]]
    rng = np.random.default_rng(0)
    for _ in range(restarts):
        starts.append([int(p) for p in rng.integers(1, p_max + 1, size=K)])
    return starts


def allocate_rates(
    segments: Sequence[Segment],
    target_speedup: float,
    p_max: Optional[int] = None,
    lambda_emphasis: float = 10.0,
    restarts: int = 4,
) -> RatePlan:
    """Choose one integer speed-up per segment.

    Up to four segments the plan is the exact minimizer over
    ``[1, p_max] ** K``; beyond that it comes from block coordinate descent
    started from the uniform plan plus a few deterministic restarts.
    """
    F = float(target_speedup)
    if not F > 1.0:
        raise ValueError(f"target speed-up must exceed 1, got {F}")
    if not segments:
        raise ValueError("no segments to allocate")
    p_max = default_p_max(F) if p_max is None else int(p_max)
    if p_max < 1:
        raise ValueError(f"p_max must be >= 1, got {p_max}")
    segments = list(segments)
    K = len(segments)
    cap = emphasis_cap(F)
    obj = _Objective(
        [s.length for s in segments], [s.relevant for s in segments], F, cap, lambda_emphasis
    )

    if p_max < F:
        # not even the fastest allowed rate reaches the output budget
        logger.warning("p_max=%d below target speed-up %.3g; using boundary plan", p_max, F)
        rates = [p_max] * K
        return RatePlan(segments, rates, F, p_max, cap, obj(rates), infeasible=True)

    if K <= EXHAUSTIVE_MAX_SEGMENTS:
        rates = _exhaustive(obj, K, p_max)
    else:
        best, best_J = None, math.inf
        for start in _starts(obj, K, F, p_max, restarts):
            cand = _descend(obj, start, p_max)
            J = obj(cand)
            if best is None or J < best_J - 1e-12 or (
                abs(J - best_J) <= 1e-12 and _tie_key(cand, obj.rel) < _tie_key(best, obj.rel)
            ):
                best, best_J = cand, J
        rates = best
    return RatePlan(segments, [int(p) for p in rates], F, p_max, cap, obj(rates))


def edge_cost(gap: int, rate: int, score: float, gamma: float) -> float:
    return (gap - rate) ** 2 + gamma * (1.0 - score)


def sample_frames(
    start: int, end: int, rate: int, S_hat: Sequence[float], gamma: float = 0.5
) -> tuple[list[int], float]:
    """Shortest path from ``start`` to one of the last ``rate`` frames of the segment.

    Edges join frames 1..2*rate apart. Returns the selected global indices and
    the path cost.
    """
    if rate < 1:
        raise ValueError(f"rate must be >= 1, got {rate}")
    if end < start:
        raise ValueError(f"empty segment [{start}, {end}]")
    s = np.asarray(S_hat[start : end + 1], dtype=float)
    L = len(s)
    if L == 1:
        return [start], 0.0

    max_gap = 2 * rate
    # gap_cost[d] for d = 1..max_gap, stored reversed so a window slice lines up
    gap_cost_rev = ((np.arange(max_gap, 0, -1) - rate) ** 2).astype(float)
    sem = gamma * (1.0 - s)
    cost = np.full(L, np.inf)
    pred = np.full(L, -1, dtype=np.int64)
    cost[0] = 0.0
    for j in range(1, L):
        lo = max(0, j - max_gap)
        w = gap_cost_rev[max_gap - (j - lo) :] + sem[j]
        c = cost[lo:j] + w
        k = int(np.argmin(c))
        cost[j] = c[k]
        pred[j] = lo + k

    first_terminal = max(0, L - rate)
    j = first_terminal + int(np.argmin(cost[first_terminal:]))
    total = float(cost[j])
    path = []
    while j >= 0:
        path.append(j)
        j = int(pred[j])
    return [start + k for k in reversed(path)], total


def assemble(selections: Sequence[Sequence[int]], n_frames: int, plan: RatePlan) -> SelectionResult:
    out: list[int] = []
    for sel in selections:
        for idx in sel:
            if out and idx == out[-1]:
                continue
            if out and idx < out[-1]:
                raise InvariantError(f"selection not increasing: {idx} after {out[-1]}")
            out.append(int(idx))
    if not out:
        raise InvariantError("empty selection")
    if out[0] < 0 or out[-1] >= n_frames:
        raise InvariantError(f"selected frame outside [0, {n_frames})")
    return SelectionResult(out, plan, n_frames)


def select_frames(
    S_hat: Sequence[float],
    segments: Sequence[Segment],
    target_speedup: float,
    p_max: Optional[int] = None,
    lambda_emphasis: float = 10.0,
    gamma: float = 0.5,
) -> SelectionResult:
    plan = allocate_rates(segments, target_speedup, p_max, lambda_emphasis)
    S_hat = np.asarray(S_hat, dtype=float)
    picks = [
        sample_frames(seg.start_frame, seg.end_frame, p, S_hat, gamma)[0]
        for seg, p in zip(plan.segments, plan.rates)
    ]
    return assemble(picks, len(S_hat), plan)
