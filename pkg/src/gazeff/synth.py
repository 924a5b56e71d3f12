"""Deterministic synthetic datasets with planted high-attention episodes.

A scenario lists objects (piecewise-linear box tracks), fixation episodes
bound to one object each, and noise rates. Generation is seeded and writes
the same file formats :mod:`gazeff.ingest` reads.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .ingest import (
    BBox,
    Detection,
    GazeSample,
    Pattern,
    TaskAnnotation,
    format_detections,
    format_gaze,
    format_tasks,
)


class ScenarioError(ValueError):
    pass


@dataclass
class ObjectSpec:
    class_id: int
    keyframes: list[tuple[int, float, float, float, float]]  # frame, x, y, w, h
    conf: float = 0.9

    @property
    def first_frame(self) -> int:
        return int(self.keyframes[0][0])

    @property
    def last_frame(self) -> int:
        return int(self.keyframes[-1][0])


@dataclass
class EpisodeSpec:
    object: int
    start: int
    end: int
    fixation_ratio: float = 1.0
    label: str = ""


@dataclass
class NoiseSpec:
    blink_rate: float = 0.0
    saccade_rate: float = 0.0
    gaze_jitter: float = 0.0  # fraction of the half box size
    dropout_rate: float = 0.0
    idle_hit_rate: float = 0.0  # idle gaze landing on a visible object


@dataclass
class Scenario:
    n_frames: int
    width: int = 640
    height: int = 360
    fps: float = 30.0
    objects: list[ObjectSpec] = field(default_factory=list)
    episodes: list[EpisodeSpec] = field(default_factory=list)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    idle_fixation_rate: float = 0.3
    extra_tasks: list[tuple[int, int, str]] = field(default_factory=list)

    def validate(self) -> None:
        if self.n_frames <= 0 or self.width <= 0 or self.height <= 0 or not self.fps > 0:
            raise ScenarioError("n_frames, width, height and fps must be positive")
        for k, obj in enumerate(self.objects):
            if not obj.keyframes:
                raise ScenarioError(f"object {k} has no keyframes")
            frames = [kf[0] for kf in obj.keyframes]
            if any(b <= a for a, b in zip(frames, frames[1:])):
                raise ScenarioError(f"object {k} keyframes must have increasing frames")
            if frames[0] < 0 or frames[-1] >= self.n_frames:
                raise ScenarioError(f"object {k} keyframes outside the video")
            if any(kf[3] <= 0 or kf[4] <= 0 for kf in obj.keyframes):
                raise ScenarioError(f"object {k} has a non-positive box size")
            if not 0.0 <= obj.conf <= 1.0:
                raise ScenarioError(f"object {k} confidence outside [0, 1]")
        spans = []
        for k, ep in enumerate(self.episodes):
            if not 0 <= ep.start <= ep.end < self.n_frames:
                raise ScenarioError(f"episode {k} [{ep.start}, {ep.end}] outside the video")
            if not 0 <= ep.object < len(self.objects):
                raise ScenarioError(f"episode {k} references unknown object {ep.object}")
            obj = self.objects[ep.object]
            if ep.start < obj.first_frame or ep.end > obj.last_frame:
                raise ScenarioError(f"episode {k} extends past the lifetime of object {ep.object}")
            if not 0.0 <= ep.fixation_ratio <= 1.0:
                raise ScenarioError(f"episode {k} fixation_ratio outside [0, 1]")
            spans.append((ep.start, ep.end))
        spans.sort()
        if any(b[0] <= a[1] for a, b in zip(spans, spans[1:])):
            raise ScenarioError("episodes overlap")
        n = self.noise
        for name in ("blink_rate", "saccade_rate", "dropout_rate", "idle_hit_rate"):
            if not 0.0 <= getattr(n, name) <= 1.0:
                raise ScenarioError(f"noise {name} outside [0, 1]")
        if n.blink_rate + n.saccade_rate > 1.0:
            raise ScenarioError("blink_rate + saccade_rate exceeds 1")
        if not 0.0 <= n.gaze_jitter < 1.0:
            raise ScenarioError("gaze_jitter must be in [0, 1)")
        if not 0.0 <= self.idle_fixation_rate <= 1.0:
            raise ScenarioError("idle_fixation_rate outside [0, 1]")
        for s, e, _ in self.extra_tasks:
            if not 0 <= s <= e < self.n_frames:
                raise ScenarioError(f"task [{s}, {e}] outside the video")

    def to_dict(self) -> dict:
        return asdict(self)


def scenario_from_dict(d: dict[str, Any]) -> Scenario:
    try:
        objects = [
            ObjectSpec(
                class_id=int(o["class"] if "class" in o else o["class_id"]),
                keyframes=[tuple(float(v) if i else int(v) for i, v in enumerate(kf)) for kf in o["keyframes"]],
                conf=float(o.get("conf", 0.9)),
            )
            for o in d.get("objects", [])
        ]
        episodes = [
            EpisodeSpec(
                object=int(e["object"]),
                start=int(e["start"]),
                end=int(e["end"]),
                fixation_ratio=float(e.get("fixation_ratio", 1.0)),
                label=str(e.get("label", "")),
            )
            for e in d.get("episodes", [])
        ]
        noise = NoiseSpec(**d.get("noise", {}))
        extra = [(int(t[0]), int(t[1]), str(t[2])) for t in d.get("extra_tasks", [])]
        scenario = Scenario(
            n_frames=int(d["n_frames"]),
            width=int(d.get("width", 640)),
            height=int(d.get("height", 360)),
            fps=float(d.get("fps", 30.0)),
            objects=objects,
            episodes=episodes,
            noise=noise,
            idle_fixation_rate=float(d.get("idle_fixation_rate", 0.3)),
            extra_tasks=extra,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ScenarioError(f"invalid scenario: {exc!r}") from None
    for obj in scenario.objects:
        if any(len(kf) != 5 for kf in obj.keyframes):
            raise ScenarioError("keyframes must be [frame, x, y, w, h]")
    scenario.validate()
    return scenario


@dataclass
class SynthDataset:
    scenario: Scenario
    seed: int
    gaze: list[GazeSample]
    detections: dict[int, list[Detection]]
    tasks: list[TaskAnnotation]
    truth: list[dict]

    @property
    def meta(self) -> dict:
        s = self.scenario
        return {"frames": s.n_frames, "width": s.width, "height": s.height, "fps": s.fps, "seed": self.seed}

    def files(self) -> dict[str, str]:
        return {
            "gaze.csv": format_gaze(self.gaze),
            "detections.jsonl": format_detections(self.detections),
            "tasks.csv": format_tasks(self.tasks),
            "meta.json": json.dumps(self.meta, indent=2, sort_keys=True) + "\n",
            "truth.json": json.dumps(self.truth, indent=2, sort_keys=True) + "\n",
        }

    def write(self, directory) -> Path:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files().items():
            (out / name).write_text(text)
        return out


def _object_boxes(obj: ObjectSpec) -> tuple[np.ndarray, np.ndarray]:
    kf = np.asarray(obj.keyframes, dtype=float)
    frames = np.arange(obj.first_frame, obj.last_frame + 1)
    boxes = np.stack([np.interp(frames, kf[:, 0], kf[:, c]) for c in range(1, 5)], axis=1)
    return frames, np.round(boxes, 2)


def _point_in_box(rng_u: np.ndarray, box: BBox, jitter: float) -> tuple[float, float]:
    cx, cy = box.center
    x = cx + jitter * rng_u[0] * box.w / 2.0
    y = cy + jitter * rng_u[1] * box.h / 2.0
    x = min(max(round(x, 2), box.x), box.x + box.w)
    y = min(max(round(y, 2), box.y), box.y + box.h)
    return x, y


def synth_scenario(scenario: Scenario, seed: int = 0) -> SynthDataset:
    scenario.validate()
    rng = np.random.default_rng(seed)
    n, W, H = scenario.n_frames, scenario.width, scenario.height
    noise = scenario.noise

    # detections, kept as clipped boxes for gaze placement
    detections: dict[int, list[Detection]] = {}
    visible: list[list[tuple[int, BBox]]] = [[] for _ in range(n)]
    for k, obj in enumerate(scenario.objects):
        frames, boxes = _object_boxes(obj)
        drop = rng.random(len(frames)) < noise.dropout_rate
        for f, box, dropped in zip(frames, boxes, drop):
            raw = BBox(*(float(v) for v in box))
            clipped = raw.clip(W, H)
            if clipped.w <= 0 or clipped.h <= 0:
                continue
            visible[f].append((k, clipped))
            if not dropped:
                detections.setdefault(int(f), []).append(Detection(int(f), raw, obj.class_id, obj.conf))

    patterns = np.empty(n, dtype=object)
    bound = np.full(n, -1)
    truth = []
    for ep in sorted(scenario.episodes, key=lambda e: e.start):
        m = ep.end - ep.start + 1
        u = rng.random(m)
        pats = np.where(
            u < noise.blink_rate,
            Pattern.BLINK,
            np.where(u < noise.blink_rate + noise.saccade_rate, Pattern.SACCADE, Pattern.FIXATION),
        )
        n_fix = math.ceil(ep.fixation_ratio * m - 1e-9)
        is_fix = pats == Pattern.FIXATION
        have = int(is_fix.sum())
        if have < n_fix:
            pats[rng.choice(np.flatnonzero(~is_fix), n_fix - have, replace=False)] = Pattern.FIXATION
        elif have > n_fix:
            pats[rng.choice(np.flatnonzero(is_fix), have - n_fix, replace=False)] = Pattern.SACCADE
        patterns[ep.start : ep.end + 1] = pats
        bound[ep.start : ep.end + 1] = ep.object
        label = ep.label or f"episode_{len(truth)}"
        truth.append(
            {
                "start": ep.start,
                "end": ep.end,
                "label": label,
                "object": ep.object,
                "fixation_ratio": n_fix / m,
            }
        )

    idle = bound < 0
    u_pat = rng.random(n)
    u_fix = rng.random(n)
    u_hit = rng.random(n)
    u_jit = rng.uniform(-1.0, 1.0, size=(n, 2))
    u_pos = rng.random((n, 20, 2)) * (W, H)
    u_pick = rng.random(n)
    for i in np.flatnonzero(idle):
        if u_pat[i] < noise.blink_rate:
            patterns[i] = Pattern.BLINK
        else:
            patterns[i] = Pattern.FIXATION if u_fix[i] < scenario.idle_fixation_rate else Pattern.SACCADE

    gaze = []
    for i in range(n):
        pat = patterns[i]
        if pat is Pattern.BLINK:
            gaze.append(GazeSample(i, None, None, pat))
            continue
        if bound[i] >= 0:
            box = next((b for k, b in visible[i] if k == bound[i]), None)
            if box is None:
                raise ScenarioError(f"object {bound[i]} not inside the frame at {i}")
            x, y = _point_in_box(u_jit[i], box, noise.gaze_jitter)
        elif visible[i] and u_hit[i] < noise.idle_hit_rate:
            _, box = visible[i][int(u_pick[i] * len(visible[i]))]
            x, y = _point_in_box(u_jit[i], box, max(noise.gaze_jitter, 0.5))
        else:
            boxes = [b for _, b in visible[i]]
            cand = u_pos[i]
            pick = cand[-1]
            for c in cand:
                if not any(b.contains(c[0], c[1]) for b in boxes):
                    pick = c
                    break
            x, y = round(float(pick[0]), 2), round(float(pick[1]), 2)
        gaze.append(GazeSample(i, x, y, pat))

    tasks = [TaskAnnotation(t["start"], t["end"], t["label"]) for t in truth]
    tasks += [TaskAnnotation(s, e, label) for s, e, label in scenario.extra_tasks]
    tasks.sort(key=lambda t: (t.start_frame, t.end_frame))
    return SynthDataset(scenario, seed, gaze, detections, tasks, truth)


def random_scenario(
    seed: int,
    n_frames: Optional[int] = None,
    n_episodes: Optional[int] = None,
    n_distractor_groups: int = 2,
    noise: Optional[NoiseSpec] = None,
    fps: float = 30.0,
    width: int = 640,
    height: int = 360,
) -> Scenario:
    """Random video with gaze-coupled episodes and gaze-decoupled distractor groups.

    Distractors are groups of 2-4 objects shown together in windows that do
    not overlap any episode, and idle gaze avoids them.
    """
    rng = np.random.default_rng(seed)
    if n_frames is None:
        n_frames = int(rng.integers(3000, 10001))
    if n_episodes is None:
        n_episodes = int(rng.integers(1, 5))
    sec = int(round(fps))

    # carve non-overlapping windows: episodes first, distractor groups after
    windows: list[tuple[int, int]] = []

    def place(length: int, margin: int) -> Optional[tuple[int, int]]:
        for _ in range(200):
            s = int(rng.integers(margin, max(margin + 1, n_frames - length - margin)))
            e = s + length - 1
            if e >= n_frames - margin:
                continue
            if all(e + margin < a or s - margin > b for a, b in windows):
                windows.append((s, e))
                return s, e
        return None

    objects: list[ObjectSpec] = []
    episodes: list[EpisodeSpec] = []
    for k in range(n_episodes):
        length = int(rng.integers(5 * sec, 12 * sec + 1))
        span = place(length, 3 * sec)
        if span is None:
            break
        s, e = span
        w, h = rng.uniform(50, 160), rng.uniform(40, 120)
        x0, y0 = rng.uniform(0, width - w), rng.uniform(0, height - h)
        dx, dy = rng.uniform(-30, 30, size=2)
        x1 = float(np.clip(x0 + dx, 0, width - w))
        y1 = float(np.clip(y0 + dy, 0, height - h))
        pre, post = int(rng.integers(0, sec)), int(rng.integers(0, sec))
        first, last = max(0, s - pre), min(n_frames - 1, e + post)
        objects.append(
            ObjectSpec(
                class_id=int(rng.integers(0, 10)),
                keyframes=[(first, x0, y0, w, h), (last, x1, y1, w, h)],
                conf=float(round(rng.uniform(0.6, 0.99), 3)),
            )
        )
        episodes.append(
            EpisodeSpec(len(objects) - 1, s, e, fixation_ratio=float(round(rng.uniform(0.6, 1.0), 3)), label=f"task_{k}")
        )

    for g in range(n_distractor_groups):
        length = int(rng.integers(5 * sec, 20 * sec + 1))
        span = place(length, sec)
        if span is None:
            break
        s, e = span
        for _ in range(int(rng.integers(2, 5))):
            w, h = rng.uniform(40, 200), rng.uniform(40, 150)
            x0, y0 = rng.uniform(0, width - w), rng.uniform(0, height - h)
            objects.append(
                ObjectSpec(
                    class_id=int(rng.integers(0, 10)),
                    keyframes=[(s, x0, y0, w, h), (e, x0 + rng.uniform(-40, 40), y0, w, h)],
                    conf=float(round(rng.uniform(0.5, 0.99), 3)),
                )
            )

    return Scenario(
        n_frames=n_frames,
        width=width,
        height=height,
        fps=fps,
        objects=objects,
        episodes=episodes,
        noise=noise or NoiseSpec(),
    )
