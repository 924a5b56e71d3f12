"""Input parsing and per-frame alignment.

Three streams feed the pipeline:

- gaze CSV (``frame,x,y,pattern``), one row per eye-tracker sample
- detections JSON-lines, one object per frame with a ``boxes`` list
- task annotations CSV (``start,end,label``), inclusive frame spans

Every parser accepts raw ``bytes``/``str`` content or an open file object
(text or binary). Coordinates stay in pixels here.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple, Optional, Union

logger = logging.getLogger(__name__)

Source = Union[bytes, str, IO[bytes], IO[str]]


class ParseError(ValueError):
    """Malformed input record. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Pattern(enum.Enum):
    FIXATION = "fixation"
    SACCADE = "saccade"
    BLINK = "blink"
    MISSING = "missing"

    @property
    def has_position(self) -> bool:
        return self in (Pattern.FIXATION, Pattern.SACCADE)


def _clip_axis(start: float, size: float, limit: float) -> tuple[float, float]:
    if start >= 0.0 and start + size <= limit:
        return start, size  # untouched, so in-frame boxes round-trip exactly
    lo = min(max(start, 0.0), limit)
    hi = min(max(start + size, 0.0), limit)
    return lo, hi - lo


class BBox(NamedTuple):
    """Axis-aligned box, top-left origin, in pixels."""

    x: float
    y: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return max(self.w, 0.0) * max(self.h, 0.0)

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    def contains(self, px: float, py: float) -> bool:
        # closed intervals: edge points count as inside
        return self.x <= px <= self.x + self.w and self.y <= py <= self.y + self.h

    def clip(self, width: float, height: float) -> "BBox":
        x, w = _clip_axis(self.x, self.w, width)
        y, h = _clip_axis(self.y, self.h, height)
        return BBox(x, y, w, h)

    def iou(self, other: "BBox") -> float:
        ix = min(self.x + self.w, other.x + other.w) - max(self.x, other.x)
        iy = min(self.y + self.h, other.y + other.h) - max(self.y, other.y)
        inter = max(ix, 0.0) * max(iy, 0.0)
        union = self.area + other.area - inter
        return inter / union if union > 0 else 0.0


@dataclass(frozen=True)
class GazeSample:
    frame: int
    x: Optional[float]
    y: Optional[float]
    pattern: Pattern

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"negative frame index {self.frame}")
        if self.pattern.has_position:
            if self.x is None or self.y is None or not (
                math.isfinite(self.x) and math.isfinite(self.y)
            ):
                raise ValueError(
                    f"frame {self.frame}: {self.pattern.value} sample needs a finite position"
                )

    @property
    def has_position(self) -> bool:
        return self.pattern.has_position


@dataclass(frozen=True)
class Detection:
    frame: int
    bbox: BBox
    class_id: int
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class FrameContext:
    frame: int
    width: int
    height: int
    gaze: GazeSample
    detections: tuple[Detection, ...] = ()


@dataclass(frozen=True)
class TaskAnnotation:
    start_frame: int
    end_frame: int
    label: str

    def __post_init__(self):
        if self.start_frame < 0 or self.end_frame < self.start_frame:
            raise ValueError(f"bad task span [{self.start_frame}, {self.end_frame}]")

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame + 1


class DetectionMap(dict):
    """``frame -> list[Detection]`` plus the count of records dropped while parsing."""

    def __init__(self, *args, skipped: int = 0, **kwargs):
        super().__init__(*args, **kwargs)
        self.skipped = skipped


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _csv_rows(text: str, header: tuple[str, ...]) -> Iterable[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)`` after validating the header; blank lines skipped."""
    reader = csv.reader(io.StringIO(text))
    seen_header = False
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if not seen_header:
            got = tuple(cell.strip().lower() for cell in row)
            if got != header:
                raise ParseError(f"expected header {','.join(header)!r}, got {','.join(row)!r}", lineno)
            seen_header = True
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        yield lineno, [cell.strip() for cell in row]


def _int(value: str, name: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{name} is not an integer: {value!r}", lineno) from None


def _float(value: str, name: str, lineno: int) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ParseError(f"{name} is not a number: {value!r}", lineno) from None
    if not math.isfinite(out):
        raise ParseError(f"{name} is not finite: {value!r}", lineno)
    return out


def parse_gaze(source: Source) -> list[GazeSample]:
    samples: dict[int, GazeSample] = {}
    for lineno, (f, x, y, pat) in _csv_rows(_read_text(source), ("frame", "x", "y", "pattern")):
        frame = _int(f, "frame", lineno)
        if frame < 0:
            raise ParseError(f"negative frame {frame}", lineno)
        try:
            pattern = Pattern(pat.lower())
        except ValueError:
            raise ParseError(f"unknown gaze pattern {pat!r}", lineno) from None
        if pattern.has_position:
            if not x or not y:
                raise ParseError(f"{pattern.value} row without a position", lineno)
            gx, gy = _float(x, "x", lineno), _float(y, "y", lineno)
        else:
            gx = gy = None
        if frame in samples:
            raise ParseError(f"duplicate gaze record for frame {frame}", lineno)
        samples[frame] = GazeSample(frame, gx, gy, pattern)
    return [samples[k] for k in sorted(samples)]


def parse_detections(
    source: Source, width: Optional[float] = None, height: Optional[float] = None
) -> DetectionMap:
    """Group detections by frame, clipping boxes to the frame when dims are given.

    Boxes with non-positive size (before or after clipping) are dropped and
    counted in ``DetectionMap.skipped``.
    """
    out = DetectionMap()
    skipped = 0
    for lineno, line in enumerate(_read_text(source).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            frame = record["frame"]
            boxes = record["boxes"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"malformed detection record: {exc}", lineno) from None
        if not isinstance(frame, int) or isinstance(frame, bool) or frame < 0:
            raise ParseError(f"bad frame index {frame!r}", lineno)
        if not isinstance(boxes, list):
            raise ParseError("'boxes' must be a list", lineno)
        bucket = out.setdefault(frame, [])
        for raw in boxes:
            try:
                bbox = BBox(*(float(raw[k]) for k in ("x", "y", "w", "h")))
                class_id = int(raw["class"])
                conf = float(raw["conf"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"malformed box: {exc}", lineno) from None
            if not all(math.isfinite(v) for v in bbox) or not math.isfinite(conf):
                raise ParseError("non-finite box value", lineno)
            if not 0.0 <= conf <= 1.0:
                raise ParseError(f"confidence {conf} outside [0, 1]", lineno)
            if bbox.w <= 0 or bbox.h <= 0:
                skipped += 1
                continue
            if width is not None and height is not None:
                bbox = bbox.clip(width, height)
                if bbox.w <= 0 or bbox.h <= 0:
                    skipped += 1
                    continue
            bucket.append(Detection(frame, bbox, class_id, conf))
    if skipped:
        logger.warning("skipped %d detection box(es) with non-positive size", skipped)
    return DetectionMap({k: out[k] for k in sorted(out)}, skipped=skipped)


def parse_tasks(source: Source) -> list[TaskAnnotation]:
    tasks = []
    for lineno, (s, e, label) in _csv_rows(_read_text(source), ("start", "end", "label")):
        start, end = _int(s, "start", lineno), _int(e, "end", lineno)
        if start < 0:
            raise ParseError(f"negative start {start}", lineno)
        if end < start:
            raise ParseError(f"end {end} precedes start {start}", lineno)
        tasks.append(TaskAnnotation(start, end, label))
    tasks.sort(key=lambda t: (t.start_frame, t.end_frame))
    return tasks


def align(
    gaze: Iterable[GazeSample],
    detections: dict[int, list[Detection]],
    n_frames: int,
    width: int,
    height: int,
) -> list[FrameContext]:
    """One context per frame; frames without a gaze record get ``Pattern.MISSING``."""
    if n_frames <= 0:
        raise ValueError(f"n_frames must be positive, got {n_frames}")
    if width <= 0 or height <= 0:
        raise ValueError(f"frame size must be positive, got {width}x{height}")
    by_frame: dict[int, GazeSample] = {}
    for g in gaze:
        if g.frame >= n_frames:
            raise ValueError(f"gaze references frame {g.frame} >= n_frames={n_frames}")
        by_frame[g.frame] = g
    for frame in detections:
        if frame < 0 or frame >= n_frames:
            raise ValueError(f"detections reference frame {frame} outside [0, {n_frames})")
    contexts = []
    for i in range(n_frames):
        g = by_frame.get(i) or GazeSample(i, None, None, Pattern.MISSING)
        dets = tuple(detections.get(i, ()))
        for d in dets:
            if d.frame != i:
                raise ValueError(f"detection for frame {d.frame} filed under frame {i}")
        contexts.append(FrameContext(i, width, height, g, dets))
    return contexts


# -- writers (inverse of the parsers) --------------------------------------


def _num(v: float) -> str:
    return repr(float(v)) if v != int(v) else str(int(v))


def format_gaze(samples: Iterable[GazeSample]) -> str:
    lines = ["frame,x,y,pattern"]
    for g in samples:
        if g.has_position:
            lines.append(f"{g.frame},{_num(g.x)},{_num(g.y)},{g.pattern.value}")
        else:
            lines.append(f"{g.frame},,,{g.pattern.value}")
    return "\n".join(lines) + "\n"


def format_detections(detections: dict[int, list[Detection]]) -> str:
    lines = []
    for frame in sorted(detections):
        boxes = [
            {
                "x": d.bbox.x,
                "y": d.bbox.y,
                "w": d.bbox.w,
                "h": d.bbox.h,
                "class": d.class_id,
                "conf": d.confidence,
            }
            for d in detections[frame]
        ]
        lines.append(json.dumps({"frame": frame, "boxes": boxes}, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def format_tasks(tasks: Iterable[TaskAnnotation]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["start", "end", "label"])
    for t in tasks:
        writer.writerow([t.start_frame, t.end_frame, t.label])
    return buf.getvalue()
