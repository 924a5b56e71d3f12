"""Command-line front end: ``score``, ``select``, ``eval`` and ``synth``.

Exit codes: 0 success, 1 usage/config error, 2 input parse error,
3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, PipelineConfig, load_config
from .evaluation import evaluate
from .ingest import ParseError, align, parse_detections, parse_gaze, parse_tasks
from .pipeline import score_contexts, select_from_scores
from .profile import Label, Segment
from .selection import InvariantError, RatePlan, SelectionResult
from .synth import ScenarioError, scenario_from_dict, synth_scenario

logger = logging.getLogger("gazeff")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INVARIANT = 0, 1, 2, 3

PROFILE_COLUMNS = ("frame", "v", "t", "s", "n", "S", "S_hat")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- file helpers -------------------------------------------------------------


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except FileNotFoundError:
        raise UsageError(f"missing input file: {path}") from None


def _emit(text: str, path: Optional[str]) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _num(x: float) -> str:
    return repr(float(x))


def format_profile(profile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_COLUMNS)
    for i in range(len(profile)):
        w.writerow(
            [i]
            + [_num(c[i]) for c in (profile.v, profile.t, profile.s, profile.n, profile.S, profile.S_hat)]
        )
    return buf.getvalue()


def parse_profile(text: str) -> np.ndarray:
    """Return the ``S_hat`` column of a profile CSV."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "S_hat" not in reader.fieldnames or "frame" not in reader.fieldnames:
        raise ParseError("profile CSV needs 'frame' and 'S_hat' columns", 1)
    values = []
    for row in reader:
        lineno = reader.line_num
        try:
            frame, score = int(row["frame"]), float(row["S_hat"])
        except (TypeError, ValueError):
            raise ParseError("bad profile row", lineno) from None
        if frame != len(values):
            raise ParseError(f"expected frame {len(values)}, got {frame}", lineno)
        if not 0.0 <= score <= 1.0:
            raise ParseError(f"S_hat {score} outside [0, 1]", lineno)
        values.append(score)
    if not values:
        raise ParseError("empty profile")
    return np.asarray(values)


def report_dict(segments: Sequence[Segment], result: SelectionResult, cfg: PipelineConfig) -> dict:
    plan = result.plan
    return {
        "n_frames": result.n_frames,
        "fps": cfg.fps,
        "target_speedup": cfg.target_speedup,
        "achieved_speedup": result.achieved_speedup,
        "n_selected": len(result.selected),
        "plan": {
            "p_max": plan.p_max,
            "emphasis_cap": plan.emphasis_cap,
            "objective": plan.objective,
            "infeasible": plan.infeasible,
        },
        "segments": [
            {
                "start": s.start_frame,
                "end": s.end_frame,
                "label": s.label.value,
                "mean_score": s.mean_score,
                "rate": p,
            }
            for s, p in zip(plan.segments, plan.rates)
        ],
        "config": cfg.to_dict(),
        "selected": result.selected,
    }


def result_from_report(report: dict) -> SelectionResult:
    try:
        segments = [
            Segment(int(s["start"]), int(s["end"]), Label(s["label"]), float(s["mean_score"]))
            for s in report["segments"]
        ]
        rates = [int(s["rate"]) for s in report["segments"]]
        plan = RatePlan(
            segments,
            rates,
            float(report["target_speedup"]),
            int(report["plan"]["p_max"]),
            int(report["plan"]["emphasis_cap"]),
            float(report["plan"]["objective"]),
            bool(report["plan"]["infeasible"]),
        )
        return SelectionResult([int(i) for i in report["selected"]], plan, int(report["n_frames"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed selection report: {exc!r}") from None


# -- input resolution -----------------------------------------------------------


def _config(args, dataset: Optional[Path] = None) -> PipelineConfig:
    overrides = {}
    if dataset is not None:
        try:
            meta = json.loads(_read(dataset / "meta.json"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"meta.json is not JSON: {exc}") from None
        overrides.update({k: meta[k] for k in ("frames", "width", "height", "fps") if k in meta})
    for item in getattr(args, "set", None) or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    for key in ("frames", "width", "height", "fps", "smooth_s", "target_speedup", "p_max"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return load_config(args.config, overrides)


def _raw_paths(args, dataset: Optional[Path]):
    if dataset is not None:
        return dataset / "gaze.csv", dataset / "detections.jsonl"
    return args.gaze, args.detections


def _contexts(gaze_path, det_path, cfg: PipelineConfig):
    if not (cfg.frames > 0 and cfg.width > 0 and cfg.height > 0):
        raise UsageError("--frames, --width and --height are required (or a --dataset with meta.json)")
    gaze = parse_gaze(_read(gaze_path))
    dets = parse_detections(_read(det_path), cfg.width, cfg.height)
    try:
        return align(gaze, dets, cfg.frames, cfg.width, cfg.height)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


# -- commands -------------------------------------------------------------------


def _score_one(args, dataset: Optional[Path]) -> None:
    cfg = _config(args, dataset)
    gaze_path, det_path = _raw_paths(args, dataset)
    if gaze_path is None or det_path is None:
        raise UsageError("score needs --gaze and --detections (or --dataset)")
    scored = score_contexts(_contexts(gaze_path, det_path, cfg), cfg)
    out = args.out_profile
    if out is None and dataset is not None:
        out = dataset / "profile.csv"
    _emit(format_profile(scored.profile), out)


def _select_one(args, dataset: Optional[Path]) -> None:
    cfg = _config(args, dataset)
    profile_path = args.from_profile
    if profile_path is None and dataset is not None and args.use_profile:
        profile_path = dataset / "profile.csv"
    gaze_path, det_path = _raw_paths(args, dataset)
    if profile_path is not None:
        S_hat = parse_profile(_read(profile_path))
        if cfg.frames and cfg.frames != len(S_hat):
            raise UsageError(f"profile has {len(S_hat)} frames, expected {cfg.frames}")
        cfg = cfg.replace(frames=len(S_hat))
    elif gaze_path is not None and det_path is not None:
        S_hat = score_contexts(_contexts(gaze_path, det_path, cfg), cfg).profile.S_hat
    else:
        raise UsageError("select needs --from-profile or --gaze/--detections (or --dataset)")
    segments, result = select_from_scores(S_hat, cfg)
    out_frames, out_report = args.out_frames, args.out_report
    if dataset is not None:
        out_frames = out_frames or dataset / "frames.txt"
        out_report = out_report or dataset / "report.json"
    report = report_dict(segments, result, cfg)
    if out_frames is not None:
        _emit("".join(f"{i}\n" for i in result.selected), out_frames)
    _emit(json.dumps(report, indent=2) + "\n", out_report)


def _eval_one(args, dataset: Optional[Path]) -> dict:
    report_path = args.report or (dataset / "report.json" if dataset else None)
    tasks_path = args.tasks or (dataset / "tasks.csv" if dataset else None)
    gaze_path = args.gaze or (dataset / "gaze.csv" if dataset else None)
    if report_path is None or tasks_path is None or gaze_path is None:
        raise UsageError("eval needs --report, --tasks and --gaze (or --dataset)")
    try:
        report = json.loads(_read(report_path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"report is not JSON: {exc}") from None
    result = result_from_report(report)
    tasks = parse_tasks(_read(tasks_path))
    gaze = parse_gaze(_read(gaze_path))
    ev = evaluate(result, tasks, gaze, result.plan.target_speedup)
    return ev.to_dict()


def _datasets(args) -> list[Optional[Path]]:
    return [Path(d) for d in args.dataset] if args.dataset else [None]


def _batch(fn, args) -> list:
    # eval's --out-eval receives the batch summary, so it is not per-video
    datasets = _datasets(args)
    if len(datasets) > 1 and any(
        getattr(args, k, None) for k in ("out_profile", "out_frames", "out_report")
    ):
        raise UsageError("--out-* flags need a single input; batch outputs go into each dataset dir")
    if args.jobs > 1 and len(datasets) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            return list(pool.map(lambda d: fn(args, d), datasets))
    return [fn(args, d) for d in datasets]


def cmd_score(args) -> int:
    _batch(_score_one, args)
    return EXIT_OK


def cmd_select(args) -> int:
    _batch(_select_one, args)
    return EXIT_OK


def cmd_eval(args) -> int:
    datasets = _datasets(args)
    reports = _batch(_eval_one, args)
    if len(datasets) == 1:
        payload = reports[0]
    else:
        ratios = [r["ea_ratio"] for r in reports if r["ea_ratio"] is not None]
        payload = {
            "videos": [{"dataset": str(d), **r} for d, r in zip(datasets, reports)],
            "mean_ea_ratio": sum(ratios) / len(ratios) if ratios else None,
            "mean_speedup_error": sum(r["speedup_error"] for r in reports) / len(reports),
        }
    _emit(json.dumps(payload, indent=2) + "\n", args.out_eval)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        raw = json.loads(_read(args.scenario))
    except json.JSONDecodeError as exc:
        raise ParseError(f"scenario is not JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    dataset = synth_scenario(scenario_from_dict(raw), seed=args.seed)
    dataset.write(args.out_dir)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gazeff", description="Gaze-driven semantic fast-forward.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, raw=True):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--dataset", action="append", help="directory with gaze.csv, detections.jsonl, meta.json (repeatable)")
        p.add_argument("--jobs", type=int, default=1, help="datasets processed concurrently")
        if raw:
            p.add_argument("--gaze")
            p.add_argument("--detections")
            p.add_argument("--frames", type=int)
            p.add_argument("--width", type=int)
            p.add_argument("--height", type=int)
            p.add_argument("--fps", type=float)
            p.add_argument("--smooth-s", "--smooth_s", type=float, help="box-filter width for S_hat in seconds")
            p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")

    p = sub.add_parser("score", help="per-frame semantic profile CSV")
    common(p)
    p.add_argument("--out-profile")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("select", help="adaptive frame selection")
    common(p)
    p.add_argument("--from-profile", help="profile CSV written by 'score'")
    p.add_argument("--use-profile", action="store_true", help="with --dataset, read its profile.csv")
    p.add_argument("--target-speedup", type=float)
    p.add_argument("--p-max", type=int)
    p.add_argument("--out-frames")
    p.add_argument("--out-report")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="emphasized actions and speed-up metrics")
    common(p, raw=False)
    p.add_argument("--report")
    p.add_argument("--tasks")
    p.add_argument("--gaze")
    p.add_argument("--out-eval")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"gazeff: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ScenarioError) as exc:
        print(f"gazeff: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvariantError as exc:
        print(f"gazeff: invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
