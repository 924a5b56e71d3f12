"""End-to-end wiring: frame contexts -> semantic profile -> selected frames."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .attention import FocusResolution, resolve_focus, visual_interaction
from .config import PipelineConfig
from .ingest import FrameContext
from .profile import SemanticProfile, Segment, compose, segment
from .selection import SelectionResult, select_frames
from .spatial import spatial_features, spatial_score
from .tracks import FocusTrack, TrackAssignment, build_tracks, novelty, t_max, temporal_relevance


@dataclass
class ScoredVideo:
    profile: SemanticProfile
    resolutions: list[FocusResolution]
    tracks: list[FocusTrack]
    assignment: TrackAssignment


def score_contexts(contexts: Sequence[FrameContext], cfg: PipelineConfig) -> ScoredVideo:
    resolutions = [resolve_focus(ctx) for ctx in contexts]
    tracks, assignment = build_tracks(resolutions, cfg.iou_min, cfg.gap_tolerance_frames)
    longest = t_max(tracks)
    n = len(contexts)
    v, t, s, nov = (np.zeros(n) for _ in range(4))
    for k, (ctx, res) in enumerate(zip(contexts, resolutions)):
        v[k] = visual_interaction(ctx, res)
        t[k] = temporal_relevance(ctx.frame, assignment, tracks, longest)
        s[k] = spatial_score(spatial_features(ctx, res))
        nov[k] = novelty(ctx.frame, assignment, tracks, cfg.alpha_s, cfg.fps)
    profile = compose(v, t, s, nov, smooth_frames=cfg.smooth_frames)
    return ScoredVideo(profile, resolutions, tracks, assignment)


def select_from_scores(S_hat, cfg: PipelineConfig) -> tuple[list[Segment], SelectionResult]:
    S_hat = np.asarray(S_hat, dtype=float)
    segments = segment(S_hat, cfg.threshold_percentile, cfg.min_seg_s, cfg.fps)
    result = select_frames(
        S_hat,
        segments,
        cfg.target_speedup,
        cfg.resolved_p_max,
        cfg.lambda_emphasis,
        cfg.gamma_semantic,
    )
    return segments, result


def run(contexts: Sequence[FrameContext], cfg: PipelineConfig):
    scored = score_contexts(contexts, cfg)
    segments, result = select_from_scores(scored.profile.S_hat, cfg)
    return scored, segments, result
