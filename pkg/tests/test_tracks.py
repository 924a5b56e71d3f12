import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import det
from gazeff.attention import FocusResolution
from gazeff.tracks import (
    TrackAssignment,
    build_tracks,
    novelty,
    novelty_decay,
    t_max,
    temporal_relevance,
    FocusTrack,
)

A = det(10, 10, 50, 50, class_id=1)
B = det(300, 200, 50, 50, class_id=1)


def resolutions(seq):
    """seq of Detection-or-None, one per frame."""
    return [FocusResolution(i, d, int(d is not None)) for i, d in enumerate(seq)]


def test_static_focus_single_track():
    tracks, assign = build_tracks(resolutions([A] * 30), 0.3, 0)
    assert len(tracks) == 1
    assert tracks[0].duration == 30 and tracks[0].gap_frames == 0
    assert len(assign) == 30


def test_gap_longer_than_tolerance_splits():
    tol = 3
    seq = [A] * 5 + [None] * (tol + 1) + [A] * 5
    tracks, _ = build_tracks(resolutions(seq), 0.3, tol)
    assert [(t.start_frame, t.end_frame) for t in tracks] == [(0, 4), (9, 13)]


def test_gap_within_tolerance_bridges():
    seq = [A] * 5 + [None] * 3 + [A] * 5
    tracks, assign = build_tracks(resolutions(seq), 0.3, 3)
    assert len(tracks) == 1
    assert tracks[0].duration == 13 and tracks[0].gap_frames == 3
    assert assign.get(6) is None


def test_alternating_focus_hand_simulation():
    # tol=0: A@0 opens T0; B@1 opens T1 and T0 has missed 1 frame > 0 -> closed; and so on
    tracks, assign = build_tracks(resolutions([A, B, A, B]), 0.3, 0)
    assert [(t.start_frame, t.end_frame) for t in tracks] == [(0, 0), (1, 1), (2, 2), (3, 3)]
    # tol=1: T0 = {0, 2}, T1 = {1, 3}, each bridging one foreign frame
    tracks, assign = build_tracks(resolutions([A, B, A, B]), 0.3, 1)
    assert [(t.start_frame, t.end_frame, t.gap_frames) for t in tracks] == [(0, 2, 1), (1, 3, 1)]
    assert [assign.get(i) for i in range(4)] == [0, 1, 0, 1]


def test_class_change_starts_new_track():
    other = det(10, 10, 50, 50, class_id=2)
    tracks, _ = build_tracks(resolutions([A, A, other, other]), 0.3, 5)
    assert len(tracks) == 2


def test_low_iou_starts_new_track():
    moved = det(40, 10, 50, 50, class_id=1)  # IoU with A = 20*50 / (2*2500 - 1000) = 0.25
    assert len(build_tracks(resolutions([A, moved]), 0.3, 5)[0]) == 2
    assert len(build_tracks(resolutions([A, moved]), 0.25, 5)[0]) == 1


def test_bad_params():
    with pytest.raises(ValueError):
        build_tracks([], 0.0, 0)
    with pytest.raises(ValueError):
        build_tracks([], 0.3, -1)


@pytest.mark.parametrize("durations, expected", [([10, 30, 5], 30), ([], 0), ([1], 1)])
def test_t_max(durations, expected):
    tracks = [FocusTrack(k, 0, 0, d - 1) for k, d in enumerate(durations)]
    assert t_max(tracks) == expected


def test_temporal_relevance():
    tracks = [FocusTrack(0, 0, 0, 29), FocusTrack(1, 0, 100, 159)]
    assign = TrackAssignment({5: 0, 120: 1})
    assert temporal_relevance(5, assign, tracks, 60) == 0.5
    assert temporal_relevance(120, assign, tracks, 60) == 1.0
    assert temporal_relevance(50, assign, tracks, 60) == 0.0
    assert temporal_relevance(5, assign, tracks, 0) == 0.0


def test_novelty_examples():
    alpha = 5.0
    assert novelty_decay(0.5 * alpha, alpha) == 1.0
    assert novelty_decay(alpha, alpha) == 1.0
    assert math.isclose(novelty_decay(alpha + 2.0, alpha), 0.36787944117144233, rel_tol=0, abs_tol=1e-12)


def test_novelty_uses_seconds():
    fps = 30.0
    tracks = [FocusTrack(0, 0, 100, 400)]
    assign = TrackAssignment({100 + k: 0 for k in range(301)})
    assert novelty(100 + 149, assign, tracks, 5.0, fps) == 1.0
    assert novelty(100 + 150, assign, tracks, 5.0, fps) == 1.0
    assert math.isclose(novelty(100 + 210, assign, tracks, 5.0, fps), math.exp(-1), abs_tol=1e-12)
    # same elapsed seconds at another frame rate gives the same factor
    tracks60 = [FocusTrack(0, 0, 0, 600)]
    assign60 = TrackAssignment({k: 0 for k in range(601)})
    assert novelty(420, assign60, tracks60, 5.0, 60.0) == novelty(100 + 210, assign, tracks, 5.0, fps)


def test_novelty_neutral_when_unfocused():
    assert novelty(3, TrackAssignment(), [], 5.0, 30.0) == 1.0
    with pytest.raises(ValueError):
        novelty(3, TrackAssignment(), [], 0.0, 30.0)


focus_seq = st.lists(st.sampled_from([None, "A", "B", "C"]), max_size=80)
OBJ = {"A": A, "B": B, "C": det(12, 12, 50, 50, class_id=1)}


@given(focus_seq, st.integers(0, 4), st.sampled_from([0.1, 0.3, 0.9]))
def test_track_properties(seq, tol, iou_min):
    res = resolutions([OBJ[s] if s else None for s in seq])
    tracks, assign = build_tracks(res, iou_min, tol)
    # assigned iff focused, one track per frame, frames inside their track span
    assert set(assign.track_ids) == {i for i, s in enumerate(seq) if s}
    for frame, tid in assign.track_ids.items():
        t = tracks[tid]
        assert t.start_frame <= frame <= t.end_frame
        assert frame in t.boxes
    assert sum(len(t.boxes) for t in tracks) == len(assign)
    longest = t_max(tracks)
    for i in range(len(seq)):
        tv = temporal_relevance(i, assign, tracks, longest)
        assert 0.0 <= tv <= 1.0
        if tv == 1.0:
            assert tracks[assign.get(i)].duration == longest
    # determinism
    again, assign2 = build_tracks(res, iou_min, tol)
    assert [(t.track_id, t.start_frame, t.end_frame) for t in again] == [
        (t.track_id, t.start_frame, t.end_frame) for t in tracks
    ]
    assert assign2 == assign


@given(st.integers(1, 2000), st.floats(0.1, 20), st.sampled_from([24.0, 30.0, 60.0]))
def test_novelty_non_increasing_along_track(length, alpha, fps):
    tracks = [FocusTrack(0, 0, 0, length - 1)]
    assign = TrackAssignment({k: 0 for k in range(length)})
    values = [novelty(k, assign, tracks, alpha, fps) for k in range(length)]
    assert all(0.0 < v <= 1.0 for v in values)
    assert all(b <= a for a, b in zip(values, values[1:]))
