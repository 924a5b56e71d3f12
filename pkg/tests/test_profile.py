import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazeff.profile import Label, compose, segment, relevance_threshold


def test_compose_product():
    p = compose([1, 0, 1], [0.5, 1, 1], [2.0, 3.0, 1.0], [1, 1, 0.5])
    assert list(p.S) == [1.0, 0.0, 0.5]
    assert list(p.S_hat) == [1.0, 0.0, 0.5]


def test_compose_all_zero():
    p = compose([0, 0], [1, 1], [1, 1], [1, 1])
    assert list(p.S_hat) == [0.0, 0.0]


def test_compose_length_mismatch():
    with pytest.raises(ValueError):
        compose([1, 1], [1], [1, 1], [1, 1])


def test_compose_smoothing_keeps_raw_product():
    v = np.zeros(30)
    v[15] = 1
    p = compose(v, np.ones(30), np.ones(30), np.ones(30), smooth_frames=5)
    assert p.S[15] == 1 and p.S.sum() == 1
    assert np.count_nonzero(p.S_hat) == 5 and p.S_hat.max() == 1


def test_constant_zero_single_segment():
    segs = segment(np.zeros(500), 75, 1.0, 30)
    assert [(s.start_frame, s.end_frame, s.label) for s in segs] == [(0, 499, Label.NON_RELEVANT)]


def test_step_profile():
    s = np.zeros(1000)
    s[100:201] = 1.0
    segs = segment(s, 75, 1.0, 30)
    assert [(x.start_frame, x.end_frame, x.label) for x in segs] == [
        (0, 99, Label.NON_RELEVANT),
        (100, 200, Label.RELEVANT),
        (201, 999, Label.NON_RELEVANT),
    ]
    assert segs[1].mean_score == 1.0 and segs[0].mean_score == 0.0


def test_bad_arguments():
    with pytest.raises(ValueError):
        segment([], 75, 1, 30)
    with pytest.raises(ValueError):
        segment([0.1], 100, 1, 30)
    with pytest.raises(ValueError):
        segment([0.1], 50, 0, 30)


def brute_force_segments(S_hat, pct, min_seg_s, fps):
    """Relabel the shortest short run with its closer neighbour's label until none remain."""
    S_hat = list(S_hat)
    nz = sorted(v for v in S_hat if v > 0)
    thr = float(np.percentile(nz, pct)) if nz else math.inf
    labels = [v > 0 and v >= thr for v in S_hat]
    min_len = math.ceil(min_seg_s * fps)

    def runs():
        out, start = [], 0
        for i in range(1, len(labels) + 1):
            if i == len(labels) or labels[i] != labels[start]:
                out.append((start, i - 1))
                start = i
        return out

    def mean(r):
        return sum(S_hat[r[0] : r[1] + 1]) / (r[1] - r[0] + 1)

    while True:
        rs = runs()
        if len(rs) == 1:
            break
        short = [(r[1] - r[0], k) for k, r in enumerate(rs) if r[1] - r[0] + 1 < min_len]
        if not short:
            break
        _, k = min(short)
        if k == 0:
            tgt = 1
        elif k == len(rs) - 1:
            tgt = k - 1
        else:
            m = mean(rs[k])
            tgt = k - 1 if abs(m - mean(rs[k - 1])) <= abs(m - mean(rs[k + 1])) else k + 1
        for i in range(rs[k][0], rs[k][1] + 1):
            labels[i] = labels[rs[tgt][0]]
    return [(a, b, labels[a]) for a, b in runs()]


def as_tuples(segs):
    return [(s.start_frame, s.end_frame, s.relevant) for s in segs]


def test_sawtooth_spikes_merge_away():
    # 3-frame spikes every 40 frames at 30 fps: every relevant run is sub-second
    s = np.zeros(1200)
    for k in range(0, 1200, 40):
        s[k + 10 : k + 13] = [0.4, 1.0, 0.4]
    segs = segment(s, 75, 1.0, 30)
    assert as_tuples(segs) == [(0, 1199, False)]
    assert brute_force_segments(s, 75, 1.0, 30) == as_tuples(segs)


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.sampled_from([0.0, 0.0, 0.1, 0.3, 0.6, 1.0]), min_size=1, max_size=300),
    st.sampled_from([50.0, 75.0, 90.0]),
    st.sampled_from([0.2, 0.5, 1.0]),
)
def test_segment_matches_brute_force(values, pct, min_seg_s):
    s = np.asarray(values)
    assert as_tuples(segment(s, pct, min_seg_s, 30)) == brute_force_segments(s, pct, min_seg_s, 30)


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.integers(0, 1000).map(lambda k: k / 1000), min_size=1, max_size=400),
    st.floats(1, 90),
    st.floats(0.05, 2.0),
    st.floats(0.01, 1000),
)
def test_segment_invariants(values, pct, min_seg_s, scale):
    s = np.asarray(values)
    segs = segment(s, pct, min_seg_s, 30)
    assert segs[0].start_frame == 0 and segs[-1].end_frame == len(s) - 1
    assert all(b.start_frame == a.end_frame + 1 for a, b in zip(segs, segs[1:]))
    assert all(a.label != b.label for a, b in zip(segs, segs[1:]))
    min_len = math.ceil(min_seg_s * 30)
    if len(segs) > 1:
        assert all(x.length >= min_len for x in segs)
    # labels do not depend on the scale of the scores
    scaled = segment(s * scale, pct, min_seg_s, 30)
    assert [(x.start_frame, x.end_frame, x.label) for x in scaled] == [
        (x.start_frame, x.end_frame, x.label) for x in segs
    ]


def test_threshold_ignores_zeros():
    s = np.array([0, 0, 0, 0, 0.2, 0.4, 0.6, 0.8])
    assert math.isclose(relevance_threshold(s, 50), 0.5)
    assert relevance_threshold(np.zeros(4), 50) == math.inf
