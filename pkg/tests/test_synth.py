import json

import pytest

from gazeff.ingest import Pattern, parse_detections, parse_gaze, parse_tasks
from gazeff.synth import (
    EpisodeSpec,
    NoiseSpec,
    ObjectSpec,
    Scenario,
    ScenarioError,
    random_scenario,
    scenario_from_dict,
    synth_scenario,
)


def one_episode(noise=None, ratio=1.0):
    return Scenario(
        n_frames=900,
        objects=[ObjectSpec(3, [(0, 100, 80, 120, 90), (899, 300, 120, 120, 90)], 0.8)],
        episodes=[EpisodeSpec(0, 300, 599, ratio, "look")],
        noise=noise or NoiseSpec(),
    )


def test_single_episode_plants_one_task():
    ds = synth_scenario(one_episode(), seed=1)
    assert len(ds.tasks) == 1 and len(ds.truth) == 1
    assert (ds.tasks[0].start_frame, ds.tasks[0].end_frame) == (300, 599)
    assert ds.truth[0]["fixation_ratio"] == 1.0


def test_seeded_generation_is_byte_identical():
    sc = random_scenario(5, n_frames=2000)
    a = synth_scenario(sc, seed=9).files()
    b = synth_scenario(random_scenario(5, n_frames=2000), seed=9).files()
    assert a == b
    assert synth_scenario(sc, seed=10).files()["gaze.csv"] != a["gaze.csv"]


def test_noise_free_gaze_stays_on_bound_object():
    ds = synth_scenario(one_episode(NoiseSpec(gaze_jitter=0.9)), seed=2)
    for g in ds.gaze[300:600]:
        assert g.pattern is Pattern.FIXATION
        (d,) = ds.detections[g.frame]
        assert d.bbox.contains(g.x, g.y)


def test_fixation_ratio_by_construction():
    noisy = NoiseSpec(blink_rate=0.3, saccade_rate=0.4)
    for ratio in (0.4, 0.5, 0.75):
        ds = synth_scenario(one_episode(noisy, ratio), seed=4)
        fix = sum(g.pattern is Pattern.FIXATION for g in ds.gaze[300:600])
        assert fix == -(-int(ratio * 300 * 1000) // 1000)
        assert ds.truth[0]["fixation_ratio"] >= ratio


def test_crossing_objects_two_boxes_per_frame():
    sc = Scenario(
        n_frames=300,
        objects=[
            ObjectSpec(1, [(0, 0, 100, 60, 60), (299, 580, 100, 60, 60)]),
            ObjectSpec(2, [(0, 580, 120, 60, 60), (299, 0, 120, 60, 60)]),
        ],
    )
    ds = synth_scenario(sc, seed=0)
    dets = parse_detections(ds.files()["detections.jsonl"], sc.width, sc.height)
    assert all(len(dets[f]) == 2 for f in range(300))
    assert any(d1.bbox.iou(d2.bbox) > 0.4 for d1, d2 in (dets[f] for f in range(140, 160)))


def test_files_reparse():
    ds = synth_scenario(random_scenario(3, n_frames=1500), seed=3)
    files = ds.files()
    assert parse_gaze(files["gaze.csv"]) == ds.gaze
    assert dict(parse_detections(files["detections.jsonl"], 640, 360)) == ds.detections
    assert parse_tasks(files["tasks.csv"]) == ds.tasks
    assert json.loads(files["meta.json"])["frames"] == 1500


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d["episodes"][0].update(end=5000),
        lambda d: d["episodes"][0].update(object=7),
        lambda d: d["episodes"].append({"object": 0, "start": 500, "end": 520}),
        lambda d: d.update(n_frames=0),
        lambda d: d["noise"].update(blink_rate=1.5),
        lambda d: d.pop("n_frames"),
        lambda d: d["objects"][0].update(keyframes=[[0, 1, 2]]),
    ],
)
def test_invalid_scenarios(mutate):
    d = {
        "n_frames": 900,
        "objects": [{"class": 3, "keyframes": [[0, 10, 10, 50, 50], [899, 20, 10, 50, 50]]}],
        "episodes": [{"object": 0, "start": 300, "end": 599}],
        "noise": {},
    }
    scenario_from_dict(d)
    mutate(d)
    with pytest.raises(ScenarioError):
        scenario_from_dict(d)


def test_scenario_dict_round_trip():
    sc = random_scenario(11, n_frames=3000)
    d = json.loads(json.dumps(sc.to_dict()))
    d["objects"] = [dict(o, **{"class": o.pop("class_id")}) for o in d["objects"]]
    again = scenario_from_dict(d)
    assert synth_scenario(again, 0).files() == synth_scenario(sc, 0).files()
