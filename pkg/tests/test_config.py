import pytest

from gazeff.config import ConfigError, PipelineConfig, format_config, from_mapping, load_config, parse_config_text


def test_defaults():
    cfg = PipelineConfig()
    assert cfg.fps == 30.0 and cfg.target_speedup == 8.0 and cfg.p_max is None
    assert cfg.resolved_p_max == 32
    assert cfg.gap_tolerance_frames == 15 and cfg.smooth_frames == 0


def test_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nalpha_s = 3\ntarget_speedup=6  # inline\np_max = auto\n")
    cfg = load_config(path, {"target_speedup": 10, "fps": None})
    assert cfg.alpha_s == 3.0 and cfg.target_speedup == 10.0 and cfg.p_max is None


def test_round_trip_text():
    cfg = PipelineConfig(p_max=40, frames=100)
    assert from_mapping(parse_config_text(format_config(cfg))) == cfg


@pytest.mark.parametrize(
    "values",
    [
        {"bogus": 1},
        {"fps": 0},
        {"target_speedup": 1.0},
        {"target_speedup": 8, "p_max": 7},
        {"frames": 2.5},
        {"iou_min": 0},
        {"threshold_percentile": 100},
        {"alpha_s": "abc"},
    ],
)
def test_rejected(values):
    with pytest.raises(ConfigError):
        from_mapping(values)


def test_low_target_accepted_with_p_max_two():
    assert from_mapping({"target_speedup": 1.5, "p_max": 2}).p_max == 2
    with pytest.raises(ConfigError):
        from_mapping({"target_speedup": 1.5, "p_max": 1})


def test_bad_lines():
    with pytest.raises(ConfigError):
        parse_config_text("fps 30\n")
    with pytest.raises(ConfigError):
        parse_config_text("fps=30\nfps=25\n")
