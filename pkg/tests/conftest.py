import pytest
from hypothesis import settings

from gazeff.ingest import BBox, Detection, FrameContext, GazeSample, Pattern

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


def det(x, y, w, h, class_id=0, conf=0.9, frame=0):
    return Detection(frame, BBox(x, y, w, h), class_id, conf)


def ctx(gx=None, gy=None, pattern=Pattern.FIXATION, boxes=(), frame=0, width=640, height=360):
    if gx is None:
        pattern = Pattern.BLINK if pattern.has_position else pattern
    gaze = GazeSample(frame, gx, gy, pattern)
    return FrameContext(frame, width, height, gaze, tuple(boxes))


@pytest.fixture
def make_ctx():
    return ctx


@pytest.fixture
def make_det():
    return det


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")
    config._criteria = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None and (report.when == "call" or report.failed):
        n, title = mark.args
        results = item.config._criteria
        ok = results.get(n, (title, True))[1] and report.passed
        results[n] = (title, ok)
    return report


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        title, ok = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
