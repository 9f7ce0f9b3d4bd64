import numpy as np
import pytest

from vidfeat.pyramid import GrayFrame

_ACCEPTANCE: dict[str, tuple[int, str]] = {}
_OUTCOMES: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            _ACCEPTANCE[item.nodeid] = (marker.kwargs["num"], marker.kwargs["title"])


def pytest_runtest_logreport(report):
    if report.nodeid not in _ACCEPTANCE:
        return
    if report.when == "call":
        _OUTCOMES[report.nodeid] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _OUTCOMES[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    rows = sorted(
        ((_ACCEPTANCE[nid][0], _ACCEPTANCE[nid][1], outcome) for nid, outcome in _OUTCOMES.items())
    )
    for num, title, outcome in rows:
        terminalreporter.write_line(f"criterion {num:2d} [{outcome.upper():6s}] {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_frame(rng, w=64, h=64, index=0):
    return GrayFrame(rng.integers(0, 256, (h, w), dtype=np.uint8), index=index)
