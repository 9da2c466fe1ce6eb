import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def write_csv(tmp_path):
    def _write(name: str, text: str):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    return _write


# -- acceptance summary: one pass/fail line per criterion ---------------------

_criteria: dict[int, list[bool]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = next((m for m in getattr(report, "_criterion_markers", [])), None)
    if marker is not None:
        _criteria.setdefault(marker, []).append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("acceptance")
    if m is not None:
        outcome.get_result()._criterion_markers = [m.kwargs["criterion"]]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(_criteria):
        status = "PASS" if all(_criteria[c]) else "FAIL"
        terminalreporter.write_line(f"criterion {c}: {status} ({sum(_criteria[c])}/{len(_criteria[c])} checks)")
