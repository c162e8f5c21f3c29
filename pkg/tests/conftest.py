from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, tuple[str, str, list[str]]] = {}
DETAIL = "  | "


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        details = [l for l in rep.capstdout.splitlines() if l.startswith(DETAIL)]
        _CRITERIA[number] = ("PASS" if rep.passed else "FAIL", title, details)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, details = _CRITERIA[number]
        terminalreporter.write_line(f"{status}  criterion {number}: {title}")
        for line in details:
            terminalreporter.write_line(line)
