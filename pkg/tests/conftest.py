import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, [title, True, []])
    entry[1] = entry[1] and rep.passed
    detail = getattr(item, "criterion_detail", "")
    if detail:
        entry[2].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, details = _CRITERIA[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}"
        if details:
            line += "  (" + "; ".join(details) + ")"
        terminalreporter.write_line(line)
