import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

# Acceptance criteria: tests marked ``criterion(n, title)`` are grouped, and one
# pass/fail line per criterion is printed at the end of the session.
_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "notes": []})
    entry["ok"] = entry["ok"] and rep.passed
    entry["notes"].extend(str(v) for k, v in item.user_properties if k == "measured" and rep.when == "call")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        c = _CRITERIA[number]
        line = f"criterion {number}: {'PASS' if c['ok'] else 'FAIL'}  {c['title']}"
        if c["notes"]:
            line += "  [" + "; ".join(c["notes"]) + "]"
        terminalreporter.write_line(line)
