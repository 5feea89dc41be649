"""Shared pytest hooks: one PASS/FAIL summary line per acceptance criterion."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    failed = [f"{name}: {detail}" for name, ok, detail in dict(item.user_properties).get("checks", [])
              if not ok]
    _RESULTS[number] = (title, rep.outcome, failed, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, outcome, failed, duration = _RESULTS[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"[{status}] {number}. {title} ({duration:.0f} s)")
        for line in failed:
            tr.write_line(f"         - {line}")
