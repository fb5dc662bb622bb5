"""Collects acceptance results and prints one PASS/FAIL line per criterion."""

from collections import defaultdict

import pytest

_results = defaultdict(list)
_titles = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number, title = marker.args
    _titles[number] = title
    detail = dict(item.user_properties).get("detail", "")
    if report.failed and not detail:
        detail = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else "error"
    _results[number].append((item.name, report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        checks = _results[number]
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        details = "; ".join(d for _, _, d in checks if d)
        terminalreporter.write_line(f"criterion {number:>2} {status}  {_titles[number]}: {details}")
