"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_OUTCOMES: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _OUTCOMES.setdefault(number, {"title": title, "passed": True, "ran": False, "detail": []})
    if report.when == "call" or report.failed:
        entry["ran"] = True
        entry["passed"] = entry["passed"] and report.passed
    if report.when == "call":
        entry["detail"] += [v for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        e = _OUTCOMES[number]
        status = "PASS" if e["ran"] and e["passed"] else ("SKIP" if not e["ran"] else "FAIL")
        detail = "; ".join(e["detail"])
        tr.write_line(f"criterion {number:2d} {status}  {e['title']}" + (f"  [{detail}]" if detail else ""))
