"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""
import re

_OUTCOMES = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = int(m.group(1))
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _OUTCOMES[key] = (m.group(2).replace("_", " "), "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_OUTCOMES):
        name, verdict, detail = _OUTCOMES[key]
        line = f"criterion {key} ({name}): {verdict}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
