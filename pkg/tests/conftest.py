import re

_LINES = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    for _, text in report.sections:
        for line in text.splitlines():
            if re.match(r"C\d\d (PASS|FAIL)", line):
                _LINES[line[:3]] = line
    tag = re.search(r"test_c(\d\d)", report.nodeid)
    if report.failed and tag and f"C{tag.group(1)}" not in _LINES:
        _LINES[f"C{tag.group(1)}"] = f"C{tag.group(1)} FAIL  (error before verdict)"


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_LINES):
        terminalreporter.write_line(_LINES[key])
