import re

_CRITERIA = {}
_PAT = re.compile(r"test_acceptance\.py::.*test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    m = _PAT.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call":
        _CRITERIA[n] = report.outcome == "passed"
    elif report.when == "setup" and report.outcome != "passed":
        _CRITERIA[n] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_line("")
    for n in sorted(_CRITERIA):
        verdict = "PASS" if _CRITERIA[n] else "FAIL"
        terminalreporter.write_line(f"CRITERION {n}: {verdict}")
