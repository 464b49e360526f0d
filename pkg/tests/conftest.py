"""Prints one pass/fail line per acceptance criterion after the test run."""

CRITERIA = {}


def pytest_runtest_makereport(item, call):
    if call.when != "call" or "test_acceptance" not in item.nodeid:
        return
    label = getattr(item.function, "_criterion", None)
    if label is None:
        return
    CRITERIA[label] = "PASS" if call.excinfo is None else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label in sorted(CRITERIA):
        terminalreporter.write_line(f"{label}: {CRITERIA[label]}")
