from __future__ import annotations


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import SUMMARY_LINES

    if not SUMMARY_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(SUMMARY_LINES):
        terminalreporter.write_line(SUMMARY_LINES[number])
