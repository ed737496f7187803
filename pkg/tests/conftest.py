"""Shared pytest wiring.

Acceptance tests register one pass/fail line per criterion here;
the terminal-summary hook reprints them after the run so they stay
visible even though pytest captures stdout of passing tests.
"""

CRITERION_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(CRITERION_LINES):
        terminalreporter.write_line(line)
