"""Shared pytest wiring: collects acceptance-criterion verdict lines and
re-prints them in the terminal summary so the pass/fail ledger survives
output capture."""

acceptance_lines: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
