"""Shared test plumbing: collects acceptance-criterion result lines so they
are printed in the terminal summary even under output capture."""

ACCEPTANCE_LINES = []


def record_acceptance_line(line):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
