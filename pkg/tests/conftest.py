"""Shared test helpers and the acceptance-criteria summary hook."""

ACCEPTANCE_LINES: list[str] = []


def record_criterion(criterion: str, passed: bool, detail: str) -> None:
    """Collect one pass/fail line per acceptance criterion for the summary."""
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
