"""Shared test plumbing: the acceptance-criterion reporter.

Acceptance tests register one line per criterion; the lines are printed in
the terminal summary so the per-criterion verdicts are visible regardless
of output capturing.
"""

_CRITERION_LINES: list[str] = []


def record_criterion(number: int, description: str, passed: bool, detail: str = "") -> None:
    verdict = "PASS" if passed else "FAIL"
    line = f"criterion {number:02d} {verdict}  {description}" + (f"  [{detail}]" if detail else "")
    _CRITERION_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERION_LINES):
            terminalreporter.write_line(line)
