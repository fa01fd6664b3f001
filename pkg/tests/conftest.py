from __future__ import annotations

import pytest

# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def criterion():
    def report(number: int, ok: bool, detail: str, elapsed: float) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  ({elapsed:.1f}s)  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
