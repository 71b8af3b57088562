from __future__ import annotations

import pytest

_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return _LINES.append


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
