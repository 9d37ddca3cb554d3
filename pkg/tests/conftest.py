from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
SCENARIOS = TESTS / "data" / "scenarios"
sys.path.insert(0, str(TESTS))

_ACCEPTANCE: list[tuple[str, bool, str]] = []


class AcceptanceLog:
    """Collects one pass/fail line per acceptance criterion."""

    def record(self, criterion: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {criterion}" + (f"  ({detail})" if detail else "")
        print(line)
        _ACCEPTANCE.append((criterion, ok, detail))


@pytest.fixture
def acceptance() -> AcceptanceLog:
    return AcceptanceLog()


@pytest.fixture
def scenarios() -> Path:
    return SCENARIOS


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'}  {criterion}" + (f"  ({detail})" if detail else ""))
