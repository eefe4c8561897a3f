from __future__ import annotations

import os

import pytest

from msgames.search import SearchLimits

ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running check (minutes)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def generous() -> SearchLimits:
    return SearchLimits(None, float(os.environ.get("MSGAMES_TEST_SECONDS", "600")))
