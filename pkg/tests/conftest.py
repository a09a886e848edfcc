import math

import pytest

from periodic_peg.experiments import random_pair
from periodic_peg.quad import TrapezoidType


@pytest.fixture(scope="session")
def pair42():
    return random_pair(42, modes=3, amplitude=0.1, separation=1.0)


@pytest.fixture(scope="session")
def square():
    return TrapezoidType(0.5, math.pi / 2)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(key: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
