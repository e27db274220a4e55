import sys
from datetime import date
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fxresponse.ingest import MarketWeek  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def week() -> MarketWeek:
    return MarketWeek.for_sunday(date(2019, 1, 6))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    """Record one acceptance line; the test body runs inside the context."""

    class _Recorder:
        def __call__(self, label: str):
            return _Line(label)

    return _Recorder()


class _Line:
    def __init__(self, label: str):
        self.label = label
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            status = "PASS"
        elif issubclass(exc_type, pytest.skip.Exception):
            status = "SKIP"
        else:
            status = "FAIL"
        line = f"[{status}] {self.label}"
        if self.detail:
            line += f" ({self.detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return False


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
