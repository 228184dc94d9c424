import sys
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

# the oracle helpers live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

_LINES: list[str] = []


class Criterion:
    def __init__(self, number: int, title: str, limit: float) -> None:
        self.number, self.title, self.limit = number, title, limit
        self.failures: list[str] = []
        self.detail = ""

    def check(self, ok: bool, what: str) -> None:
        if not ok:
            self.failures.append(what)


@pytest.fixture
def criterion():
    @contextmanager
    def run(number: int, title: str, limit: float):
        c = Criterion(number, title, limit)
        start = time.perf_counter()
        error = None
        try:
            yield c
        except Exception as exc:  # reported on the line, then re-raised
            error = exc
        elapsed = time.perf_counter() - start
        if elapsed >= limit:
            c.failures.append(f"took {elapsed:.2f}s, limit {limit:g}s")
        if error is not None:
            c.failures.append(f"{type(error).__name__}: {error}")
        status = "PASS" if not c.failures else "FAIL"
        line = f"criterion {number} [{status}] {title}: {c.detail} ({elapsed:.2f}s" + (f" / {limit:g}s)" if limit != float("inf") else ")")
        if c.failures:
            line += f"; first failure: {c.failures[0]} ({len(c.failures)} total)"
        _LINES.append(line)
        print(line)
        if error is not None:
            raise error
        assert not c.failures, line

    return run


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
