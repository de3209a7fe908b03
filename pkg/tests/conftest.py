"""Shared fixtures and the acceptance-criteria report."""
import time

import pytest

_LINES: list[str] = []


class _Criterion:
    def __init__(self, number: int, title: str, limit: float | None):
        self.number = number
        self.title = title
        self.limit = limit
        self.start = time.perf_counter()
        self.line = None

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def within_time(self) -> bool:
        return self.limit is None or self.elapsed < self.limit

    def verdict(self, ok: bool, detail: str) -> bool:
        """Record the PASS/FAIL line (runtime limit included) and return the verdict."""
        ok = bool(ok) and self.within_time()
        limit = "" if self.limit is None else f" (limit {self.limit:g} s)"
        self.line = (f"{'PASS' if ok else 'FAIL'} criterion {self.number} [{self.title}]: "
                     f"{detail}; {self.elapsed:.1f} s{limit}")
        print(self.line)
        return ok


@pytest.fixture
def criterion():
    """``criterion(n, title, limit)`` starts the clock for one acceptance criterion."""
    made = []

    def start(number, title, limit=None):
        c = _Criterion(number, title, limit)
        made.append(c)
        return c

    yield start
    for c in made:
        _LINES.append(c.line or f"FAIL criterion {c.number} [{c.title}]: did not complete; {c.elapsed:.1f} s")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
