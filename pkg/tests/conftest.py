from __future__ import annotations

import time

import pytest

_START = time.perf_counter()
_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance part; returns the verdict."""

    def record(number: int, label: str, passed: bool, detail: str = "") -> bool:
        line = f"criterion {number:>2} {label}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        _LINES.append(line)
        print(line)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LINES:
        terminalreporter.write_line(line)
    elapsed = time.perf_counter() - _START
    verdict = "PASS" if elapsed < 300 else "FAIL"
    terminalreporter.write_line(f"criterion 10 suite wall time: {verdict}  {elapsed:.1f} s (limit 300 s)")
