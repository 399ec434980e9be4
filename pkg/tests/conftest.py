"""Shared fixtures plus the acceptance-criteria summary printer."""

from __future__ import annotations

import contextlib
import socket
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(autouse=True, scope="session")
def no_network():
    """The whole suite must pass with networking disabled (replay cassettes
    and stub transports only), so outbound connects fail loudly."""
    real_connect = socket.socket.connect

    def guarded(self, address, *args, **kwargs):
        if self.family in (socket.AF_INET, socket.AF_INET6):
            raise RuntimeError(f"network disabled under test, refused connect to {address!r}")
        return real_connect(self, address, *args, **kwargs)

    socket.socket.connect = guarded
    try:
        yield
    finally:
        socket.socket.connect = real_connect

_ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@contextlib.contextmanager
def acceptance(name: str, detail: str = ""):
    """Record one acceptance criterion's outcome and print a pass/fail line."""
    try:
        yield
    except BaseException:
        _ACCEPTANCE_RESULTS.append((name, False, detail))
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    _ACCEPTANCE_RESULTS.append((name, True, detail))
    print(f"[ACCEPTANCE] {name}: PASS" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE_RESULTS:
        line = f"{name}: {'PASS' if passed else 'FAIL'}"
        if detail and passed:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def tmp_jsonl(tmp_path):
    def factory(name: str) -> str:
        return str(tmp_path / name)

    return factory
