from __future__ import annotations

import pytest

from frms.scheme import Window, build_scheme

# (criterion, ok, detail) lines collected by the acceptance suite
ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def fib():
    return build_scheme("fibonacci")


@pytest.fixture(scope="session")
def silver():
    return build_scheme("silver_mean")


@pytest.fixture(scope="session")
def unit():
    return Window.interval(0, 1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE, key=lambda t: int(t[0].split()[1])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
