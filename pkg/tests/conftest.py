import time

import pytest

from sagitta.harness import config
from sagitta.harness.experiments import run

_LINES = []


@pytest.fixture(scope="session")
def criterion_log():
    """Collects one summary line per acceptance criterion."""

    def log(number, ok, text):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {text}"
        _LINES.append((number, line))
        print(line)

    return log


@pytest.fixture(scope="session")
def full_run():
    """Run an experiment at its default (acceptance) size once per session.

    Returns ``(report, seconds)``.
    """
    cache = {}

    def get(name):
        if name not in cache:
            t0 = time.perf_counter()
            rep = run(config.resolve(name))
            cache[name] = (rep, time.perf_counter() - t0)
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_LINES):
        terminalreporter.write_line(line)
