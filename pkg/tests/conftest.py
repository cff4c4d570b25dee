import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome; the line is repeated in the terminal summary."""

    def judge(number, title, ok, runtime, limit, detail=""):
        passed = bool(ok) and runtime < limit
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d} {status}: {title} ({runtime:.2f}s, limit {limit:g}s) {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
        assert runtime < limit, line

    return judge


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
