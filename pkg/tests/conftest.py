import numpy as np
import pytest


def central_difference(f, theta, j, h=1e-6):
    up = np.array(theta, dtype=float)
    dn = up.copy()
    up[j] += h
    dn[j] -= h
    return (f(up) - f(dn)) / (2 * h)


@pytest.fixture
def rng():
    return np.random.default_rng(20240614)


THETA_STAR = 0.58


# (criterion number, title, passed, detail), filled by test_acceptance
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
