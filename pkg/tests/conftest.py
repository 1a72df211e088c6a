import numpy as np
import pytest


def rel_err(a, b):
    """Elementwise ``|a - b| / max(|a|, |b|, 1)``; NaN pairs count as equal."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    both_nan = np.isnan(a) & np.isnan(b)
    err = np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return np.where(both_nan, 0.0, err)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# (criterion, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.line(f"{'PASS' if ok else 'FAIL'}  criterion {num}: {detail}")
