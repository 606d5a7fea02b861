import numpy as np
import pytest


def equal_up_to_phase(a, b, atol=1e-10):
    """True when ``a = e^{i phi} b`` for some global phase."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    k = int(np.argmax(np.abs(b)))
    if abs(b[k]) < atol:
        return np.allclose(a, b, atol=atol)
    phase = a[k] / b[k]
    if not np.isclose(abs(phase), 1.0, atol=1e-8):
        return False
    return np.allclose(a, phase * b, atol=atol)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record the verdict line for one acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES[number] = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
