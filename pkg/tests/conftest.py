import numpy as np
import pytest

from quadspec import reducible_spec, validate_spec

ACCEPTANCE_LINES: list[str] = []


def record_acceptance_line(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    """Re-emit the acceptance PASS/FAIL lines after the test summary."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def wigner_square_spec():
    """q = X^2: the squared semicircle with closed-form density."""
    return validate_spec(1, [[1.0]], [0.0], 0.0)


@pytest.fixture(scope="session")
def anticommutator_spec():
    """q = X1 X2 + X2 X1: non-reducible, symmetric spectrum, quartic edge oracle."""
    return validate_spec(2, [[0, 1], [1, 0]], [0, 0], 0.0)


@pytest.fixture(scope="session")
def shifted_square_spec():
    """q = (X - 1)^2: reducible, real direction, xi = 1 (bulk shift)."""
    return validate_spec(1, [[1.0]], [-2.0], 1.0)


@pytest.fixture(scope="session")
def threshold_square_spec():
    """q = (X - 2)^2: reducible, real direction at the threshold xi = 2."""
    return validate_spec(1, [[1.0]], [-4.0], 4.0)


@pytest.fixture(scope="session")
def complex_direction():
    return np.array([1.0, 1.0j]) / np.sqrt(2.0)


@pytest.fixture(scope="session")
def complex_half_spec(complex_direction):
    """Genuinely complex direction with s = 2, xi = 1/2 (below threshold)."""
    return reducible_spec(1.0, 0.5, complex_direction)


@pytest.fixture(scope="session")
def complex_threshold_spec(complex_direction):
    """Genuinely complex direction with s = 2, xi = 1 (at the threshold s xi = 2)."""
    return reducible_spec(1.0, 1.0, complex_direction)
