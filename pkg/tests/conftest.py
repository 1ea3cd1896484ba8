import numpy as np
import pytest

T_POINTS = [(1, 1), (-1, 1), (-2, 0), (2, 0)]
K_POINTS = [(0, 1), (-1, 0), (0, -1), (3, 0)]
R_POINTS = [(0, 0), (4, 0), (0, 3)]
R_BAR_POINTS = [(0, 0), (4, 0), (0, -3)]
S_POINTS = [(1, 0), (-1, 0), (0, 1), (0, -1)]


@pytest.fixture
def T():
    return np.array(T_POINTS, dtype=float)


@pytest.fixture
def K():
    return np.array(K_POINTS, dtype=float)


@pytest.fixture
def R():
    return np.array(R_POINTS, dtype=float)


@pytest.fixture
def R_bar():
    return np.array(R_BAR_POINTS, dtype=float)


@pytest.fixture
def S():
    return np.array(S_POINTS, dtype=float)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str):
        ACCEPTANCE_RESULTS[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
