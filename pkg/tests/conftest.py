import numpy as np
import pytest

from ergolab.models import (
    IIDModel,
    JointModel,
    MarkovModel,
    RotationModel,
    golden_conjugate,
    symmetric_flip,
)

FLIP_RATE = 0.4689955935892812  # -(0.9 log2 0.9 + 0.1 log2 0.1)


@pytest.fixture(scope="session")
def flip():
    return symmetric_flip(0.1)


@pytest.fixture(scope="session")
def fair():
    return IIDModel([0.5, 0.5])


@pytest.fixture(scope="session")
def golden_half():
    g = golden_conjugate()
    return RotationModel.two_interval(g, 1 << 127)


@pytest.fixture(scope="session")
def golden_sturmian():
    return RotationModel.sturmian(golden_conjugate())


@pytest.fixture(scope="session")
def two_bits():
    """Four states (a, b) of two independent fair bits; P reads a, Q reads b."""
    T = np.full((4, 4), 0.25)
    return JointModel(MarkovModel(T), [0, 0, 1, 1], [0, 1, 0, 1])


@pytest.fixture(scope="session")
def pair_chain():
    """State (previous bit, current bit) of a fair coin; P = current bit, Q = state."""
    T = np.array([[.5, .5, 0, 0], [0, 0, .5, .5], [.5, .5, 0, 0], [0, 0, .5, .5]])
    return JointModel(MarkovModel(T), [0, 1, 0, 1], [0, 1, 2, 3])


@pytest.fixture(scope="session")
def three_state():
    T = np.array([[.4, .3, .3], [.3, .4, .3], [.3, .3, .4]])
    return JointModel(MarkovModel(T), [0, 1, 1], [0, 0, 1])


ACCEPTANCE_LINES = []


def record(criterion: int, title: str, passed: bool, detail: str) -> None:
    """Remember one acceptance verdict line; printed at the end of the session."""
    line = f"{'PASS' if passed else 'FAIL'} criterion {criterion} ({title}): {detail}"
    ACCEPTANCE_LINES.append((criterion, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
