import pytest

from rsalearn.core import DEFAULT_VOCAB, GameContext, ObjectFeatures

ACCEPTANCE_LINES: list[str] = []

RED, GREEN, BLUE = 0, 1, 2
CIRCLE, SQUARE = 0, 1


def obj(color, shape):
    return ObjectFeatures(color, shape)


@pytest.fixture
def fig1_context():
    """Red circle (target), red square, blue circle."""
    return GameContext((obj(RED, CIRCLE), obj(RED, SQUARE), obj(BLUE, CIRCLE)), 0)


@pytest.fixture
def vocab():
    return DEFAULT_VOCAB


@pytest.fixture
def acceptance():
    def record(criterion: str, passed: bool, detail: str):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
