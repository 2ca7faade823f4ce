import numpy as np
import pytest
from hypothesis import strategies as st

from dualrecord import DualRecordTable

CANONICAL = DualRecordTable(40, 30, 25)


@pytest.fixture
def canonical():
    return CANONICAL


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


counts = st.integers(min_value=0, max_value=10_000)
positive_counts = st.integers(min_value=1, max_value=2_000)


@st.composite
def tables(draw, lo=0, hi=10_000):
    x11 = draw(st.integers(lo, hi))
    x10 = draw(st.integers(lo, hi))
    x01 = draw(st.integers(lo, hi))
    if x11 + x10 + x01 == 0:
        x11 = 1
    return DualRecordTable(x11, x10, x01)


def random_tables(n, seed=0, lo=1, hi=500):
    gen = np.random.default_rng(seed)
    return [DualRecordTable(*map(int, row)) for row in gen.integers(lo, hi + 1, size=(n, 3))]


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
