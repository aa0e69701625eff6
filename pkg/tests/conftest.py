import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from thetadim.dyadic_core import DyadicSet

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")


@st.composite
def dyadic_sets(draw, d=None, min_depth=1, max_depth=5, max_points=12):
    """Small random sets: a handful of random leaves of a random tree."""
    d = draw(st.integers(1, 3)) if d is None else d
    depth = draw(st.integers(min_depth, max_depth))
    side = 1 << depth
    n = draw(st.integers(1, max_points))
    flat = draw(st.lists(st.integers(0, side**d - 1), min_size=n, max_size=n))
    idx = np.array([np.unravel_index(v, (side,) * d) for v in flat], dtype=np.int64).reshape(-1, d)
    return DyadicSet.from_leaf_indices(idx, d, depth)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion():
    """Store one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number, ok, detail, elapsed, limit):
        in_time = elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        ACCEPTANCE_LINES[number] = (
            f"criterion {number}: {status}  {detail}  [{elapsed:.1f} s, limit {limit} s]"
        )
        return ok and in_time

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
