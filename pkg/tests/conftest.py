import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

P4 = [0.4, 0.4, 0.1, 0.1]
J22 = [[0.35, 0.15], [0.15, 0.35]]


@st.composite
def simplex(draw, n=None, min_n=2, max_n=6, full=True):
    if n is None:
        n = draw(st.integers(min_n, max_n))
    lo = 0.01 if full else 0.0
    w = draw(st.lists(st.floats(lo, 1.0), min_size=n, max_size=n))
    w = np.asarray(w)
    if w.sum() <= 0:
        w = np.ones(n)
    return w / w.sum()


@st.composite
def stochastic(draw, nx, ny, full=True):
    return np.array([draw(simplex(ny, full=full)) for _ in range(nx)])


seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
