import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from coloredtheta.graphs import ColoredGraph, SimpleGraph

settings.register_profile("default", deadline=None, print_blob=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def colored_graphs(draw, min_n=2, max_n=5):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    # 0 none, 1 Alice, 2 Bob, 3 double
    kinds = draw(st.lists(st.integers(0, 3), min_size=len(pairs), max_size=len(pairs)))
    ea = [p for p, k in zip(pairs, kinds) if k in (1, 3)]
    eb = [p for p, k in zip(pairs, kinds) if k in (2, 3)]
    return ColoredGraph(n, ea, eb)


@st.composite
def simple_graphs(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return SimpleGraph(n, [p for p, k in zip(pairs, keep) if k])


def weights_for(n, lo=0.0, hi=1.0):
    return st.lists(st.floats(lo, hi, allow_nan=False), min_size=n, max_size=n)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
