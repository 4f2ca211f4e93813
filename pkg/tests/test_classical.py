import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coloredtheta.classical import (alpha, characteristic_vector, classical_membership,
                                    fractional_cover, independent_sets)
from coloredtheta.graphs import SimpleGraph, builtin, chsh_colored, chsh_shadow

from conftest import simple_graphs

FIG4_END = [0, 0, 0.2, 0.2, 0.2, 0.2, 0.2, 0]


def brute_alpha(g, w):
    best = 0.0
    for mask in range(1 << g.n):
        s = [i for i in range(g.n) if mask >> i & 1]
        if all((i, j) not in g.edges for i in s for j in s if i < j):
            best = max(best, sum(w[i] for i in s))
    return best


def test_independent_sets_chsh():
    sets = independent_sets(chsh_colored())
    assert max(len(s) for s in sets) == 3
    s = chsh_shadow()
    for t in sets:
        assert all((i, j) not in s.edges for i in t for j in t if i < j)
    assert independent_sets(chsh_colored()) == independent_sets(chsh_shadow())


def test_independent_sets_small():
    assert independent_sets(SimpleGraph(3)) == [frozenset({0, 1, 2})]
    c5 = builtin("pentagon")
    sets = independent_sets(c5)
    assert len(sets) == 5 and all(len(t) == 2 for t in sets)
    with pytest.raises(ValueError):
        independent_sets(SimpleGraph(25))


def test_alpha_values():
    assert alpha(chsh_shadow()) == 3
    assert alpha(chsh_colored()) == 3
    assert alpha(chsh_shadow(), [0] * 8) == 0
    assert alpha(chsh_shadow(), FIG4_END) == pytest.approx(0.4, abs=1e-15)
    with pytest.raises(ValueError):
        alpha(chsh_shadow(), [-1] + [1] * 7)
    with pytest.raises(ValueError):
        alpha(chsh_shadow(), [1] * 7)


def test_classical_membership_examples():
    g = chsh_shadow()
    for s in independent_sets(g):
        assert classical_membership(characteristic_vector(s, 8), g)
    assert not classical_membership([(2 + math.sqrt(2)) / 8] * 8, g)
    sets = independent_sets(g)
    mix = sum(characteristic_vector(s, 8) for s in sets) / len(sets)
    assert classical_membership(mix, g)
    assert not classical_membership([1.2] + [0] * 7, g)


def test_fractional_cover_pentagon():
    # uniform 1/2 on C5 needs cover value 5/4
    assert fractional_cover([0.5] * 5, builtin("pentagon")) == pytest.approx(1.25, abs=1e-6)


@settings(max_examples=100)
@given(simple_graphs(max_n=8), st.data())
def test_alpha_matches_brute_force(g, data):
    w = data.draw(st.lists(st.floats(0, 10), min_size=g.n, max_size=g.n))
    assert alpha(g, w) == pytest.approx(brute_alpha(g, w), rel=1e-12, abs=1e-12)


@settings(max_examples=100)
@given(simple_graphs(max_n=8), st.data(), st.floats(0, 5))
def test_alpha_homogeneous(g, data, lam):
    w = data.draw(st.lists(st.floats(0, 1), min_size=g.n, max_size=g.n))
    assert alpha(g, lam * np.array(w)) == pytest.approx(lam * alpha(g, w), rel=1e-12, abs=1e-12)


@settings(max_examples=100)
@given(simple_graphs(min_n=2, max_n=8), st.data())
def test_alpha_edge_removal_monotone(g, data):
    w = data.draw(st.lists(st.floats(0, 1), min_size=g.n, max_size=g.n))
    edges = sorted(g.edges)
    if edges:
        drop = data.draw(st.sampled_from(edges))
        h = SimpleGraph(g.n, [e for e in edges if e != drop])
        assert alpha(h, w) >= alpha(g, w) - 1e-15


@settings(max_examples=100)
@given(simple_graphs(min_n=2, max_n=7), st.data())
def test_classical_points_obey_alpha(g, data):
    sets = independent_sets(g)
    lam = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=len(sets),
                                      max_size=len(sets))))
    lam /= lam.sum()
    p = sum(l * characteristic_vector(s, g.n) for l, s in zip(lam, sets))
    shrink = np.array(data.draw(st.lists(st.floats(0, 1), min_size=g.n, max_size=g.n)))
    assert classical_membership(p, g)
    assert classical_membership(p * shrink, g)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    for _ in range(100):
        w = rng.random(g.n)
        assert w @ p <= alpha(g, w) + 1e-9
