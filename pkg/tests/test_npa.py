import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coloredtheta.classical import alpha
from coloredtheta.graphs import ColoredGraph, builtin, chsh_colored, shadow
from coloredtheta.npa import (adjoint, basis, build_relaxation, canonicalize,
                              colored_membership_upper, membership_margin, parse_level,
                              solve_colored_upper, theta_colored_upper)
from coloredtheta.realizations import chsh_interpolation, g3333_qutrit_point
from coloredtheta.theta import theta

from conftest import colored_graphs

CHSH_P = (2 + math.sqrt(2)) / 8
A = lambda i: ("A", i)  # noqa: E731
B = lambda i: ("B", i)  # noqa: E731


def test_canonicalize_rules():
    g = chsh_colored()
    assert canonicalize((B(0), A(0)), g) == (A(0), B(0))
    assert canonicalize((A(0), A(0)), g) == (A(0),)
    assert canonicalize((A(0), A(4)), g) is None
    assert canonicalize((A(0), B(3), A(2), B(3)), g) == (A(0), A(2), B(3))
    assert canonicalize((), g) == ()


def test_adjoint_keeps_party_order():
    assert adjoint((A(1), A(2), B(3), B(4))) == (A(2), A(1), B(4), B(3))


def test_levels():
    assert parse_level("1+ab") == "1+AB" and parse_level(2) == 2
    with pytest.raises(ValueError):
        parse_level(3)


def test_basis_sizes():
    g = chsh_colored()
    assert len(basis(g, 1)) == 17
    assert len(basis(g, "1+AB")) <= 81
    rel = build_relaxation(ColoredGraph(1), [1.0], 1)
    assert rel.size == 3 and rel.n_variables == 3


def test_class_table_json():
    rel = build_relaxation(chsh_colored(), np.ones(8) / 8)
    d = json.loads(rel.to_json())
    assert d["level"] == "1+AB" and len(d["classes"]) == rel.n_variables
    assert rel.class_of((B(2), A(2))) == rel.objective_ids[2]
    assert rel.class_of((A(0), A(4))) is None


def test_chsh_uniform():
    assert theta_colored_upper(chsh_colored(), np.ones(8) / 8) == pytest.approx(CHSH_P, abs=1e-5)


def test_level_one_is_looser():
    w = [0, 0, 0.2, 0.2, 0.2, 0.2, 0.2, 0]
    assert theta_colored_upper(chsh_colored(), w, 1) >= \
        theta_colored_upper(chsh_colored(), w, "1+AB") - 1e-7


def test_upper_behavior_is_moments():
    ub = solve_colored_upper(chsh_colored(), np.ones(8) / 8)
    assert ub.behavior.sum() / 8 == pytest.approx(ub.value, abs=1e-6)


def test_membership_examples():
    g = chsh_colored()
    assert colored_membership_upper(chsh_interpolation(0.0).behavior(g), g)
    assert colored_membership_upper(np.zeros(8), g)
    assert not colored_membership_upper([1.5] + [0] * 7, g)


def test_qutrit_behavior_excluded_at_1ab():
    g = chsh_colored()
    p = g3333_qutrit_point(1.0).behavior(builtin("33,33"))
    lo, up = membership_margin(p, g, "1+AB")
    assert up < -1e-3
    assert not colored_membership_upper(p, g)


def _oracle(g, w):
    """Level 1+AB relaxation written directly in cvxpy."""
    cp = pytest.importorskip("cvxpy")
    n = g.n
    ops = [()] + [(("A", i),) for i in range(n)] + [(("B", i),) for i in range(n)] + \
        [(("A", i), ("B", j)) for i in range(n) for j in range(n)]

    def reduce(a, b):
        # a^dagger b for words of the form A_i^{0,1} B_j^{0,1}
        pa = [x[1] for x in a if x[0] == "A"] + [x[1] for x in b if x[0] == "A"]
        pb = [x[1] for x in a if x[0] == "B"] + [x[1] for x in b if x[0] == "B"]
        out = []
        for party, seq, edges in (("A", pa, g.edges_a), ("B", pb, g.edges_b)):
            red = []
            for v in seq:
                if red and red[-1] == v:
                    continue
                if red and (min(red[-1], v), max(red[-1], v)) in edges:
                    return None
                red.append(v)
            out.append(tuple(red))
        key = (out[0], out[1])
        rev = (out[0][::-1], out[1][::-1])
        return min(key, rev)

    ids = {}
    N = len(ops)
    table = {}
    for r in range(N):
        for c in range(r, N):
            k = reduce(ops[r], ops[c])
            if k is not None:
                table[r, c] = ids.setdefault(k, len(ids))
    y = cp.Variable(len(ids))
    M = cp.Variable((N, N), symmetric=True)
    cons = [M >> 0, y[ids[((), ())]] == 1]
    for r in range(N):
        for c in range(r, N):
            cons.append(M[r, c] == (y[table[r, c]] if (r, c) in table else 0))
    obj = sum(w[i] * y[ids[((i,), (i,))]] for i in range(n))
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


@pytest.mark.parametrize("seed", range(3))
def test_against_cvxpy_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 4
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    kinds = rng.integers(0, 4, len(pairs))
    g = ColoredGraph(n, [p for p, k in zip(pairs, kinds) if k & 1],
                     [p for p, k in zip(pairs, kinds) if k & 2])
    w = rng.random(n)
    assert theta_colored_upper(g, w) == pytest.approx(_oracle(g, w), abs=1e-5)


@settings(max_examples=100)
@given(colored_graphs(max_n=4), st.data())
def test_sandwich(g, data):
    w = data.draw(st.lists(st.floats(0, 1), min_size=g.n, max_size=g.n))
    up = theta_colored_upper(g, w)
    assert alpha(g, w) <= up + 1e-6
    assert up <= theta(shadow(g), w) + 1e-6


@settings(max_examples=100)
@given(colored_graphs(min_n=2, max_n=4), st.data())
def test_edge_removal_monotone(g, data):
    w = data.draw(st.lists(st.floats(0, 1), min_size=g.n, max_size=g.n))
    colored = [("A", e) for e in sorted(g.edges_a)] + [("B", e) for e in sorted(g.edges_b)]
    if not colored:
        return
    party, e = data.draw(st.sampled_from(colored))
    ea, eb = set(g.edges_a), set(g.edges_b)
    (ea if party == "A" else eb).discard(e)
    h = ColoredGraph(g.n, ea, eb)
    assert theta_colored_upper(g, w) <= theta_colored_upper(h, w) + 1e-6


@settings(max_examples=100)
@given(colored_graphs(max_n=3), st.data(), st.floats(0.1, 10))
def test_homogeneous(g, data, lam):
    w = np.array(data.draw(st.lists(st.floats(0, 1), min_size=g.n, max_size=g.n)))
    assert theta_colored_upper(g, lam * w) == pytest.approx(
        lam * theta_colored_upper(g, w), abs=1e-6 * (1 + lam))
