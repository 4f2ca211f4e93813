"""Independent sets, weighted independence number and the classical polytope."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .graphs import AnyGraph, shadow
from .sdp import SdpProblem, SolverError, solve

MAX_VERTICES = 24


def _check_weights(w: Sequence[float], n: int) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if len(w) != n:
        raise ValueError(f"expected {n} weights, got {len(w)}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    return w


def independent_sets(g: AnyGraph) -> list[frozenset[int]]:
    """All maximal independent sets of the shadow, largest first.

    Bron-Kerbosch on the complement with bitmask sets, pivoting on the
    candidate with most non-neighbours.
    """
    s = shadow(g)
    n = s.n
    if n > MAX_VERTICES:
        raise ValueError(f"exhaustive enumeration limited to n <= {MAX_VERTICES}")
    full = (1 << n) - 1
    adj = s.adjacency()
    # non-neighbours (excluding self) = neighbours in the complement
    comp = [full & ~adj[v] & ~(1 << v) for v in range(n)]
    found: list[int] = []

    def expand(r: int, p: int, x: int):
        if p == 0 and x == 0:
            found.append(r)
            return
        px = p | x
        pivot = max(_bits(px), key=lambda u: bin(comp[u] & p).count("1"))
        for v in _bits(p & ~comp[pivot]):
            expand(r | (1 << v), p & comp[v], x & comp[v])
            p &= ~(1 << v)
            x |= 1 << v

    if n:
        expand(0, full, 0)
    else:
        found.append(0)
    sets = [frozenset(_bits(r)) for r in found]
    return sorted(sets, key=lambda t: (-len(t), sorted(t)))


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def alpha(g: AnyGraph, w: Sequence[float] | None = None) -> float:
    """Weighted independence number, summed exactly in rationals."""
    n = shadow(g).n
    w = np.ones(n) if w is None else _check_weights(w, n)
    fw = [Fraction(float(x)) for x in w]
    best = Fraction(0)
    for s in independent_sets(g):
        total = sum((fw[i] for i in s), Fraction(0))
        if total > best:
            best = total
    return float(best)


def characteristic_vector(s, n: int) -> np.ndarray:
    x = np.zeros(n)
    x[list(s)] = 1.0
    return x


def fractional_cover(p: Sequence[float], g: AnyGraph, tol: float = 1e-9) -> float:
    """min sum(lam) s.t. sum_I lam_I x^I >= p, lam >= 0, over maximal independent sets.

    The classical polytope is down-closed, so p is classical iff this is <= 1.
    """
    n = shadow(g).n
    p = np.asarray(p, dtype=float).reshape(-1)
    if len(p) != n:
        raise ValueError("behavior length does not match the graph")
    sets = independent_sets(g)
    # one diagonal block: [lam_I ..., slack_i ...]
    size = len(sets) + n
    ent = []
    for i in range(n):
        for k, s in enumerate(sets):
            if i in s:
                ent.append((i, 0, k, k, 1.0))
        ent.append((i, 0, len(sets) + i, len(sets) + i, -1.0))
    cent = [(0, k, k, -1.0) for k in range(len(sets))]
    prob = SdpProblem((size,), p, np.array(ent), np.array(cent))
    sol = solve(prob, tol=tol)
    if not sol.optimal:
        raise SolverError(f"cover LP ended with status {sol.status}", sol)
    return -sol.dual_objective


def classical_membership(p: Sequence[float], g: AnyGraph, tol: float = 1e-7) -> bool:
    p = np.asarray(p, dtype=float)
    if np.any(p < -tol) or np.any(p > 1 + tol):
        return False
    return fractional_cover(np.clip(p, 0.0, 1.0), g) <= 1.0 + tol
