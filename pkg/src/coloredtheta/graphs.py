"""Events, simple and bicolored exclusivity graphs, and the CHSH graph family.

Vertices of the built-in CHSH graphs follow the circulant (Moebius-ladder)
order: vertex ``i`` is joined to ``i +- 1`` by a single-colored rim edge and
to ``i + 4`` by a spoke.  Rim edges ``(0,1), (2,3), (4,5), (6,7)`` are Bob's,
``(1,2), (3,4), (5,6), (7,0)`` are Alice's, and in the full CHSH graph every
spoke is a double edge.  With this order the vertices ``2..6`` span a
pentagon, which is what the ``fig4`` weight path relies on.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

Edge = tuple[int, int]


def _norm_edge(i: int, j: int) -> Edge:
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f"self-loop on vertex {i}")
    return (i, j) if i < j else (j, i)


def _edge_set(edges: Iterable[Sequence[int]], n: int) -> frozenset[Edge]:
    out = set()
    for e in edges:
        i, j = _norm_edge(*e)
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge {e} out of range for n={n}")
        out.add((i, j))
    return frozenset(out)


@dataclass(frozen=True)
class Event:
    """Outcomes ``a, b, ...`` obtained for settings ``x, y, ...`` (one per party)."""

    outcomes: tuple[int, ...]
    settings: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(int(a) for a in self.outcomes))
        object.__setattr__(self, "settings", tuple(int(x) for x in self.settings))
        if len(self.outcomes) != len(self.settings) or not self.outcomes:
            raise ValueError("outcomes and settings must have equal nonzero length")
        if min(self.outcomes + self.settings) < 0:
            raise ValueError("outcomes and settings must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "Event":
        """Parse ``"ab|xy"`` (single-digit entries) or ``"a,b|x,y"``."""
        left, sep, right = text.strip().partition("|")
        if not sep:
            raise ValueError(f"event {text!r} lacks '|'")

        def split(s):
            return [int(c) for c in (s.split(",") if "," in s else list(s))]

        return cls(tuple(split(left)), tuple(split(right)))

    def __str__(self) -> str:
        sep = "," if max(self.outcomes + self.settings) > 9 else ""
        return (sep.join(map(str, self.outcomes)) + "|"
                + sep.join(map(str, self.settings)))


def exclusive(v1: Event, v2: Event) -> tuple[bool, ...]:
    """Per-party exclusivity flags: same setting, different outcome."""
    if len(v1.outcomes) != len(v2.outcomes):
        raise ValueError("events have different numbers of parties")
    return tuple(x1 == x2 and a1 != a2 for a1, x1, a2, x2 in
                 zip(v1.outcomes, v1.settings, v2.outcomes, v2.settings))


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: frozenset[Edge]
    labels: tuple[Event, ...] | None = None

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = (),
                 labels: Sequence[Event] | None = None):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", _edge_set(edges, self.n))
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != self.n:
                raise ValueError("need one label per vertex")
        object.__setattr__(self, "labels", labels)

    def adjacency(self) -> list[int]:
        """Neighbourhood bitmasks, one int per vertex."""
        adj = [0] * self.n
        for i, j in self.edges:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return adj

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "labels": None if self.labels is None else [str(e) for e in self.labels],
            "edges": [list(e) for e in sorted(self.edges)],
        }


@dataclass(frozen=True)
class ColoredGraph:
    """Bicolored exclusivity graph; a pair may sit in both edge sets."""

    n: int
    edges_a: frozenset[Edge]
    edges_b: frozenset[Edge]
    labels: tuple[Event, ...] | None = field(default=None, compare=True)

    def __init__(self, n: int, edges_a: Iterable[Sequence[int]] = (),
                 edges_b: Iterable[Sequence[int]] = (),
                 labels: Sequence[Event] | None = None):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges_a", _edge_set(edges_a, self.n))
        object.__setattr__(self, "edges_b", _edge_set(edges_b, self.n))
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != self.n:
                raise ValueError("need one label per vertex")
        object.__setattr__(self, "labels", labels)

    @property
    def double_edges(self) -> frozenset[Edge]:
        return self.edges_a & self.edges_b

    def edges(self, party: str) -> frozenset[Edge]:
        if party == "A":
            return self.edges_a
        if party == "B":
            return self.edges_b
        raise ValueError(f"unknown party {party!r}")

    def swapped(self) -> "ColoredGraph":
        return ColoredGraph(self.n, self.edges_b, self.edges_a, self.labels)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "labels": None if self.labels is None else [str(e) for e in self.labels],
            "edges_a": [list(e) for e in sorted(self.edges_a)],
            "edges_b": [list(e) for e in sorted(self.edges_b)],
        }


AnyGraph = SimpleGraph | ColoredGraph


def build_colored_graph(events: Sequence[Event]) -> ColoredGraph:
    events = list(events)
    if len(set(events)) != len(events):
        raise ValueError("events must be pairwise distinct")
    ea, eb = [], []
    for i, j in itertools.combinations(range(len(events)), 2):
        flags = exclusive(events[i], events[j])
        if len(flags) != 2:
            raise ValueError("only bipartite events are supported")
        if flags[0]:
            ea.append((i, j))
        if flags[1]:
            eb.append((i, j))
    return ColoredGraph(len(events), ea, eb, events)


def build_exclusivity_graph(events: Sequence[Event]) -> SimpleGraph:
    """Single-color exclusivity graph: an edge whenever any party is exclusive."""
    events = list(events)
    if len(set(events)) != len(events):
        raise ValueError("events must be pairwise distinct")
    edges = [(i, j) for i, j in itertools.combinations(range(len(events)), 2)
             if any(exclusive(events[i], events[j]))]
    return SimpleGraph(len(events), edges, events)


def shadow(g: AnyGraph) -> SimpleGraph:
    if isinstance(g, SimpleGraph):
        return g
    return SimpleGraph(g.n, g.edges_a | g.edges_b, g.labels)


def as_colored(g: AnyGraph) -> ColoredGraph:
    """View a simple graph as a one-color (Alice) colored graph."""
    if isinstance(g, ColoredGraph):
        return g
    return ColoredGraph(g.n, g.edges, (), g.labels)


# -- CHSH graphs ---------------------------------------------------------------

CHSH_EVENTS = tuple(Event.parse(s) for s in
                    ("00|00", "11|10", "01|11", "00|01",
                     "11|00", "00|10", "10|11", "11|01"))

SPOKES: tuple[Edge, ...] = ((0, 4), (1, 5), (2, 6), (3, 7))


def chsh_colored() -> ColoredGraph:
    return build_colored_graph(CHSH_EVENTS)


def chsh_shadow() -> SimpleGraph:
    return build_exclusivity_graph(CHSH_EVENTS)


def resolve_spokes(pattern: str) -> ColoredGraph:
    """CHSH-family member from a per-spoke color pattern.

    ``pattern[k]`` is ``"D"`` (double), ``"A"`` or ``"B"`` for spoke
    ``(k, k+4)``; rim edges are never touched, so the shadow is unchanged.
    """
    if len(pattern) != 4 or set(pattern) - set("DAB"):
        raise ValueError(f"bad spoke pattern {pattern!r}")
    full = chsh_colored()
    ea = set(full.edges_a)
    eb = set(full.edges_b)
    for spoke, c in zip(SPOKES, pattern):
        if c == "A":
            eb.discard(spoke)
        elif c == "B":
            ea.discard(spoke)
    return ColoredGraph(8, ea, eb, CHSH_EVENTS)


# Named members used throughout; the chain is ordered by edge removal.
# Each step of the chain drops one Bob copy of a spoke.
BUILTIN_PATTERNS = {
    "chsh": "DDDD",
    "44,43": "DDAD",
    "44,33^1": "ADAD",
    "44,311": "ADAA",
    "44,1111": "AAAA",
    "33,33": "BABA",
}
CHAIN = ("chsh", "44,43", "44,33^1", "44,311", "44,1111")


def builtin(name: str) -> AnyGraph:
    """Named graph: ``csw`` (the simple shadow), ``pentagon``, or a CHSH-family label."""
    key = name.lower().replace("g_", "").replace("_", ",")
    if key in ("csw", "chsh-shadow", "shadow"):
        return chsh_shadow()
    if key in ("pentagon", "c5"):
        return SimpleGraph(5, [(i, (i + 1) % 5) for i in range(5)])
    def same(label):
        return key == label or key == label.replace(",", "").replace("^", "")

    for label, pattern in BUILTIN_PATTERNS.items():
        if same(label):
            return resolve_spokes(pattern)
    for m in _chsh_family().members:
        if same(family_label(m)):
            return m
    raise KeyError(f"unknown builtin graph {name!r}")


# -- isomorphism ---------------------------------------------------------------

def _color_adjacency(g: ColoredGraph) -> list[list[int]]:
    """adj[v][u] = bit0 if A-edge, bit1 if B-edge."""
    adj = [[0] * g.n for _ in range(g.n)]
    for i, j in g.edges_a:
        adj[i][j] |= 1
        adj[j][i] |= 1
    for i, j in g.edges_b:
        adj[i][j] |= 2
        adj[j][i] |= 2
    return adj


def _find_isomorphism(g1: ColoredGraph, g2: ColoredGraph) -> tuple[int, ...] | None:
    n = g1.n
    a1, a2 = _color_adjacency(g1), _color_adjacency(g2)

    def sig(adj, v):
        return tuple(sorted(adj[v][u] for u in range(n) if adj[v][u]))

    s1 = [sig(a1, v) for v in range(n)]
    s2 = [sig(a2, v) for v in range(n)]
    if sorted(s1) != sorted(s2):
        return None
    # most constrained vertices first
    order = sorted(range(n), key=lambda v: (-len(s1[v]), s1[v]))
    perm = [-1] * n
    used = [False] * n

    def extend(k):
        if k == n:
            return True
        v = order[k]
        for w in range(n):
            if used[w] or s2[w] != s1[v]:
                continue
            if all(a1[v][order[t]] == a2[w][perm[order[t]]] for t in range(k)):
                perm[v] = w
                used[w] = True
                if extend(k + 1):
                    return True
                used[w] = False
        perm[v] = -1
        return False

    return tuple(perm) if extend(0) else None


def colored_isomorphic(g1: ColoredGraph, g2: ColoredGraph, allow_color_swap: bool = True
                       ) -> tuple[bool, tuple[int, ...] | None, bool]:
    """Return ``(isomorphic, perm, swapped)``.

    ``perm[v]`` is the image in ``g2`` of vertex ``v`` of ``g1``; ``swapped``
    tells whether the colors of ``g1`` had to be exchanged first.
    """
    if g1.n != g2.n:
        return False, None, False
    g1, g2 = as_colored(g1), as_colored(g2)
    perm = _find_isomorphism(g1, g2)
    if perm is not None:
        return True, perm, False
    if allow_color_swap:
        perm = _find_isomorphism(g1.swapped(), g2)
        if perm is not None:
            return True, perm, True
    return False, None, False


def _relabel(g: ColoredGraph, perm: Sequence[int]) -> ColoredGraph:
    return ColoredGraph(g.n, [(perm[i], perm[j]) for i, j in g.edges_a],
                        [(perm[i], perm[j]) for i, j in g.edges_b])


def canonical_code(g: ColoredGraph, allow_color_swap: bool = True) -> tuple[int, ...]:
    """Lexicographically minimal adjacency encoding over all relabelings."""
    if g.n > 9:
        raise ValueError("canonical codes are brute force; n <= 9 only")
    best = None
    variants = [g, g.swapped()] if allow_color_swap else [g]
    pairs = list(itertools.combinations(range(g.n), 2))
    for h in variants:
        adj = _color_adjacency(h)
        for perm in itertools.permutations(range(g.n)):
            inv = [0] * g.n
            for v, p in enumerate(perm):
                inv[p] = v
            code = tuple(adj[inv[i]][inv[j]] for i, j in pairs)
            if best is None or code < best:
                best = code
    return best


# -- shadow family -------------------------------------------------------------

@dataclass
class ShadowFamily:
    members: list[ColoredGraph]
    covers: list[tuple[int, int]]  # (parent, child): child = parent minus one edge
    resolutions: int
    allow_color_swap: bool

    def index_of(self, g: ColoredGraph) -> int:
        for k, m in enumerate(self.members):
            if colored_isomorphic(m, g, self.allow_color_swap)[0]:
                return k
        raise KeyError("graph is not a member of this family")

    def __len__(self):
        return len(self.members)


def enumerate_shadow_family(g: ColoredGraph, allow_color_swap: bool = True) -> ShadowFamily:
    """All ways of dropping one color from a subset of double edges, up to isomorphism."""
    doubles = sorted(g.double_edges)
    graphs = []
    for choice in itertools.product("DAB", repeat=len(doubles)):
        ea, eb = set(g.edges_a), set(g.edges_b)
        for e, c in zip(doubles, choice):
            if c == "A":
                eb.discard(e)
            elif c == "B":
                ea.discard(e)
        graphs.append(ColoredGraph(g.n, ea, eb, g.labels))

    members: list[ColoredGraph] = []
    for h in graphs:
        if not any(colored_isomorphic(m, h, allow_color_swap)[0] for m in members):
            members.append(h)

    def class_of(h):
        for k, m in enumerate(members):
            if colored_isomorphic(m, h, allow_color_swap)[0]:
                return k
        raise AssertionError("unreachable")

    covers = set()
    for k, m in enumerate(members):
        for e in m.double_edges:
            for drop_a in (True, False):
                ea, eb = set(m.edges_a), set(m.edges_b)
                (ea if drop_a else eb).discard(e)
                covers.add((k, class_of(ColoredGraph(m.n, ea, eb))))
    return ShadowFamily(members, sorted(covers), len(graphs), allow_color_swap)


@lru_cache(maxsize=1)
def _chsh_family() -> ShadowFamily:
    return enumerate_shadow_family(chsh_colored())


def _component_edge_counts(n: int, edges: frozenset[Edge]) -> list[int]:
    parent = list(range(n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, j in edges:
        parent[find(i)] = find(j)
    counts: dict[int, int] = {}
    for i, j in edges:
        r = find(i)
        counts[r] = counts.get(r, 0) + 1
    return sorted(counts.values(), reverse=True)


def base_label(g: ColoredGraph) -> str:
    parts = ["".join(map(str, _component_edge_counts(g.n, es)))
             for es in (g.edges_a, g.edges_b)]
    return ",".join(sorted(parts, reverse=True))


def family_label(g: AnyGraph, family: ShadowFamily | None = None) -> str:
    """Component-edge-count label, e.g. ``"44,43"`` or ``"44,33^1"``.

    Superscripts rank the members of ``family`` that share a base label by
    descending canonical code.  Without a family, graphs whose shadow is the CHSH
    shadow are ranked inside the CHSH family; others get no superscript.
    """
    g = as_colored(g)
    label = base_label(g)
    if family is None:
        if g.n != 8 or not colored_isomorphic(as_colored(shadow(g)),
                                              as_colored(chsh_shadow()), False)[0]:
            return label
        family = _chsh_family()
    peers = [m for m in family.members if base_label(m) == label]
    if len(peers) <= 1:
        return label
    codes = sorted((canonical_code(m, family.allow_color_swap) for m in peers), reverse=True)
    mine = canonical_code(g, family.allow_color_swap)
    if mine not in codes:
        return label
    return f"{label}^{codes.index(mine) + 1}"


# -- JSON ----------------------------------------------------------------------

def graph_to_json(g: AnyGraph) -> str:
    return json.dumps(g.to_dict(), sort_keys=True, ensure_ascii=False)


def graph_from_dict(d: dict) -> AnyGraph:
    labels = d.get("labels")
    if labels is not None:
        labels = [Event.parse(s) for s in labels]
    if "edges" in d:
        return SimpleGraph(d["n"], d["edges"], labels)
    return ColoredGraph(d["n"], d.get("edges_a", []), d.get("edges_b", []), labels)


def load_graph(spec: str) -> AnyGraph:
    """``builtin:NAME`` or a path to a JSON graph file."""
    if spec.startswith("builtin:"):
        return builtin(spec.split(":", 1)[1])
    with open(Path(spec), encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))


def save_graph(g: AnyGraph, path: str | Path) -> None:
    Path(path).write_text(graph_to_json(g) + "\n", encoding="utf-8")
