"""Moment-matrix relaxations of the colored Lovasz number.

Generators are projectors ``A_i`` and ``B_i`` (one per vertex and party).  A
word is a tuple of letters ``(party, vertex)``.  Letters of different parties
commute; same-party letters are idempotent and multiply to zero across an
edge of that party's color.  Moment matrices are real, so a word and its
adjoint share one variable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .graphs import AnyGraph, as_colored, ColoredGraph
from .sdp import SdpProblem, SdpSolution, SolverError, lmi_problem, solve

Letter = tuple[str, int]
Word = tuple[Letter, ...]
Level = Union[int, str]

IDENTITY: Word = ()
LEVELS = (1, "1+AB", 2)


def parse_level(level) -> Level:
    key = str(level).lower().replace(" ", "")
    if key in ("1",):
        return 1
    if key in ("1+ab", "1ab"):
        return "1+AB"
    if key in ("2",):
        return 2
    raise ValueError(f"unsupported relaxation level {level!r}; choose 1, 1+AB or 2")


def adjoint(word: Word) -> Word:
    """Reverse the word, then restore the A-before-B order (parties commute)."""
    a = [x for x in word if x[0] == "A"]
    b = [x for x in word if x[0] == "B"]
    return tuple(a[::-1] + b[::-1])


def canonicalize(word: Sequence[Letter], g: AnyGraph) -> Word | None:
    """Normal form of a word, or ``None`` when it is the zero operator."""
    g = as_colored(g)
    out: list[Letter] = []
    for party in ("A", "B"):
        edges = g.edges(party)
        stack: list[Letter] = []
        for letter in word:
            if letter[0] != party:
                continue
            if stack:
                top = stack[-1][1]
                if top == letter[1]:
                    continue
                if (min(top, letter[1]), max(top, letter[1])) in edges:
                    return None
            stack.append(letter)
        out += stack
    return tuple(out)


def class_key(word: Word) -> Word:
    """Variable-class representative shared by a word and its adjoint."""
    adj = adjoint(word)
    return min(word, adj)


def word_str(word: Word) -> str:
    return "".join(f"{p}{i}" for p, i in word) or "1"


def basis(g: AnyGraph, level: Level, max_words: int | None = None) -> list[Word]:
    g = as_colored(g)
    level = parse_level(level)
    n = g.n
    words: list[Word] = [IDENTITY]
    words += [(("A", i),) for i in range(n)]
    words += [(("B", i),) for i in range(n)]
    if level in ("1+AB", 2):
        words += [(("A", i), ("B", j)) for i in range(n) for j in range(n)]
    if level == 2:
        for party in ("A", "B"):
            edges = g.edges(party)
            words += [((party, i), (party, j)) for i in range(n) for j in range(n)
                      if i != j and (min(i, j), max(i, j)) not in edges]
    if max_words is not None:
        words = words[:max_words]
    return words


@dataclass
class MomentRelaxation:
    graph: ColoredGraph
    level: Level
    words: list[Word]
    classes: dict[Word, int]
    objective_ids: list[int]
    weights: np.ndarray
    problem: SdpProblem = field(repr=False)
    # entries of the moment matrix: (row, col, class id) with id -1 for the identity
    layout: list[tuple[int, int, int]] = field(repr=False, default_factory=list)

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def n_variables(self) -> int:
        return len(self.classes)

    def class_of(self, word: Sequence[Letter]) -> int | None:
        """Variable id of a word, -1 for the identity, None for zero or unknown."""
        w = canonicalize(word, self.graph)
        if w is None:
            return None
        if w == IDENTITY:
            return -1
        return self.classes.get(class_key(w))

    def moment_matrix(self, y: np.ndarray) -> np.ndarray:
        M = np.zeros((self.size, self.size))
        for r, c, v in self.layout:
            M[r, c] = M[c, r] = 1.0 if v < 0 else y[v]
        return M

    def class_table(self) -> dict[str, int]:
        return {word_str(w): k for w, k in sorted(self.classes.items(), key=lambda t: t[1])}

    def to_json(self) -> str:
        return json.dumps({
            "level": str(self.level),
            "basis": [word_str(w) for w in self.words],
            "classes": self.class_table(),
            "objective": {str(i): k for i, k in enumerate(self.objective_ids)},
        }, indent=1, sort_keys=True)


def build_relaxation(g: AnyGraph, w: Sequence[float], level: Level = "1+AB",
                     max_words: int | None = None) -> MomentRelaxation:
    """Assemble ``max sum_i w_i <A_i B_i>`` over PSD moment matrices as an LMI."""
    g = as_colored(g)
    level = parse_level(level)
    w = np.asarray(w, dtype=float).reshape(-1)
    if len(w) != g.n:
        raise ValueError(f"expected {g.n} weights")
    words = basis(g, level, max_words)
    size = len(words)
    classes: dict[Word, int] = {}
    layout = []
    f0, fe = [], []
    for r in range(size):
        left = adjoint(words[r])
        for c in range(r, size):
            prod = canonicalize(left + words[c], g)
            if prod is None:
                continue
            if prod == IDENTITY:
                f0.append((0, r, c, 1.0))
                layout.append((r, c, -1))
                continue
            key = class_key(prod)
            v = classes.setdefault(key, len(classes))
            fe.append((v, 0, r, c, 1.0))
            layout.append((r, c, v))
    obj = []
    for i in range(g.n):
        key = class_key(canonicalize((("A", i), ("B", i)), g))
        if key not in classes:
            raise ValueError("basis too small to contain the objective monomials")
        obj.append(classes[key])
    c = np.zeros(len(classes))
    for i, v in enumerate(obj):
        c[v] += w[i]
    prob = lmi_problem((size,), np.array(f0), np.array(fe), c)
    return MomentRelaxation(g, level, words, classes, obj, w, prob, layout)


@dataclass
class UpperBound:
    value: float
    relaxation: MomentRelaxation = field(repr=False)
    solution: SdpSolution = field(repr=False)

    @property
    def moments(self) -> np.ndarray:
        return self.solution.y

    @property
    def behavior(self) -> np.ndarray:
        return self.solution.y[self.relaxation.objective_ids]


def solve_colored_upper(g: AnyGraph, w: Sequence[float], level: Level = "1+AB",
                        tol: float = 1e-8, max_words: int | None = None) -> UpperBound:
    rel = build_relaxation(g, w, level, max_words)
    sol = solve(rel.problem, tol=tol)
    if not sol.optimal:
        raise SolverError(f"moment relaxation ended with status {sol.status}", sol)
    # -primal objective is the bound certified by the dual matrix X
    return UpperBound(-sol.primal_objective, rel, sol)


def theta_colored_upper(g: AnyGraph, w: Sequence[float], level: Level = "1+AB",
                        tol: float = 1e-8) -> float:
    return solve_colored_upper(g, w, level, tol).value


def membership_margin(p: Sequence[float], g: AnyGraph, level: Level = "1+AB",
                      tol: float = 1e-9) -> tuple[float, float]:
    """Bounds on ``max t`` with ``M - t I`` PSD and ``<A_i B_i> = p_i`` pinned."""
    g = as_colored(g)
    p = np.asarray(p, dtype=float).reshape(-1)
    if len(p) != g.n:
        raise ValueError("behavior length does not match the graph")
    rel = build_relaxation(g, np.zeros(g.n), level)
    pinned = {v: p[i] for i, v in enumerate(rel.objective_ids)}
    free = [v for v in range(rel.n_variables) if v not in pinned]
    index = {v: k for k, v in enumerate(free)}
    t = len(free)
    f0, fe = [], []
    for r, c, v in rel.layout:
        if v < 0:
            f0.append((0, r, c, 1.0))
        elif v in pinned:
            f0.append((0, r, c, pinned[v]))
        else:
            fe.append((index[v], 0, r, c, 1.0))
    fe += [(t, 0, i, i, -1.0) for i in range(rel.size)]
    c = np.zeros(t + 1)
    c[t] = 1.0
    sol = solve(lmi_problem((rel.size,), np.array(f0), np.array(fe), c), tol=tol)
    if not sol.optimal:
        raise SolverError(f"membership relaxation ended with status {sol.status}", sol)
    return -sol.dual_objective, -sol.primal_objective


def colored_membership_upper(p: Sequence[float], g: AnyGraph, level: Level = "1+AB",
                             tol: float = 1e-7) -> bool:
    """False certifies ``p`` is outside the quantum set of ``g``; True is only
    necessary for membership."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if np.any(p < -tol) or np.any(p > 1 + tol):
        return False
    _, upper = membership_margin(np.clip(p, 0.0, 1.0), g, level)
    return upper > -tol
