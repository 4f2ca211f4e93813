"""Explicit quantum realizations: lower bounds on the colored Lovasz number.

A realization is a shared pure state on ``C^dA (x) C^dB`` and one projector
per vertex and party.  Qubit projectors are described by Bloch vectors on the
x-z great circle, ``r = (sin theta, cos theta)`` for a Bloch angle ``theta``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .graphs import AnyGraph, ColoredGraph, as_colored, builtin

PROJ_TOL = 1e-10
STATE_TOL = 1e-12
ORTH_TOL = 1e-9

# optimum of the first pentagonal Bell expression on the CHSH layout
A_P1 = 0.6338
GAMMA_P1 = math.radians(25.0)
DELTA_P1 = math.radians(14.0)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


class RealizationError(ValueError):
    pass


@dataclass
class Realization:
    dims: tuple[int, int]
    state: np.ndarray
    proj_a: list[np.ndarray]
    proj_b: list[np.ndarray]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dims = (int(self.dims[0]), int(self.dims[1]))
        self.state = np.asarray(self.state).reshape(-1)
        self.proj_a = [np.asarray(p) for p in self.proj_a]
        self.proj_b = [np.asarray(p) for p in self.proj_b]

    @property
    def n(self) -> int:
        return len(self.proj_a)

    def edge_residuals(self, g: AnyGraph) -> dict[str, float]:
        g = as_colored(g)
        out = {}
        for party, projs in (("A", self.proj_a), ("B", self.proj_b)):
            for i, j in sorted(g.edges(party)):
                out[f"{party}{i}-{j}"] = float(np.abs(projs[i] @ projs[j]).max())
        return out

    def check(self, g: AnyGraph | None = None) -> None:
        """Raise RealizationError unless every invariant holds."""
        da, db = self.dims
        if len(self.proj_a) != len(self.proj_b):
            raise RealizationError("projector lists differ in length")
        if self.state.shape != (da * db,):
            raise RealizationError("state dimension does not match dims")
        if abs(np.linalg.norm(self.state) - 1.0) > STATE_TOL:
            raise RealizationError("state is not normalized")
        for party, projs, d in (("A", self.proj_a, da), ("B", self.proj_b, db)):
            for i, p in enumerate(projs):
                if p.shape != (d, d):
                    raise RealizationError(f"projector {party}{i} has shape {p.shape}")
                if np.abs(p - p.conj().T).max() > PROJ_TOL:
                    raise RealizationError(f"projector {party}{i} is not hermitian")
                if np.abs(p @ p - p).max() > PROJ_TOL:
                    raise RealizationError(f"projector {party}{i} is not idempotent")
        if g is not None:
            g = as_colored(g)
            if g.n != self.n:
                raise RealizationError("graph size does not match the realization")
            for key, res in self.edge_residuals(g).items():
                if res > ORTH_TOL:
                    raise RealizationError(f"edge {key} violates orthogonality ({res:.2e})")

    def behavior(self, g: AnyGraph | None = None) -> np.ndarray:
        return behavior_from_realization(self, g)

    def value(self, w: Sequence[float], g: AnyGraph | None = None) -> float:
        return float(np.dot(w, self.behavior(g)))

    def to_dict(self, g: AnyGraph | None = None) -> dict:
        def enc(m):
            m = np.asarray(m)
            if np.iscomplexobj(m):
                return {"re": m.real.tolist(), "im": m.imag.tolist()}
            return m.tolist()

        d = {"dims": list(self.dims), "state": enc(self.state),
             "proj_a": [enc(p) for p in self.proj_a],
             "proj_b": [enc(p) for p in self.proj_b],
             "meta": self.meta}
        if g is not None:
            d["edge_residuals"] = self.edge_residuals(g)
        return d

    def to_json(self, g: AnyGraph | None = None) -> str:
        return json.dumps(self.to_dict(g), indent=1, sort_keys=True)


def bloch_projector(r: Sequence[float]) -> np.ndarray:
    """Rank-1 qubit projector ``(1 + r_x X + r_z Z) / 2`` for a unit ``(r_x, r_z)``."""
    rx, rz = float(r[0]), float(r[1])
    if abs(math.hypot(rx, rz) - 1.0) > 1e-9:
        raise ValueError("Bloch vector must have unit length")
    return 0.5 * (np.eye(2) + rx * SIGMA_X + rz * SIGMA_Z)


def bloch(theta: float) -> tuple[float, float]:
    return math.sin(theta), math.cos(theta)


def schmidt_state(a: float) -> np.ndarray:
    """``a|00> + b|11>`` with ``b = sqrt(1 - a^2)``."""
    if not 0.0 <= a <= 1.0:
        raise ValueError("Schmidt coefficient must lie in [0, 1]")
    return np.array([a, 0.0, 0.0, math.sqrt(max(0.0, 1.0 - a * a))])


def pair_expectation(a: float, rA: Sequence[float], rB: Sequence[float]) -> float:
    """Closed-form ``<Psi| Pi^A (x) Pi^B |Psi>`` on ``a|00> + b|11>``."""
    if not 0.0 <= a <= 1.0:
        raise ValueError("Schmidt coefficient must lie in [0, 1]")
    b = math.sqrt(max(0.0, 1.0 - a * a))
    return 0.25 * (1 + 2 * a * b * rA[0] * rB[0] + rA[1] * rB[1]
                   + (2 * a * a - 1) * (rA[1] + rB[1]))


def behavior_from_realization(r: Realization, g: AnyGraph | None = None) -> np.ndarray:
    r.check(g)
    da, db = r.dims
    psi = r.state.reshape(da, db)
    p = np.empty(r.n)
    for i in range(r.n):
        p[i] = np.real(np.vdot(psi, r.proj_a[i] @ psi @ r.proj_b[i].T))
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
        raise RealizationError("behavior entry outside [0, 1]")
    return np.clip(p, 0.0, 1.0)


def qubit_realization(angles_a: Sequence[float], angles_b: Sequence[float], a: float,
                      meta: dict | None = None) -> Realization:
    pa = [bloch_projector(bloch(t)) for t in angles_a]
    pb = [bloch_projector(bloch(t)) for t in angles_b]
    return Realization((2, 2), schmidt_state(a), pa, pb, dict(meta or {}))


# -- ansatz families ---------------------------------------------------------

def chsh_angles(gamma: float, delta: float) -> tuple[list[float], list[float]]:
    """Bloch angles of the CHSH-graph layout; edges pair antipodal vectors."""
    pi = math.pi
    ang_b = [pi - gamma, -gamma, pi / 2 - delta, 3 * pi / 2 - delta,
             -gamma, pi - gamma, 3 * pi / 2 - delta, pi / 2 - delta]
    ang_a = [pi + gamma, 3 * pi / 2 + delta, pi / 2 + delta, pi + gamma,
             gamma, pi / 2 + delta, 3 * pi / 2 + delta, gamma]
    return ang_a, ang_b


def chsh_interpolation(eps: float, s: float = 0.63, t: float = 0.63,
                       a_end: float = A_P1, gamma_end: float = GAMMA_P1,
                       delta_end: float = DELTA_P1) -> Realization:
    """Qubit realization on the CHSH graph moving from the CHSH optimum (eps=0)
    to the first pentagonal optimum (eps=1)."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if s <= 0 or t <= 0:
        raise ValueError("s and t must be positive")
    es, et = eps ** s, eps ** t
    a = (1 - es) / math.sqrt(2) + es * a_end
    gamma = (1 - et) * math.pi / 8 + et * gamma_end
    delta = (1 - et) * math.pi / 8 + et * delta_end
    ang_a, ang_b = chsh_angles(gamma, delta)
    return qubit_realization(ang_a, ang_b, a, {"ansatz": "chsh", "eps": eps, "s": s, "t": t,
                                               "a": a, "gamma": gamma, "delta": delta})


def refine_chsh_endpoint(w: Sequence[float]) -> tuple[float, float, float]:
    """Locally improve ``(a, gamma, delta)`` for weights ``w`` from the printed values."""
    def neg(x):
        a = min(1.0, max(0.0, x[0]))
        return -qubit_realization(*chsh_angles(x[1], x[2]), a).value(w)

    res = minimize(neg, [A_P1, GAMMA_P1, DELTA_P1], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    return float(res.x[0]), float(res.x[1]), float(res.x[2])


def default_441111_s(eps: float) -> float:
    """Schmidt detuning profile: zero at both ends, 0.027 at eps = 1/2."""
    return 0.108 * eps * (1 - eps)


def g441111_interpolation(eps: float, t: float = 1.0, s: float | None = None) -> Realization:
    """Qubit realization on 44,1111: Bob vectors 6, 7 turn by ``+gamma`` and every
    other vector by ``-gamma``, ``gamma = eps^t pi/8``; ``a = (1-s)/sqrt2``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    s = default_441111_s(eps) if s is None else s
    rot = eps ** t * math.pi / 8
    ang_a, ang_b = chsh_angles(math.pi / 8, math.pi / 8)
    ang_a = [x - rot for x in ang_a]
    ang_b = [x + rot if i in (6, 7) else x - rot for i, x in enumerate(ang_b)]
    a = (1 - s) / math.sqrt(2)
    return qubit_realization(ang_a, ang_b, a, {"ansatz": "44,1111", "eps": eps,
                                               "t": t, "s": s, "rotation": rot})


# -- qutrit branch for 33,33 -------------------------------------------------

def _two_coloring(n: int, edges, skip=()) -> list[tuple[int, int]]:
    """(component, color) per vertex for a bipartite party graph; skipped vertices
    get component -1."""
    adj = {v: [] for v in range(n)}
    for i, j in edges:
        if i in skip or j in skip:
            continue
        adj[i].append(j)
        adj[j].append(i)
    out: list[tuple[int, int] | None] = [None] * n
    comp = 0
    for v in range(n):
        if v in skip:
            out[v] = (-1, 0)
            continue
        if out[v] is not None:
            continue
        out[v] = (comp, 0)
        stack = [v]
        while stack:
            u = stack.pop()
            for x in adj[u]:
                if out[x] is None:
                    out[x] = (comp, 1 - out[u][1])
                    stack.append(x)
                elif out[x][1] == out[u][1]:
                    raise RealizationError("party graph is not bipartite; no qubit layout")
        comp += 1
    return out  # type: ignore[return-value]


def _qubit_ket(theta: float, d: int) -> np.ndarray:
    v = np.zeros(d)
    v[0], v[1] = math.cos(theta / 2), math.sin(theta / 2)
    return v


class _QutritLayout:
    """Parametrised realizations of 33,33 with ``Pi_1^A = |2><2|``."""

    def __init__(self, g: ColoredGraph):
        self.g = g
        self.col_a = _two_coloring(g.n, g.edges_a, skip=(1,))
        self.col_b = _two_coloring(g.n, g.edges_b)
        self.na = 1 + max(c for c, _ in self.col_a)
        self.nb = 1 + max(c for c, _ in self.col_b)
        self.size = self.na + self.nb + 6

    def build(self, x: np.ndarray) -> Realization:
        ta, tb, psi = x[:self.na], x[self.na:self.na + self.nb], x[self.na + self.nb:]
        pa, pb = [], []
        for c, k in self.col_a:
            v = np.array([0.0, 0.0, 1.0]) if c < 0 else _qubit_ket(ta[c] + math.pi * k, 3)
            pa.append(np.outer(v, v))
        for c, k in self.col_b:
            v = _qubit_ket(tb[c] + math.pi * k, 2)
            pb.append(np.outer(v, v))
        psi = np.asarray(psi, float) / np.linalg.norm(psi)
        return Realization((3, 2), psi, pa, pb, {"ansatz": "33,33-qutrit"})

    def optimize(self, w, x0: np.ndarray) -> tuple[float, np.ndarray]:
        res = minimize(lambda x: -self.build(x).value(w), x0, method="BFGS",
                       options={"gtol": 1e-10, "maxiter": 2000})
        return -float(res.fun), res.x


@dataclass
class _QutritCache:
    x1: np.ndarray | None = None


_qutrit_cache = _QutritCache()


def _fig4_weights(eps: float) -> np.ndarray:
    w = np.full(8, (1 - eps) / 8)
    w[2:7] += eps / 5
    return w


def g3333_qutrit_point(eps: float, w: Sequence[float] | None = None) -> Realization:
    """Qutrit-qubit realization of 33,33 with Alice's vertex-1 projector ``|2><2|``.

    The remaining projectors are qubit projectors embedded in the first two
    levels; their angles and the shared state are optimised for the weights
    (default: the pentagonal path at ``eps``) starting from the optimum at
    ``eps = 1``, which is found from a fixed set of starting points.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    g = as_colored(builtin("33,33"))
    lay = _QutritLayout(g)
    if _qutrit_cache.x1 is None:
        rng = np.random.default_rng(0)
        best = (-np.inf, None)
        for _ in range(12):
            x0 = np.concatenate([rng.uniform(0, 2 * math.pi, lay.na + lay.nb),
                                 rng.normal(size=6)])
            val, x = lay.optimize(_fig4_weights(1.0), x0)
            if val > best[0] + 1e-12:
                best = (val, x)
        _qutrit_cache.x1 = best[1]
    w = _fig4_weights(eps) if w is None else np.asarray(w, float)
    x = _qutrit_cache.x1
    if eps < 1.0 or not np.allclose(w, _fig4_weights(1.0)):
        _, x = lay.optimize(w, x)
    r = lay.build(x)
    r.meta["eps"] = eps
    return r


# -- seesaw ------------------------------------------------------------------

def _color_party(n: int, edges, d: int, rng=None) -> list[int]:
    """Proper coloring with at most d colors (exact backtracking).

    With ``rng`` the colors are tried in a random order at each vertex.
    """
    adj = [set() for _ in range(n)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    order = sorted(range(n), key=lambda v: -len(adj[v]))
    col = [-1] * n

    def rec(k):
        if k == n:
            return True
        v = order[k]
        used = {col[u] for u in adj[v]}
        for c in (range(d) if rng is None else rng.permutation(d)):
            if c not in used:
                col[v] = c
                if rec(k + 1):
                    return True
        col[v] = -1
        return False

    if not rec(0):
        return []
    return col


def _components(n: int, edges) -> list[int]:
    parent = list(range(n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, j in edges:
        parent[find(i)] = find(j)
    return [find(v) for v in range(n)]


@dataclass
class SeesawResult:
    value: float
    realization: Realization
    history: list[float]
    restarts: list[float]


def _random_frame(rng, d, cplx):
    m = rng.normal(size=(d, d))
    if cplx:
        m = m + 1j * rng.normal(size=(d, d))
    q, _ = np.linalg.qr(m)
    return q


def _complement_projection(v: np.ndarray, others: list[np.ndarray]) -> np.ndarray:
    if not others:
        return v
    # rank-revealing basis: neighbours may repeat a direction
    u, sv, _ = np.linalg.svd(np.array(others).T, full_matrices=False)
    q = u[:, sv > 1e-10 * max(1.0, sv.max(initial=0.0))]
    return v - q @ (q.conj().T @ v)


def seesaw(g: AnyGraph, w: Sequence[float], dims: tuple[int, int] = (2, 2), seed: int = 0,
           iters: int = 300, restarts: int = 8, tol: float = 1e-12,
           complex_: bool = False) -> SeesawResult:
    """Alternating maximisation over rank-1 projectors and the shared state.

    Each restart starts from per-component orthonormal frames assigned by a
    proper coloring of each party graph.  A sweep then sets the state to the
    top eigenvector of ``sum_i w_i Pi_i`` and moves each vertex vector to the
    best direction orthogonal to its current same-party neighbours, so every
    iterate is an exact orthogonal labeling and the objective never decreases.
    """
    g = as_colored(g)
    w = np.asarray(w, float)
    n = g.n
    da, db = int(dims[0]), int(dims[1])
    comps, nbrs = {}, {}
    for party, d in (("A", da), ("B", db)):
        edges = g.edges(party)
        if not _color_party(n, edges, d):
            comp = _components(n, edges)
            for root in sorted(set(comp)):
                members = [v for v in range(n) if comp[v] == root]
                if not _color_party(n, [e for e in edges if comp[e[0]] == root], d):
                    raise RealizationError(
                        f"party {party} component {members} needs more than {d} "
                        f"dimensions for an orthogonal labeling")
        comps[party] = _components(n, edges)
        nbrs[party] = [[j for j in range(n) if (min(i, j), max(i, j)) in edges]
                       for i in range(n)]
    groups = {party: [[i for i in range(n) if comps[party][i] == r]
                      for r in sorted(set(comps[party]))] for party in ("A", "B")}
    rng = np.random.default_rng(seed)
    best = None
    finals = []
    for _ in range(max(1, restarts)):
        vecs = {}
        for party, d in (("A", da), ("B", db)):
            frames = {r: _random_frame(rng, d, complex_) for r in set(comps[party])}
            col = _color_party(n, g.edges(party), d, rng)
            vecs[party] = [frames[comps[party][i]][:, col[i]].copy() for i in range(n)]
        hist = []
        psi = None
        for _ in range(iters):
            op = sum(w[i] * np.kron(np.outer(vecs["A"][i], vecs["A"][i].conj()),
                                    np.outer(vecs["B"][i], vecs["B"][i].conj()))
                     for i in range(n))
            lam, U = np.linalg.eigh(op)
            psi = U[:, -1]
            Psi = psi.reshape(da, db)
            for party in ("A", "B"):
                for members in groups[party]:
                    _rotate_component(vecs, party, members, Psi, w)
            for i in range(n):
                _move_vertex(vecs, "A", i, Psi @ vecs["B"][i].conj(), nbrs["A"][i])
                _move_vertex(vecs, "B", i, Psi.T @ vecs["A"][i].conj(), nbrs["B"][i])
            val = float(sum(w[i] * abs(np.vdot(np.kron(vecs["A"][i], vecs["B"][i]), psi)) ** 2
                            for i in range(n)))
            hist.append(val)
            if len(hist) > 5 and hist[-1] - hist[-6] < tol:
                break
        real = Realization((da, db), psi, [np.outer(v, v.conj()) for v in vecs["A"]],
                           [np.outer(v, v.conj()) for v in vecs["B"]],
                           {"ansatz": "seesaw", "seed": seed})
        _polish(real)
        val = real.value(w, g)
        finals.append(val)
        if best is None or val > best[0]:
            best = (val, real, hist)
    return SeesawResult(best[0], best[1], best[2], finals)


def _targets(vecs, party, i, Psi):
    if party == "A":
        return Psi @ vecs["B"][i].conj()
    return Psi.T @ vecs["A"][i].conj()


def _rotate_component(vecs, party, members, Psi, w) -> None:
    """Rigid unitary move of one component, the maximiser of the objective's
    linearisation (a polar factor); orthogonality is preserved exactly."""
    G = 0
    for i in members:
        t = _targets(vecs, party, i, Psi)
        u = vecs[party][i]
        G = G + w[i] * np.outer(t * np.vdot(t, u), u.conj())
    if np.isscalar(G) or np.abs(G).max() < 1e-15:
        return
    W, _, Vh = np.linalg.svd(G)
    U = W @ Vh
    for i in members:
        vecs[party][i] = U @ vecs[party][i]


def _move_vertex(vecs, party, i, target, neighbours) -> None:
    """Best direction for one vertex orthogonal to its current neighbours."""
    v = _complement_projection(target, [vecs[party][j] for j in neighbours])
    nrm = np.linalg.norm(v)
    # a target inside the neighbours' span leaves only round-off; keep the vertex
    if nrm <= 1e-9 * max(1.0, float(np.linalg.norm(target))):
        return
    # nearly parallel neighbours make the projection ill-conditioned; never step down
    if nrm >= abs(np.vdot(vecs[party][i], target)):
        vecs[party][i] = v / nrm


def _polish(r: Realization) -> None:
    """Renormalize the state exactly after eigen-solver round-off."""
    r.state = r.state / np.linalg.norm(r.state)


# -- dilation and purification -------------------------------------------------

def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    lam, U = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (U * np.sqrt(np.clip(lam, 0, None))) @ U.conj().T


@dataclass
class DilationReport:
    unitarity_error: float
    projector_error: float
    statistics_error: float
    probabilities: tuple[float, float]

    def ok(self, tol: float = 1e-10) -> bool:
        return max(self.unitarity_error, self.projector_error, self.statistics_error) <= tol


def naimark_dilate(povm: Sequence[np.ndarray], rho: np.ndarray
                   ) -> tuple[list[np.ndarray], np.ndarray, DilationReport]:
    """Dilate a two-outcome POVM on C^d to projectors on C^d (x) C^2.

    Uses ``U = [[sqrt(pi0), sqrt(pi1)], [sqrt(pi1), -sqrt(pi0)]]`` (ancilla-major
    blocks) and ``Pi_i = U^dag (1 (x) |i><i|) U``; the state is ``rho (x) |0><0|``.
    """
    if len(povm) != 2:
        raise ValueError("only two-outcome POVMs are supported")
    p0, p1 = (np.asarray(p) for p in povm)
    d = p0.shape[0]
    rho = np.asarray(rho)
    if np.abs(p0 + p1 - np.eye(d)).max() > 1e-10:
        raise ValueError("POVM effects must sum to the identity")
    for p in (p0, p1):
        if np.linalg.eigvalsh(0.5 * (p + p.conj().T)).min() < -1e-10:
            raise ValueError("POVM effects must be PSD")
    s0, s1 = _psd_sqrt(p0), _psd_sqrt(p1)
    # system (x) ancilla ordering: index = sys * 2 + anc
    U = np.zeros((2 * d, 2 * d), dtype=np.result_type(s0, s1, float))
    blocks = {(0, 0): s0, (0, 1): s1, (1, 0): s1, (1, 1): -s0}
    for (j, i), blk in blocks.items():
        U[j::2, i::2] = blk
    projs = []
    for i in range(2):
        e = np.zeros((2, 2))
        e[i, i] = 1.0
        projs.append(U.conj().T @ np.kron(np.eye(d), e) @ U)
    anc0 = np.zeros((2, 2))
    anc0[0, 0] = 1.0
    big = np.kron(rho, anc0)
    probs = tuple(float(np.real(np.trace(P @ big))) for P in projs)
    want = (float(np.real(np.trace(p0 @ rho))), float(np.real(np.trace(p1 @ rho))))
    report = DilationReport(
        unitarity_error=float(np.abs(U.conj().T @ U - np.eye(2 * d)).max()),
        projector_error=float(max(np.abs(P @ P - P).max() for P in projs)),
        statistics_error=float(max(abs(a - b) for a, b in zip(probs, want))),
        probabilities=probs)
    return projs, big, report


def purify(rho: np.ndarray) -> np.ndarray:
    """``sum_n sqrt(p_n) |n>_S |n>_R`` from the eigendecomposition of ``rho``."""
    rho = np.asarray(rho)
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise ValueError("density matrix must be hermitian")
    lam, U = np.linalg.eigh(rho)
    if lam.min() < -1e-10 or abs(lam.sum() - 1) > 1e-10:
        raise ValueError("density matrix must be PSD with unit trace")
    order = np.argsort(lam)[::-1]
    lam, U = np.clip(lam[order], 0, None), U[:, order]
    d = rho.shape[0]
    out = np.zeros(d * d, dtype=U.dtype)
    for k in range(d):
        out += math.sqrt(lam[k]) * np.kron(U[:, k], np.eye(d)[k])
    return out


def partial_trace_second(psi: np.ndarray, d1: int, d2: int) -> np.ndarray:
    m = np.asarray(psi).reshape(d1, d2)
    return m @ m.conj().T
