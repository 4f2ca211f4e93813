"""Weighted Lovasz number and theta-body membership via the lifted moment matrix.

The lifted matrix ``M`` is indexed by ``0`` (the handle) and ``1..n`` (the
vertices): ``M_00 = 1``, ``M_0i = M_ii = P_i``, ``M_ij = 0`` on edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graphs import AnyGraph, shadow
from .sdp import SdpProblem, SdpSolution, SolverError, lmi_problem, solve


class UndecidedError(RuntimeError):
    """Membership could not be decided within the tolerance band."""


@dataclass
class Behavior:
    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).reshape(-1)
        if np.any(self.p < -1e-12) or np.any(self.p > 1 + 1e-12):
            raise ValueError("behavior entries must lie in [0, 1]")
        self.p = np.clip(self.p, 0.0, 1.0)

    def __len__(self):
        return len(self.p)

    def value(self, w: Sequence[float]) -> float:
        return float(np.dot(w, self.p))


def _as_array(p) -> np.ndarray:
    return p.p if isinstance(p, Behavior) else np.asarray(p, dtype=float).reshape(-1)


def theta_problem(g: AnyGraph, w: Sequence[float]) -> SdpProblem:
    s = shadow(g)
    n = s.n
    w = np.asarray(w, dtype=float).reshape(-1)
    if len(w) != n:
        raise ValueError(f"expected {n} weights")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    ent = [(0, 0, 0, 0, 1.0)]
    b = [1.0]
    for i in range(1, n + 1):
        ent += [(i, 0, 0, i, 0.5), (i, 0, i, i, -1.0)]
        b.append(0.0)
    for k, (i, j) in enumerate(sorted(s.edges)):
        ent.append((n + 1 + k, 0, i + 1, j + 1, 1.0))
        b.append(0.0)
    cent = [(0, i + 1, i + 1, w[i]) for i in range(n) if w[i] != 0]
    return SdpProblem((n + 1,), np.array(b), np.array(ent), np.array(cent).reshape(-1, 4))


def solve_theta(g: AnyGraph, w: Sequence[float] | None = None, tol: float = 1e-8
                ) -> tuple[float, np.ndarray, SdpSolution]:
    """Return ``(value, M, solution)``; the value is the dual (upper) certificate."""
    n = shadow(g).n
    w = np.ones(n) if w is None else w
    sol = solve(theta_problem(g, w), tol=tol)
    if not sol.optimal:
        raise SolverError(f"theta SDP ended with status {sol.status}", sol)
    return sol.dual_objective, sol.X[0], sol


def theta(g: AnyGraph, w: Sequence[float] | None = None, tol: float = 1e-8) -> float:
    return solve_theta(g, w, tol)[0]


def membership_margin(p, g: AnyGraph, tol: float = 1e-9) -> tuple[float, float]:
    """Bounds ``(lower, upper)`` on ``max t`` with ``M(p) - t I`` PSD.

    ``lower`` comes from the solver's dual point, ``upper`` from its primal point.
    """
    s = shadow(g)
    n = s.n
    p = _as_array(p)
    if len(p) != n:
        raise ValueError("behavior length does not match the graph")
    f0 = [(0, 0, 0, 1.0)]
    for i in range(n):
        f0 += [(0, 0, i + 1, p[i]), (0, i + 1, i + 1, p[i])]
    free = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in s.edges]
    f = [(v, 0, i + 1, j + 1, 1.0) for v, (i, j) in enumerate(free)]
    t = len(free)
    f += [(t, 0, i, i, -1.0) for i in range(n + 1)]
    c = np.zeros(t + 1)
    c[t] = 1.0
    sol = solve(lmi_problem((n + 1,), np.array(f0), np.array(f), c), tol=tol)
    if not sol.optimal:
        raise SolverError(f"membership SDP ended with status {sol.status}", sol)
    return -sol.dual_objective, -sol.primal_objective


def theta_body_membership(p, g: AnyGraph, tol: float = 1e-7) -> bool:
    """True iff ``p`` lies in TH(G); raises UndecidedError inside the tolerance band."""
    arr = _as_array(p)
    if np.any(arr < -tol) or np.any(arr > 1 + tol):
        return False
    lower, upper = membership_margin(np.clip(arr, 0, 1), g)
    if lower >= -tol:
        return True
    if upper <= -tol:
        return False
    raise UndecidedError(f"margin bracket [{lower:.3e}, {upper:.3e}] straddles -{tol:g}")


def extract_orthonormal_representation(M: np.ndarray, tol: float = 1e-6
                                       ) -> tuple[np.ndarray, np.ndarray]:
    """Gram-factor a lifted matrix into a handle and unit vertex vectors.

    Vertices with ``M_ii`` below ``tol`` get a zero vector (an empty projector).
    """
    M = 0.5 * (np.asarray(M, float) + np.asarray(M, float).T)
    lam, U = np.linalg.eigh(M)
    if lam.min() < -tol:
        raise ValueError(f"matrix is not PSD (min eigenvalue {lam.min():.3e})")
    keep = lam > tol * max(1.0, lam.max()) * 1e-3
    G = (U[:, keep] * np.sqrt(lam[keep])).T  # columns reproduce M
    handle = G[:, 0] / np.linalg.norm(G[:, 0])
    vecs = G[:, 1:].T.copy()
    norms = np.linalg.norm(vecs, axis=1)
    for i, nrm in enumerate(norms):
        vecs[i] = vecs[i] / nrm if nrm > np.sqrt(tol) else 0.0
    return handle, vecs


def repair_orthogonality(g: AnyGraph, vectors: np.ndarray) -> np.ndarray:
    """Make adjacent vectors exactly orthogonal by projecting each vertex onto
    the complement of its already-processed neighbours."""
    s = shadow(g)
    out = np.array(vectors, dtype=float, copy=True)
    for j in range(s.n):
        prev = [i for i in range(j) if (i, j) in s.edges and np.linalg.norm(out[i]) > 0]
        if prev:
            u, sv, _ = np.linalg.svd(out[prev].T, full_matrices=False)
            Q = u[:, sv > 1e-10 * sv.max()]
            out[j] = out[j] - Q @ (Q.T @ out[j])
        nrm = np.linalg.norm(out[j])
        out[j] = out[j] / nrm if nrm > 1e-12 else 0.0
    return out


def orthogonality_residual(g: AnyGraph, vectors: np.ndarray) -> float:
    s = shadow(g)
    return max((abs(float(vectors[i] @ vectors[j])) for i, j in s.edges), default=0.0)


def representation_value(g: AnyGraph, w: Sequence[float], handle: np.ndarray,
                         vectors: np.ndarray) -> float:
    """Objective of an explicit orthonormal representation (a lower bound on theta
    once the labeling is exactly orthogonal)."""
    return float(np.dot(w, (vectors @ handle) ** 2))


def theta_lower_bound(g: AnyGraph, w: Sequence[float], tol: float = 1e-8
                      ) -> tuple[float, np.ndarray, np.ndarray]:
    """Explicit-realization lower bound from the solver's optimal matrix."""
    _, M, _ = solve_theta(g, w, tol)
    handle, vecs = extract_orthonormal_representation(M)
    vecs = repair_orthogonality(g, vecs)
    return representation_value(g, w, handle, vecs), handle, vecs
