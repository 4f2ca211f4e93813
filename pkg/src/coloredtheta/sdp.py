"""Dense block SDP solver: infeasible primal-dual path following, HKM direction,
Mehrotra predictor-corrector.

Problems are stated in the standard primal form

    maximize   <C, X>
    subject to <A_k, X> = b_k,  k = 0..m-1
               X = diag(X_1, ..., X_q) PSD

with dual ``minimize b.y  s.t.  Z = sum_k y_k A_k - C  PSD``.  Constraint
matrices are symmetric and given by their upper-triangle entries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"
# stalled before reaching tol, best iterate still within ``NEAR_TOL``
NEAR_OPTIMAL = "near_optimal"
NEAR_TOL = 1e-6


class SolverError(RuntimeError):
    """Raised by callers that need an optimal solve and did not get one."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


@dataclass
class SdpProblem:
    """Standard-form SDP with sparse symmetric constraint matrices.

    ``entries`` is an array of rows ``(k, block, i, j, value)`` with ``i <= j``;
    ``c_entries`` holds the objective the same way without the ``k`` column.
    """

    block_sizes: tuple[int, ...]
    b: np.ndarray
    entries: np.ndarray
    c_entries: np.ndarray

    def __post_init__(self):
        self.block_sizes = tuple(int(s) for s in self.block_sizes)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.entries = np.asarray(self.entries, dtype=float).reshape(-1, 5)
        self.c_entries = np.asarray(self.c_entries, dtype=float).reshape(-1, 4)
        for arr, off in ((self.entries, 1), (self.c_entries, 0)):
            if len(arr):
                blk = arr[:, off].astype(int)
                i, j = arr[:, off + 1].astype(int), arr[:, off + 2].astype(int)
                sizes = np.array(self.block_sizes)[blk]
                if np.any(i > j) or np.any(i < 0) or np.any(j >= sizes):
                    raise ValueError("entries must be upper-triangle and in range")
        if len(self.entries):
            k = self.entries[:, 0].astype(int)
            if k.min() < 0 or k.max() >= len(self.b):
                raise ValueError("constraint index out of range")

    @property
    def m(self) -> int:
        return len(self.b)

    @classmethod
    def from_dense(cls, C: Sequence[np.ndarray], A: Sequence[Sequence[np.ndarray]],
                   b: Sequence[float]) -> "SdpProblem":
        """Build from dense blocks: ``C[blk]`` and ``A[k][blk]``."""
        sizes = [np.asarray(c).shape[0] for c in C]
        ent, cent = [], []
        for blk, c in enumerate(C):
            c = np.asarray(c, dtype=float)
            for i, j in zip(*np.nonzero(np.triu(c))):
                cent.append((blk, i, j, c[i, j]))
        for k, ak in enumerate(A):
            for blk, a in enumerate(ak):
                a = np.asarray(a, dtype=float)
                if np.abs(a - a.T).max(initial=0) > 1e-12:
                    raise ValueError(f"constraint {k} block {blk} is not symmetric")
                for i, j in zip(*np.nonzero(np.triu(a))):
                    ent.append((k, blk, i, j, a[i, j]))
        return cls(tuple(sizes), np.asarray(b, float), np.array(ent).reshape(-1, 5),
                   np.array(cent).reshape(-1, 4))

    def constraint_matrix(self, k: int) -> list[np.ndarray]:
        out = [np.zeros((s, s)) for s in self.block_sizes]
        for _, blk, i, j, v in self.entries[self.entries[:, 0] == k]:
            out[int(blk)][int(i), int(j)] += v
            if i != j:
                out[int(blk)][int(j), int(i)] += v
        return out

    def objective_matrix(self) -> list[np.ndarray]:
        out = [np.zeros((s, s)) for s in self.block_sizes]
        for blk, i, j, v in self.c_entries:
            out[int(blk)][int(i), int(j)] += v
            if i != j:
                out[int(blk)][int(j), int(i)] += v
        return out


def lmi_problem(block_sizes: Sequence[int], f0: np.ndarray, f_entries: np.ndarray,
                c: np.ndarray) -> SdpProblem:
    """Standard form of ``maximize c.y  s.t.  F0 + sum_v y_v F_v PSD``.

    ``f0`` rows are ``(block, i, j, value)``, ``f_entries`` rows ``(v, block, i, j,
    value)``.  The LMI optimum equals ``-dual_objective`` of the returned
    problem, and any primal-feasible X certifies ``-<C,X>`` as an upper bound.
    """
    f0 = np.asarray(f0, float).reshape(-1, 4)
    c_entries = f0.copy()
    c_entries[:, 3] *= -1.0
    return SdpProblem(tuple(block_sizes), -np.asarray(c, float), f_entries, c_entries)


@dataclass
class SdpSolution:
    status: str
    X: list[np.ndarray]
    y: np.ndarray
    Z: list[np.ndarray]
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    history: list[dict] = field(default_factory=list, repr=False)

    @property
    def objective(self) -> float:
        return 0.5 * (self.primal_objective + self.dual_objective)

    @property
    def S(self) -> list[np.ndarray]:
        return self.Z

    @property
    def optimal(self) -> bool:
        return self.status in (OPTIMAL, NEAR_OPTIMAL)


class _Operator:
    """Presolved constraint data in a form the iteration can use quickly."""

    def __init__(self, p: SdpProblem):
        self.sizes = p.block_sizes
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        ent = p.entries
        b = p.b.copy()
        keep, self.duplicates = self._dedupe(ent, b)
        if self.inconsistent:
            self.keep = keep
            return
        self.keep = keep
        remap = -np.ones(p.m, dtype=int)
        remap[keep] = np.arange(len(keep))
        ent = ent[np.isin(ent[:, 0].astype(int), keep)]
        k = remap[ent[:, 0].astype(int)]
        self.b = b[keep]
        self.m = len(keep)
        # full symmetric position lists per block, sorted by constraint
        self.blocks = []
        for blk, n in enumerate(self.sizes):
            sel = ent[:, 1].astype(int) == blk
            kk, ii, jj, vv = k[sel], ent[sel, 2].astype(int), ent[sel, 3].astype(int), ent[sel, 4]
            off = ii != jj
            kk2 = np.concatenate([kk, kk[off]])
            ii2 = np.concatenate([ii, jj[off]])
            jj2 = np.concatenate([jj, ii[off]])
            vv2 = np.concatenate([vv, vv[off]])
            order = np.lexsort((jj2, ii2, kk2))
            kk2, ii2, jj2, vv2 = kk2[order], ii2[order], jj2[order], vv2[order]
            flat = ii2 * n + jj2
            mat = sps.csr_matrix((vv2, (np.arange(len(vv2)), kk2)), shape=(len(vv2), self.m))
            self.blocks.append(dict(k=kk2, i=ii2, j=jj2, v=vv2, flat=flat, S=mat, n=n))
        self.C = [np.zeros((n, n)) for n in self.sizes]
        for blk, i, j, v in p.c_entries:
            self.C[int(blk)][int(i), int(j)] += v
            if i != j:
                self.C[int(blk)][int(j), int(i)] += v

    def _dedupe(self, ent, b):
        """Drop exact duplicate constraints; flag contradictory ones."""
        self.inconsistent = False
        rows: dict[int, list] = {}
        for row in ent:
            rows.setdefault(int(row[0]), []).append(tuple(row[1:]))
        seen: dict[tuple, int] = {}
        keep = []
        dups = 0
        for k in range(len(b)):
            key = tuple(sorted(rows.get(k, ())))
            scale = max((abs(r[3]) for r in key), default=0.0)
            if scale == 0.0:
                if abs(b[k]) > 0:
                    self.inconsistent = True
                dups += 1
                continue
            norm = tuple((r[0], r[1], r[2], round(r[3] / scale, 14)) for r in key)
            if norm in seen:
                k0 = seen[norm]
                scale0 = max(abs(r[3]) for r in tuple(sorted(rows[k0])))
                if abs(b[k] / scale - b[k0] / scale0) > 1e-12 * (1 + abs(b[k0] / scale0)):
                    self.inconsistent = True
                dups += 1
                continue
            seen[norm] = k
            keep.append(k)
        return np.array(keep, dtype=int), dups

    def apply(self, X: list[np.ndarray]) -> np.ndarray:
        """A(X)_k = <A_k, X>."""
        out = np.zeros(self.m)
        for blk, x in zip(self.blocks, X):
            if len(blk["v"]):
                out += np.bincount(blk["k"], weights=blk["v"] * x.ravel()[blk["flat"]],
                                   minlength=self.m)
        return out

    def adjoint(self, y: np.ndarray) -> list[np.ndarray]:
        """A^T(y) = sum_k y_k A_k."""
        out = []
        for blk in self.blocks:
            n = blk["n"]
            if len(blk["v"]):
                flat = np.bincount(blk["flat"], weights=blk["v"] * y[blk["k"]], minlength=n * n)
                out.append(flat.reshape(n, n))
            else:
                out.append(np.zeros((n, n)))
        return out

    def schur(self, X: list[np.ndarray], Zi: list[np.ndarray], chunk_elems: int = 4_000_000
              ) -> np.ndarray:
        """M_kl = sum_blocks tr(A_k X A_l Z^-1)."""
        M = np.zeros((self.m, self.m))
        for blk, x, zi in zip(self.blocks, X, Zi):
            npos = len(blk["v"])
            if npos == 0:
                continue
            ii, jj, vv, kk, S = blk["i"], blk["j"], blk["v"], blk["k"], blk["S"]
            step = max(1, chunk_elems // npos)
            for lo in range(0, npos, step):
                hi = min(npos, lo + step)
                # K[p, q] = v_p v_q X[j_p, i_q] Zi[i_p, j_q]
                K = x[np.ix_(jj[lo:hi], ii)]
                K *= zi[np.ix_(ii[lo:hi], jj)]
                K *= vv[lo:hi, None]
                KS = (S.T @ K.T).T  # (chunk, m), v_q folded in by S
                k_lo, k_hi = kk[lo], kk[hi - 1]
                rows = sps.csr_matrix(
                    (np.ones(hi - lo), (kk[lo:hi] - k_lo, np.arange(hi - lo))),
                    shape=(k_hi - k_lo + 1, hi - lo))
                M[k_lo:k_hi + 1] += rows @ KS
        return 0.5 * (M + M.T)


def _inner(A: list[np.ndarray], B: list[np.ndarray]) -> float:
    return float(sum(np.vdot(a, b) for a, b in zip(A, B)))


def _fro(A: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(np.vdot(a, a) for a in A)))


def _max_step(X: list[np.ndarray], dX: list[np.ndarray]) -> float:
    """Largest alpha <= inf with X + alpha dX PSD (X must be PD)."""
    alpha = np.inf
    for x, dx in zip(X, dX):
        L = np.linalg.cholesky(x)
        Li = sla.solve_triangular(L, np.eye(len(x)), lower=True)
        W = Li @ dx @ Li.T
        lam = np.linalg.eigvalsh(0.5 * (W + W.T)).min()
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def solve(p: SdpProblem, tol: float = 1e-8, max_iter: int = 100, verbose: bool = False
          ) -> SdpSolution:
    """Solve ``p``; ``status == "optimal"`` means relative residuals and gap <= tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    op = _Operator(p)
    sizes = p.block_sizes
    ntot = sum(sizes)
    eye = [np.eye(n) for n in sizes]
    if op.inconsistent:
        return SdpSolution(INFEASIBLE, eye, np.zeros(p.m), eye, np.nan, np.nan,
                           np.inf, np.nan, np.nan, 0)

    b, C = op.b, op.C
    bnorm = 1.0 + np.linalg.norm(b)
    cnorm = 1.0 + _fro(C)
    amax = 0.0
    for blk in op.blocks:
        if len(blk["v"]):
            amax = max(amax, float(np.sqrt(np.bincount(blk["k"], blk["v"] ** 2)).max()))
    tau = 1.0 + np.abs(b).max(initial=0.0) + amax
    X = [tau * e for e in eye]
    Z = [tau * e for e in eye]
    y = np.zeros(op.m)
    history = []
    status = MAX_ITER
    best = None
    best_merit = np.inf

    def pack(status, it):
        yfull = np.zeros(p.m)
        yfull[op.keep] = y
        pobj, dobj = _inner(C, X), float(b @ y)
        return SdpSolution(status, X, yfull, Z, pobj, dobj, pinf, dinf,
                           abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj)), it, history)

    for it in range(max_iter + 1):
        Rp = b - op.apply(X)
        ATy = op.adjoint(y)
        Rd = [c + z - a for c, z, a in zip(C, Z, ATy)]
        pinf = np.linalg.norm(Rp) / bnorm
        dinf = _fro(Rd) / cnorm
        pobj, dobj = _inner(C, X), float(b @ y)
        mu = _inner(X, Z) / ntot
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        history.append(dict(iteration=it, pobj=pobj, dobj=dobj, pinf=pinf, dinf=dinf,
                            mu=mu, xz=_inner(X, Z),
                            identity=_inner(Rd, X) - float(Rp @ y) - _inner(X, Z)))
        if verbose:
            log.info("it %3d pobj %+.10e dobj %+.10e pinf %.2e dinf %.2e gap %.2e",
                     it, pobj, dobj, pinf, dinf, relgap)
        if pinf <= tol and dinf <= tol and relgap <= tol:
            status = OPTIMAL
            break
        # infeasibility certificates: rays with A^T y = Z PSD, b.y < 0 (primal) or
        # A(X) = 0, <C,X> > 0 (dual)
        if dobj < 0 and it > 5:
            ray = _fro([z - a for z, a in zip(Z, ATy)]) / abs(dobj)
            if ray * cnorm < tol and abs(dobj) > 1e6 * (1 + _fro(C)):
                status = INFEASIBLE
                break
        if pobj > 0 and it > 5:
            ray = np.linalg.norm(op.apply(X)) / pobj
            if ray < tol and pobj > 1e6 * bnorm:
                status = DUAL_INFEASIBLE
                break
        merit = max(pinf, dinf, relgap)
        if merit < best_merit:
            best_merit = merit
            best = (it, [x.copy() for x in X], y.copy(), [z.copy() for z in Z], pinf, dinf)
        elif it - best[0] >= 6:
            log.info("no progress since iteration %d", best[0])
            status = NUMERICAL_FAILURE
            break
        if it == max_iter:
            break

        try:
            Zi = [np.linalg.inv(z) for z in Z]
            Zi = [0.5 * (z + z.T) for z in Zi]
            M = op.schur(X, Zi)
            try:
                factor = sla.cho_factor(M, lower=True, check_finite=True)
                msolve0 = lambda r: sla.cho_solve(factor, r)
            except np.linalg.LinAlgError:
                reg = 1e-12 * max(1.0, np.abs(np.diag(M)).max())
                lu = sla.lu_factor(M + reg * np.eye(op.m))
                msolve0 = lambda r: sla.lu_solve(lu, r)

            def msolve(r, M=M, msolve0=msolve0):
                # one step of iterative refinement
                d = msolve0(r)
                return d + msolve0(r - M @ d)
        except (np.linalg.LinAlgError, ValueError) as exc:
            log.warning("schur factorization failed at iteration %d: %s", it, exc)
            status = NUMERICAL_FAILURE
            break

        def direction(R):
            # R: target complementarity minus XZ (per block, not symmetric)
            G = [(r + x @ rd) @ zi for r, x, rd, zi in zip(R, X, Rd, Zi)]
            G = [0.5 * (g + g.T) for g in G]
            dy = msolve(op.apply(G) - Rp)
            dZ = [a - rd for a, rd in zip(op.adjoint(dy), Rd)]
            dX = [(r - x @ dz) @ zi for r, x, dz, zi in zip(R, X, dZ, Zi)]
            dX = [0.5 * (d + d.T) for d in dX]
            return dX, dy, dZ

        XZ = [x @ z for x, z in zip(X, Z)]
        dXa, dya, dZa = direction([-xz for xz in XZ])
        try:
            ap = min(1.0, _max_step(X, dXa))
            ad = min(1.0, _max_step(Z, dZa))
        except np.linalg.LinAlgError:
            status = NUMERICAL_FAILURE
            break
        mu_aff = _inner([x + ap * d for x, d in zip(X, dXa)],
                        [z + ad * d for z, d in zip(Z, dZa)]) / ntot
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        R = [sigma * mu * e - xz - dx @ dz for e, xz, dx, dz in zip(eye, XZ, dXa, dZa)]
        dX, dy, dZ = direction(R)
        if not all(np.all(np.isfinite(d)) for d in dX + dZ) or not np.all(np.isfinite(dy)):
            status = NUMERICAL_FAILURE
            break
        try:
            ap = _max_step(X, dX)
            ad = _max_step(Z, dZ)
        except np.linalg.LinAlgError:
            status = NUMERICAL_FAILURE
            break
        gamma = 0.9 + 0.09 * min(1.0, ap, ad)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        X = [x + ap * d for x, d in zip(X, dX)]
        Z = [z + ad * d for z, d in zip(Z, dZ)]
        y = y + ad * dy
        X = [0.5 * (x + x.T) for x in X]
        Z = [0.5 * (z + z.T) for z in Z]
    else:  # pragma: no cover - loop always breaks
        pass

    if status in (NUMERICAL_FAILURE, MAX_ITER) and best is not None and best_merit <= NEAR_TOL:
        # stalled at the accuracy floor: report the best iterate seen
        it, X, y, Z, pinf, dinf = best
        status = NEAR_OPTIMAL
        log.info("solver stalled near optimum (merit %.2e)", best_merit)
    return pack(status, it)


def feasibility(p: SdpProblem, tol: float = 1e-8, max_iter: int = 100
                ) -> tuple[bool, SdpSolution]:
    """Solve with the objective dropped; True iff the residuals reach ``tol``."""
    q = SdpProblem(p.block_sizes, p.b, p.entries, np.zeros((0, 4)))
    sol = solve(q, tol=tol, max_iter=max_iter)
    ok = sol.status == OPTIMAL or (sol.primal_residual <= tol and sol.status != INFEASIBLE)
    return bool(ok), sol


def write_sparse(p: SdpProblem, path: str | Path) -> None:
    """Dump in SDPA sparse layout (1-based).

    Lines: ``m``, ``nblocks``, block sizes, ``b``; then one line per nonzero
    ``k block row col value`` with ``k = 0`` for the objective.  SDPA minimizes
    ``c.x`` with ``sum F_k x_k - F_0 PSD``; our ``A_k`` play ``F_k``, ``C`` is ``F_0``
    and ``b`` is ``c``, so the dump is the dual of this problem in SDPA's sense.
    """
    lines = [str(p.m), str(len(p.block_sizes)), " ".join(map(str, p.block_sizes)),
             " ".join(repr(float(v)) for v in p.b)]
    for blk, i, j, v in p.c_entries:
        lines.append(f"0 {int(blk) + 1} {int(i) + 1} {int(j) + 1} {float(v)!r}")
    for k, blk, i, j, v in p.entries:
        lines.append(f"{int(k) + 1} {int(blk) + 1} {int(i) + 1} {int(j) + 1} {float(v)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sparse(path: str | Path) -> SdpProblem:
    rows = [ln.split() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    m = int(rows[0][0])
    sizes = tuple(int(s) for s in rows[2])
    b = np.array([float(v) for v in rows[3]])
    ent, cent = [], []
    for r in rows[4:]:
        k, blk, i, j, v = int(r[0]), int(r[1]) - 1, int(r[2]) - 1, int(r[3]) - 1, float(r[4])
        if k == 0:
            cent.append((blk, i, j, v))
        else:
            ent.append((k - 1, blk, i, j, v))
    assert len(b) == m
    return SdpProblem(sizes, b, np.array(ent).reshape(-1, 5), np.array(cent).reshape(-1, 4))
