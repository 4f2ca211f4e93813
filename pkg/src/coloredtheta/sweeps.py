"""Weight paths, bound sweeps, kink detection, separation search and report output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graphs import AnyGraph, ColoredGraph, as_colored, builtin, family_label, shadow
from .npa import parse_level, theta_colored_upper
from .realizations import (Realization, RealizationError, chsh_interpolation,
                           g3333_qutrit_point, g441111_interpolation, seesaw)
from .sdp import SolverError
from .theta import theta, theta_lower_bound

log = logging.getLogger(__name__)

DEFAULT_MASK = (0, 1, 7)
TABLE_KAPPA = (0.26, 0.18, 0.19, 0.13, 0.24)
QUTRIT_FROM = 0.85
# a qutrit may be needed on either side
SEPARATION_DIMS = ((2, 2), (3, 2), (2, 3))


@dataclass(frozen=True)
class WeightPath:
    """``(1 - eps) * uniform + eps * target``; the target lives off the mask."""

    kind: str = "fig4"
    kappa: tuple[float, ...] | None = None
    mask: tuple[int, ...] = DEFAULT_MASK
    n: int = 8
    target: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("fig4", "random_kappa", "custom"):
            raise ValueError(f"unknown weight path kind {self.kind!r}")
        free = self.n - len(set(self.mask))
        if self.kind == "random_kappa":
            if self.kappa is None or len(self.kappa) != free:
                raise ValueError(f"random_kappa needs {free} kappa values")
            k = np.asarray(self.kappa, float)
            if np.any(k < 0) or abs(k.sum() - 1) > 1e-9:
                raise ValueError("kappa must be non-negative and sum to 1")
        if self.kind == "custom":
            if self.target is None or len(self.target) != self.n:
                raise ValueError("custom path needs a full target vector")
            t = np.asarray(self.target, float)
            if np.any(t < 0) or abs(t.sum() - 1) > 1e-9:
                raise ValueError("target must be a probability vector")

    def endpoint(self) -> np.ndarray:
        if self.kind == "custom":
            return np.asarray(self.target, float)
        free = [i for i in range(self.n) if i not in self.mask]
        out = np.zeros(self.n)
        if self.kind == "fig4":
            out[free] = 1.0 / len(free)
        else:
            out[free] = self.kappa
        return out

    def label(self) -> str:
        if self.kind == "random_kappa":
            return "kappa(" + ",".join(f"{k:g}" for k in self.kappa) + ")"
        return self.kind


def random_kappa_path(seed: int, mask: Sequence[int] = DEFAULT_MASK, n: int = 8) -> WeightPath:
    rng = np.random.default_rng(seed)
    k = rng.dirichlet(np.ones(n - len(set(mask))))
    return WeightPath("random_kappa", tuple(float(x) for x in k), tuple(mask), n)


def weight_at(path: WeightPath, eps: float) -> np.ndarray:
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    return (1 - eps) * np.full(path.n, 1.0 / path.n) + eps * path.endpoint()


def eps_grid(start: float = 0.0, stop: float = 1.0, step: float = 0.05) -> list[float]:
    if step <= 0:
        raise ValueError("step must be positive")
    k = int(math.floor((stop - start) / step + 1e-9))
    grid = [round(start + i * step, 10) for i in range(k + 1)]
    if stop - grid[-1] > 1e-9:
        grid.append(stop)
    return grid


def parse_eps_grid(text: str) -> list[float]:
    """``start:stop:step`` or a comma list."""
    if ":" in text:
        a, b, c = (float(x) for x in text.split(":"))
        return eps_grid(a, b, c)
    return [float(x) for x in text.split(",") if x]


# -- lower bounds ------------------------------------------------------------

def ansatz_lower(label: str, path: WeightPath, eps: float, g: AnyGraph
                 ) -> tuple[float, Realization] | None:
    """Best hand-built realization for the pentagonal path, if one applies."""
    if path.kind != "fig4" or tuple(path.mask) != DEFAULT_MASK or path.n != 8:
        return None
    w = weight_at(path, eps)
    cands = []
    try:
        if label in ("44,44", "33,33"):
            cands.append(chsh_interpolation(eps))
        if label == "33,33" and eps >= QUTRIT_FROM:
            cands.append(g3333_qutrit_point(eps))
        if label == "44,1111":
            cands.append(g441111_interpolation(eps))
        scored = [(r.value(w, g), r) for r in cands]
    except RealizationError:
        # the builtin embedding does not fit this graph's labelling
        return None
    return max(scored, key=lambda t: t[0]) if scored else None


def best_lower(g: AnyGraph, w: Sequence[float], dims_list: Sequence[tuple[int, int]],
               seed: int, label: str | None = None, path: WeightPath | None = None,
               eps: float | None = None) -> tuple[float, Realization | None, str]:
    best: tuple[float, Realization | None, str] = (-math.inf, None, "")
    if label is not None and path is not None and eps is not None:
        got = ansatz_lower(label, path, eps, g)
        if got is not None:
            best = (got[0], got[1], f"ansatz:{got[1].meta.get('ansatz')}")
    for dims in dims_list:
        try:
            res = seesaw(g, w, dims, seed=seed)
        except RealizationError as exc:
            log.info("seesaw skipped for dims %s: %s", dims, exc)
            continue
        if res.value > best[0]:
            best = (res.value, res.realization, f"seesaw:{dims[0]}x{dims[1]}")
    return best


# -- sweeps ------------------------------------------------------------------

@dataclass
class SweepRow:
    graph_label: str
    epsilon: float
    upper: float
    lower: float
    gap: float
    level: str
    dims: str
    seconds: float
    source: str = ""
    error: str = ""


@dataclass
class SweepResult:
    path: str
    rows: list[SweepRow] = field(default_factory=list)

    def curve(self, label: str, which: str = "upper") -> list[tuple[float, float]]:
        return sorted((r.epsilon, getattr(r, which)) for r in self.rows
                      if r.graph_label == label and not r.error)

    def value(self, label: str, eps: float, which: str = "upper") -> float:
        for r in self.rows:
            if r.graph_label == label and abs(r.epsilon - eps) < 1e-12:
                return getattr(r, which)
        raise KeyError((label, eps))

    def sort(self, order: Sequence[str] | None = None) -> None:
        rank = {k: i for i, k in enumerate(order or [])}
        self.rows.sort(key=lambda r: (rank.get(r.graph_label, len(rank)), r.graph_label,
                                      r.epsilon))


def _resolve(graphs) -> list[tuple[str, AnyGraph]]:
    out = []
    items = graphs.items() if isinstance(graphs, dict) else graphs
    for item in items:
        if isinstance(item, str):
            out.append((item, builtin(item)))
        elif isinstance(item, tuple):
            out.append((item[0], item[1]))
        else:
            out.append((family_label(item), item))
    return out


def sweep(graphs, path: WeightPath, eps_values: Iterable[float], level="1+AB",
          dims_list: Sequence[tuple[int, int]] = ((2, 2),), seed: int = 0,
          lower: bool = True, tol: float = 1e-8) -> SweepResult:
    """Upper (moment relaxation) and lower (realization) bounds per graph and eps.

    Solver failures are recorded on the row and the sweep continues.
    """
    level = parse_level(level)
    named = _resolve(graphs)
    result = SweepResult(path.label())
    dims_txt = ";".join(f"{a}x{b}" for a, b in dims_list)
    for label, g in named:
        key = family_label(g) if not isinstance(g, ColoredGraph) or g.n == 8 else label
        for eps in eps_values:
            w = weight_at(path, eps)
            t0 = time.perf_counter()
            err = ""
            up = lo = math.nan
            src = ""
            try:
                up = theta_colored_upper(g, w, level, tol)
            except SolverError as exc:
                err = str(exc)
            if lower:
                lo, _, src = best_lower(g, w, dims_list, seed, key, path, eps)
            gap = up - lo if lower and not err else math.nan
            result.rows.append(SweepRow(label, float(eps), float(up), float(lo), float(gap),
                                        str(level), dims_txt if lower else "",
                                        time.perf_counter() - t0, src, err))
    result.sort([lbl for lbl, _ in named])
    return result


# -- kinks -------------------------------------------------------------------

def detect_kink(curve: Sequence[tuple[float, float]], threshold: float = 5.0,
                floor: float = 1e-6) -> list[float]:
    """Grid points where the curvature jumps.

    Uses divided second differences (valid on uneven grids).  A point is
    flagged when its magnitude exceeds ``threshold`` times the median and the
    absolute ``floor``; adjacent flags merge into one kink at the largest.
    """
    pts = sorted(curve)
    if len(pts) < 3:
        return []
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    h1, h2 = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    if np.any(h1 <= 0) or np.any(h2 <= 0):
        raise ValueError("curve has repeated abscissae")
    d2 = 2 * ((y[2:] - y[1:-1]) / h2 - (y[1:-1] - y[:-2]) / h1) / (h1 + h2)
    mag = np.abs(d2)
    med = float(np.median(mag))
    flags = (mag > threshold * med) & (mag > floor)
    kinks = []
    k = 0
    while k < len(flags):
        if flags[k]:
            j = k
            while j + 1 < len(flags) and flags[j + 1]:
                j += 1
            top = k + int(np.argmax(mag[k:j + 1]))
            kinks.append(float(x[top + 1]))
            k = j + 1
        else:
            k += 1
    return kinks


# -- separation --------------------------------------------------------------

@dataclass
class Separation:
    weights: np.ndarray
    lower_relaxed: float
    upper_constrained: float
    witness: str
    # which argument of find_separating_weight carries the larger value (0 or 1)
    relaxed_index: int = 0

    @property
    def gap(self) -> float:
        return self.lower_relaxed - self.upper_constrained


def _lower_for(g: AnyGraph, w, dims_list, seed) -> tuple[float, str]:
    if not isinstance(g, ColoredGraph):
        val = theta_lower_bound(g, w)[0]
        return val, "orthonormal representation"
    val, _, src = best_lower(g, w, dims_list, seed)
    return val, src


def _upper_for(g: AnyGraph, w, level) -> float:
    if not isinstance(g, ColoredGraph):
        return theta(g, w)
    return theta_colored_upper(g, w, level)


def certify_gap(relaxed: AnyGraph, constrained: AnyGraph, w, level="1+AB",
                dims_list=SEPARATION_DIMS, seed: int = 0) -> Separation:
    """Lower bound on the relaxed graph (explicit realization) against an upper
    bound on the constrained one; a positive gap proves strict inclusion."""
    lo, src = _lower_for(relaxed, w, dims_list, seed)
    up = _upper_for(constrained, w, level)
    return Separation(np.asarray(w, float), lo, up, src)


def pentagon_weights(g: AnyGraph, limit: int = 64) -> list[np.ndarray]:
    """Uniform weights on the 5-cycles of a simple graph (at most ``limit``).

    Pentagons are the smallest graphs whose theta exceeds alpha, so they are
    natural first candidates when looking for a quantum separation.
    """
    s = shadow(g)
    adj = [set() for _ in range(s.n)]
    for i, j in s.edges:
        adj[i].add(j)
        adj[j].add(i)
    out = []
    seen = set()
    for a in range(s.n):
        # paths a-b-c-d-e with a the smallest vertex, closed by e-a
        stack = [(a,)]
        while stack and len(out) < limit:
            path = stack.pop()
            if len(path) == 5:
                if a in adj[path[-1]] and path[1] < path[-1]:
                    key = frozenset(path)
                    if key not in seen:
                        seen.add(key)
                        w = np.zeros(s.n)
                        w[list(path)] = 0.2
                        out.append(w)
                continue
            for v in sorted(adj[path[-1]], reverse=True):
                if v > a and v not in path:
                    stack.append(path + (v,))
    return out


def find_separating_weight(g1: AnyGraph, g2: AnyGraph, level="1+AB", trials: int = 20,
                           seed: int = 0, min_gap: float = 1e-3,
                           candidates: Sequence[Sequence[float]] = (),
                           dims_list=SEPARATION_DIMS) -> Separation | None:
    """Search a weight on which one graph's quantum value provably exceeds the other's.

    Tries the given candidates, uniform weights on each 5-cycle of the shadow,
    then random weights (each in both directions), and refines the best by
    random perturbation.
    A hit is re-verified from scratch before being returned.
    """
    if shadow(g1).n != shadow(g2).n or shadow(g1).edges != shadow(g2).edges:
        raise ValueError("graphs must share the shadow")
    if as_colored(g1) == as_colored(g2):
        return None
    n = shadow(g1).n
    rng = np.random.default_rng(seed)
    pool = [np.asarray(c, float) for c in candidates]
    pool += pentagon_weights(shadow(g1))
    pool += [rng.dirichlet(np.ones(n)) for _ in range(trials)]
    best = None
    for w in pool:
        for relaxed, constrained in ((g1, g2), (g2, g1)):
            try:
                sep = certify_gap(relaxed, constrained, w, level, dims_list, seed)
            except (SolverError, RealizationError) as exc:
                log.info("candidate skipped: %s", exc)
                continue
            if best is None or sep.gap > best[0].gap:
                best = (sep, relaxed, constrained)
        if best is not None and best[0].gap > min_gap:
            break
    if best is None:
        return None
    sep, relaxed, constrained = best
    step = 0.1
    for _ in range(trials if sep.gap <= min_gap else 0):
        w = np.clip(sep.weights + step * rng.normal(size=n) / n, 0, None)
        if w.sum() <= 0:
            continue
        cand = certify_gap(relaxed, constrained, w / w.sum(), level, dims_list, seed)
        if cand.gap > sep.gap:
            sep = cand
        else:
            step *= 0.7
    if sep.gap <= min_gap:
        return None
    check = certify_gap(relaxed, constrained, sep.weights, level, dims_list, seed)
    if check.gap <= min_gap:
        return None
    check.relaxed_index = 0 if relaxed is g1 else 1
    return check


# -- output ------------------------------------------------------------------

CSV_COLUMNS = ("graph_label", "epsilon", "upper", "lower", "gap", "level", "dims", "seconds")


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in result.rows:
        wr.writerow([r.graph_label, f"{r.epsilon:.6g}", f"{r.upper:.10f}", f"{r.lower:.10f}",
                     f"{r.gap:.3e}", r.level, r.dims, f"{r.seconds:.2f}"])
    return buf.getvalue()


def to_json(result: SweepResult) -> str:
    return json.dumps({"path": result.path, "rows": [asdict(r) for r in result.rows]},
                      indent=1, sort_keys=True, default=float)


def to_svg(result: SweepResult, width: int = 640, height: int = 400,
           which: str = "upper") -> str:
    labels = list(dict.fromkeys(r.graph_label for r in result.rows))
    vals = [getattr(r, which) for r in result.rows if math.isfinite(getattr(r, which))]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 40
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

    def sx(e):
        return pad + e * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
           'stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">epsilon</text>',
           f'<text x="4" y="{pad - 10}">{hi:.4f}</text>',
           f'<text x="4" y="{height - pad + 14}">{lo:.4f}</text>']
    for k, label in enumerate(labels):
        pts = [(e, v) for e, v in result.curve(label, which) if math.isfinite(v)]
        coords = " ".join(f"{sx(e):.2f},{sy(v):.2f}" for e, v in pts)
        color = palette[k % len(palette)]
        out.append(f'<polyline fill="none" stroke="{color}" points="{coords}">'
                   f'<title>{label}</title></polyline>')
        out.append(f'<text x="{width - pad + 2}" y="{pad + 14 * k}" fill="{color}">'
                   f'{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit(result: SweepResult, fmt: str, out_path: str | Path | None = None) -> str:
    fmt = fmt.lower()
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    elif fmt == "svg":
        text = to_svg(result)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out_path is not None:
        Path(out_path).write_text(text)
    return text
