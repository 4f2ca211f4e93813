"""Acceptance criteria with pinned tolerances and time budgets.

Run under pytest (one test per criterion, summary lines at the end of the
session) or directly: ``python3 tests/test_acceptance.py [N ...]``.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass

import numpy as np
import pytest

from coloredtheta.classical import alpha
from coloredtheta.graphs import (CHAIN, ColoredGraph, SimpleGraph, builtin, chsh_colored,
                                 chsh_shadow, enumerate_shadow_family, shadow)
from coloredtheta.npa import colored_membership_upper, membership_margin, theta_colored_upper
from coloredtheta.realizations import (chsh_interpolation, g3333_qutrit_point, naimark_dilate,
                                       pair_expectation, bloch, bloch_projector, partial_trace_second,
                                       purify, schmidt_state, seesaw)
from coloredtheta.sweeps import (TABLE_KAPPA, WeightPath, best_lower, certify_gap, detect_kink,
                                 eps_grid, weight_at)
from coloredtheta.theta import theta

CHSH_P = (2 + math.sqrt(2)) / 8
FIG4 = WeightPath("fig4")

# printed four-digit values, rows follow the chain, columns eps = 0.3, 0.5, 0.9
TABLE_EPS = (0.3, 0.5, 0.9)
TABLE_PRINTED = {
    "chsh": (0.4292, 0.4326, 0.4432),
    "44,43": (0.4292, 0.4326, 0.4456),
    "44,33^1": (0.4292, 0.4326, 0.4456),
    "44,311": (0.4296, 0.4339, 0.4485),
    "44,1111": (0.4296, 0.4340, 0.4486),
}
TABLE_TOL = 1e-3
# two printed values count as equal when they agree to the rounding half-unit
PRINT_HALF_UNIT = 5e-5
ORDER_TOL = 1e-6

RESULTS: list[str] = []


@dataclass
class Outcome:
    ok: bool
    detail: str


def _record(n: int, out: Outcome, seconds: float, budget: float | None) -> Outcome:
    over = budget is not None and seconds > budget
    ok = out.ok and not over
    timing = f"{seconds:.3f}s" + (f" (budget {budget:g}s)" if budget is not None else "")
    if over:
        timing += " OVER BUDGET"
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'} {out.detail}; {timing}"
    RESULTS.append(line)
    print(line, flush=True)
    return Outcome(ok, line)


def _timed(n: int, budget: float | None, fn) -> Outcome:
    t0 = time.perf_counter()
    out = fn()
    return _record(n, out, time.perf_counter() - t0, budget)


# -- criteria ------------------------------------------------------------------

def criterion_1() -> Outcome:
    a1, a2 = alpha(chsh_shadow()), alpha(chsh_colored())
    return Outcome(a1 == 3 and a2 == 3, f"alpha(G_CSW)={a1:g}, alpha(colored CHSH)={a2:g}")


def criterion_2() -> Outcome:
    t = theta(chsh_shadow())
    err = abs(t - (2 + math.sqrt(2)))
    return Outcome(err <= 1e-6, f"theta(G_CSW)={t:.9f}, |err|={err:.1e} (tol 1e-6)")


def criterion_3() -> Outcome:
    w = weight_at(FIG4, 0.0)
    up = theta_colored_upper(chsh_colored(), w, "1+AB")
    lo = chsh_interpolation(0.0).value(w, chsh_colored())
    e_up, e_lo = abs(up - 0.426777), abs(lo - up)
    return Outcome(e_up <= 1e-5 and e_lo <= 1e-6,
                   f"upper={up:.7f} (|-0.426777|={e_up:.1e}, tol 1e-5), "
                   f"ansatz={lo:.7f} (|lower-upper|={e_lo:.1e}, tol 1e-6)")


def criterion_4() -> Outcome:
    w = weight_at(FIG4, 1.0)
    targets = {"chsh": 0.436, "33,33": 0.442, "44,1111": 0.442}
    ok = True
    parts = []
    for name, target in targets.items():
        g = builtin(name)
        label = "44,44" if name == "chsh" else name
        up = theta_colored_upper(g, w, "1+AB")
        lo, _, src = best_lower(g, w, ((2, 2), (3, 2)), 0, label, FIG4, 1.0)
        good = abs(up - target) <= 1e-3 and up - lo <= 1e-3 and lo <= up + 1e-7
        ok &= good
        parts.append(f"{name}: upper={up:.5f} lower={lo:.5f} gap={up - lo:.1e}")
    return Outcome(ok, "; ".join(parts) + " (tol 1e-3)")


def criterion_5() -> Outcome:
    path = WeightPath("random_kappa", TABLE_KAPPA)
    vals = {name: [theta_colored_upper(builtin(name), weight_at(path, e), "1+AB")
                   for e in TABLE_EPS] for name in CHAIN}
    dev = max(abs(vals[n][k] - TABLE_PRINTED[n][k]) for n in CHAIN for k in range(3))
    eq = lambda a, b: abs(a - b) <= PRINT_HALF_UNIT  # noqa: E731
    first_three = all(eq(vals["chsh"][k], vals["44,43"][k]) and eq(vals["44,43"][k],
                                                                     vals["44,33^1"][k])
                      for k in (0, 1))
    pair09 = eq(vals["44,43"][2], vals["44,33^1"][2])
    monotone = all(vals[b][k] >= vals[a][k] - ORDER_TOL
                   for a, b in zip(CHAIN, CHAIN[1:]) for k in range(3))
    table = " ".join(f"{n}=({', '.join(f'{v:.5f}' for v in vals[n])})" for n in CHAIN)
    return Outcome(dev <= TABLE_TOL and first_three and pair09 and monotone,
                   f"max|dev|={dev:.1e} (tol 1e-3), first three equal at 0.3/0.5: {first_three}, "
                   f"44,43=44,33^1 at 0.9: {pair09}, non-decreasing: {monotone}; {table}")


def kink_grid() -> list[float]:
    coarse = eps_grid(0.0, 1.0, 0.05)
    fine = eps_grid(0.8, 0.9, 0.025)
    return sorted({round(x, 10) for x in coarse + fine})


def criterion_6() -> Outcome:
    g = builtin("33,33")
    curve = [(e, theta_colored_upper(g, weight_at(FIG4, e), "1+AB")) for e in kink_grid()]
    kinks = detect_kink(curve)
    ok = len(kinks) == 1 and 0.80 <= kinks[0] <= 0.90
    return Outcome(ok, f"33,33 fig4 upper curve on {len(curve)} points, kinks={kinks}")


def criterion_7() -> Outcome:
    fam = enumerate_shadow_family(chsh_colored(), allow_color_swap=True)
    plain = enumerate_shadow_family(chsh_colored(), allow_color_swap=False)
    idx = [fam.index_of(builtin(n)) for n in CHAIN]
    covering = len(set(idx)) == len(idx) and all((a, b) in fam.covers
                                                 for a, b in zip(idx, idx[1:]))
    same_shadow = all(shadow(m).edges == chsh_shadow().edges for m in fam.members)
    return Outcome(len(fam) == 15 and covering and same_shadow,
                   f"with color swap {len(fam)}, without {len(plain)}, "
                   f"chain covering path: {covering}")


def criterion_8() -> Outcome:
    w = weight_at(FIG4, 1.0)
    sep = certify_gap(chsh_shadow(), chsh_colored(), w, "1+AB")
    return Outcome(sep.gap > 5e-3,
                   f"omega_5^1: theta lower (orthonormal representation)={sep.lower_relaxed:.5f}, "
                   f"colored upper={sep.upper_constrained:.5f}, gap={sep.gap:.4f} (need > 5e-3)")


def criterion_9() -> Outcome:
    p = g3333_qutrit_point(1.0).behavior(builtin("33,33"))
    lo, up = membership_margin(p, chsh_colored(), 2)
    member = colored_membership_upper(p, chsh_colored(), 2)
    return Outcome(not member, f"level-2 margin bracket [{lo:.2e}, {up:.2e}], "
                               f"colored_membership_upper={member}")


# -- criterion 10: property suites on seeded random instances ------------------

N_CASES = 100


def _random_colored(rng, n_max=4) -> ColoredGraph:
    n = int(rng.integers(2, n_max + 1))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    kinds = rng.integers(0, 4, len(pairs))
    return ColoredGraph(n, [p for p, k in zip(pairs, kinds) if k & 1],
                        [p for p, k in zip(pairs, kinds) if k & 2])


def _random_simple(rng, n_max=7) -> SimpleGraph:
    n = int(rng.integers(2, n_max + 1))
    return SimpleGraph(n, [(i, j) for i in range(n) for j in range(i + 1, n)
                           if rng.random() < 0.4])


def _prop_sandwich(rng) -> bool:
    g = _random_colored(rng)
    w = rng.random(g.n)
    up = theta_colored_upper(g, w)
    return alpha(g, w) <= up + 1e-6 and up <= theta(shadow(g), w) + 1e-6


def _prop_edge_removal(rng) -> bool:
    g = _random_colored(rng)
    w = rng.random(g.n)
    colored = [("A", e) for e in sorted(g.edges_a)] + [("B", e) for e in sorted(g.edges_b)]
    if not colored:
        return True
    party, e = colored[int(rng.integers(len(colored)))]
    ea, eb = set(g.edges_a), set(g.edges_b)
    (ea if party == "A" else eb).discard(e)
    h = ColoredGraph(g.n, ea, eb)
    s, sh = shadow(g), shadow(h)
    return (theta_colored_upper(g, w) <= theta_colored_upper(h, w) + 1e-6
            and theta(s, w) <= theta(sh, w) + 1e-6 and alpha(s, w) <= alpha(sh, w) + 1e-12)


def _prop_homogeneity(rng) -> bool:
    g = _random_simple(rng)
    w = rng.random(g.n)
    lam = float(rng.uniform(0.1, 10))
    return (abs(alpha(g, lam * w) - lam * alpha(g, w)) <= 1e-12 * (1 + lam)
            and abs(theta(g, lam * w) - lam * theta(g, w)) <= 1e-6 * (1 + lam))


def _prop_lower_upper(rng) -> bool:
    g = _random_colored(rng)
    w = rng.random(g.n)
    try:
        lo = seesaw(g, w, (2, 2), seed=int(rng.integers(1 << 30)), iters=60, restarts=1).value
    except Exception:
        lo = 0.0
    return lo <= theta_colored_upper(g, w) + 1e-6


def _prop_pair_expectation(rng) -> bool:
    a = float(rng.random())
    ra, rb = bloch(float(rng.uniform(0, 2 * np.pi))), bloch(float(rng.uniform(0, 2 * np.pi)))
    psi = schmidt_state(a)
    direct = psi @ np.kron(bloch_projector(ra), bloch_projector(rb)) @ psi
    return abs(pair_expectation(a, ra, rb) - direct) <= 1e-12


def _prop_dilation(rng) -> bool:
    d = int(rng.integers(1, 5))
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = m @ m.conj().T
    e0 = h / (np.linalg.eigvalsh(h).max() * (1 + rng.random()))
    r = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = r @ r.conj().T
    rho /= np.trace(rho).real
    _, _, rep = naimark_dilate([e0, np.eye(d) - e0], rho)
    pt = np.abs(partial_trace_second(purify(rho), d, d) - rho).max()
    return rep.ok(1e-10) and pt <= 1e-10


def _prop_seesaw_monotone(rng) -> bool:
    g = _random_colored(rng, 5)
    w = rng.random(g.n)
    try:
        res = seesaw(g, w, (3, 3), seed=int(rng.integers(1 << 30)), iters=40, restarts=1)
    except Exception:
        return True
    return bool(np.all(np.diff(res.history) >= -1e-10))


PROPERTIES = {
    "sandwich": _prop_sandwich,
    "edge-removal": _prop_edge_removal,
    "homogeneity": _prop_homogeneity,
    "lower<=upper": _prop_lower_upper,
    "pair_expectation": _prop_pair_expectation,
    "dilation/purification": _prop_dilation,
    "seesaw-monotone": _prop_seesaw_monotone,
}


def criterion_10() -> Outcome:
    parts = []
    ok = True
    for k, (name, prop) in enumerate(PROPERTIES.items()):
        rng = np.random.default_rng(1000 + k)
        passed = sum(bool(prop(rng)) for _ in range(N_CASES))
        ok &= passed == N_CASES
        parts.append(f"{name} {passed}/{N_CASES}")
    return Outcome(ok, ", ".join(parts))


CRITERIA = {
    1: (criterion_1, 0.010),
    2: (criterion_2, 1.0),
    3: (criterion_3, 120.0),
    4: (criterion_4, 600.0),
    5: (criterion_5, 1800.0),
    6: (criterion_6, None),
    7: (criterion_7, 10.0),
    8: (criterion_8, None),
    9: (criterion_9, None),
    10: (criterion_10, None),
}


def _warm_up() -> None:
    # import-time and first-call costs are not part of the budgets
    alpha(SimpleGraph(2, [(0, 1)]))
    theta(SimpleGraph(2, [(0, 1)]))


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    _warm_up()
    fn, budget = CRITERIA[n]
    out = _timed(n, budget, fn)
    assert out.ok, out.detail


def main(argv: list[str]) -> int:
    chosen = [int(a) for a in argv] or sorted(CRITERIA)
    _warm_up()
    ok = True
    for n in chosen:
        fn, budget = CRITERIA[n]
        ok &= _timed(n, budget, fn).ok
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
