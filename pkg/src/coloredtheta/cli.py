"""Command-line interface.  Exit codes: 0 success, 2 solver failure, 3 invalid input."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import classical, graphs, npa, realizations, sweeps
from .sdp import SolverError
from .theta import UndecidedError, theta, theta_body_membership

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_INPUT = 3


class InputError(ValueError):
    pass


def _read_vector(spec: str) -> np.ndarray:
    """A JSON list / comma list inline, or a file holding either."""
    text = spec
    p = Path(spec)
    if p.exists():
        text = p.read_text()
    text = text.strip()
    try:
        vals = json.loads(text) if text.startswith("[") else \
            [float(x) for x in text.replace("\n", ",").replace(" ", ",").split(",") if x]
    except (json.JSONDecodeError, ValueError) as exc:
        raise InputError(f"cannot parse vector from {spec!r}: {exc}") from exc
    return np.asarray(vals, dtype=float)


def _graph(args) -> graphs.AnyGraph:
    if not args.graph:
        raise InputError("--graph is required (builtin:NAME or a JSON file)")
    spec = args.graph[0] if isinstance(args.graph, list) else args.graph
    return graphs.load_graph(spec)


def _path(args) -> sweeps.WeightPath:
    if args.path in ("random", "random_kappa"):
        if not args.kappa:
            raise InputError("--path random needs --kappa a,b,c,d,e")
        return sweeps.WeightPath("random_kappa", tuple(_read_vector(args.kappa)))
    if args.path == "fig4":
        return sweeps.WeightPath("fig4")
    raise InputError(f"unknown path {args.path!r}")


def _weights(args, n: int) -> np.ndarray:
    if args.weights:
        w = _read_vector(args.weights)
    elif args.path:
        w = sweeps.weight_at(_path(args), args.eps)
    else:
        w = np.ones(n)
    if len(w) != n:
        raise InputError(f"graph has {n} vertices but {len(w)} weights were given")
    return w


def _dims(values, default=("2,2",)) -> list[tuple[int, int]]:
    out = []
    for v in values or default:
        parts = v.replace("x", ",").split(",")
        if len(parts) != 2:
            raise InputError(f"bad --dims value {v!r}")
        out.append((int(parts[0]), int(parts[1])))
    return out


def _emit(args, payload: dict) -> None:
    if args.format == "json" or args.out:
        text = json.dumps(payload, indent=1, sort_keys=True, default=float)
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
        return
    for k, v in payload.items():
        print(f"{k}: {v}")


# -- subcommands -------------------------------------------------------------

def cmd_alpha(args) -> int:
    g = _graph(args)
    w = _weights(args, graphs.shadow(g).n)
    _emit(args, {"alpha": classical.alpha(g, w)})
    return EXIT_OK


def cmd_theta(args) -> int:
    g = _graph(args)
    w = _weights(args, graphs.shadow(g).n)
    _emit(args, {"theta": theta(g, w, args.tol)})
    return EXIT_OK


def cmd_theta_colored(args) -> int:
    g = graphs.as_colored(_graph(args))
    w = _weights(args, g.n)
    ub = npa.solve_colored_upper(g, w, args.level, args.tol)
    payload = {"upper": ub.value, "level": str(ub.relaxation.level),
               "basis_size": ub.relaxation.size, "variables": ub.relaxation.n_variables,
               "status": ub.solution.status}
    if args.dump_classes:
        Path(args.dump_classes).write_text(ub.relaxation.to_json())
    _emit(args, payload)
    return EXIT_OK


def cmd_membership(args) -> int:
    if not args.behavior:
        raise InputError("membership needs --behavior")
    g = _graph(args)
    p = _read_vector(args.behavior)
    if len(p) != graphs.shadow(g).n:
        raise InputError("behavior length does not match the graph")
    out = {"classical": classical.classical_membership(p, g, args.tol)}
    try:
        out["theta_body"] = theta_body_membership(p, g, args.tol)
    except UndecidedError as exc:
        out["theta_body"] = f"undecided ({exc})"
    if isinstance(g, graphs.ColoredGraph):
        out["colored_relaxation"] = npa.colored_membership_upper(p, g, args.level, args.tol)
    _emit(args, out)
    return EXIT_OK


def cmd_family(args) -> int:
    g = graphs.as_colored(_graph(args) if args.graph else graphs.chsh_colored())
    fam = graphs.enumerate_shadow_family(g, allow_color_swap=True)
    plain = graphs.enumerate_shadow_family(g, allow_color_swap=False)
    labels = [graphs.family_label(m, fam) for m in fam.members]
    chain = []
    for name in graphs.CHAIN:
        try:
            chain.append(fam.index_of(graphs.builtin(name)))
        except KeyError:
            chain = []
            break
    covering = bool(chain) and all((a, b) in fam.covers for a, b in zip(chain, chain[1:]))
    _emit(args, {"members_with_color_swap": len(fam), "members_without_color_swap": len(plain),
                 "resolutions": fam.resolutions, "labels": labels,
                 "covers": [[labels[a], labels[b]] for a, b in fam.covers],
                 "chain": [labels[k] for k in chain], "chain_is_covering_path": covering})
    return EXIT_OK


def _sweep_graphs(args):
    names = args.graph or list(graphs.CHAIN)
    out = []
    for spec in names:
        g = graphs.load_graph(spec)
        out.append((spec.replace("builtin:", ""), g))
    return out


def cmd_sweep(args) -> int:
    res = sweeps.sweep(_sweep_graphs(args), _path(args), sweeps.parse_eps_grid(args.eps_grid),
                       args.level, _dims(args.dims), args.seed, lower=not args.no_lower,
                       tol=args.tol)
    fmt = args.format if args.format in ("csv", "json", "svg") else "csv"
    text = sweeps.emit(res, fmt, args.out)
    if not args.out:
        sys.stdout.write(text)
    failed = [r for r in res.rows if r.error]
    return EXIT_SOLVER if failed and len(failed) == len(res.rows) else EXIT_OK


def cmd_kink(args) -> int:
    if args.curve:
        rows = [line.split(",") for line in Path(args.curve).read_text().splitlines() if line]
        try:
            curve = [(float(a), float(b)) for a, b, *_ in rows if a not in ("epsilon", "eps")]
        except ValueError as exc:
            raise InputError(f"bad curve file: {exc}") from exc
        out = {"kinks": sweeps.detect_kink(curve, args.threshold)}
    else:
        res = sweeps.sweep(_sweep_graphs(args), _path(args),
                           sweeps.parse_eps_grid(args.eps_grid), args.level, lower=False,
                           tol=args.tol)
        out = {label: sweeps.detect_kink(res.curve(label), args.threshold)
               for label in dict.fromkeys(r.graph_label for r in res.rows)}
    _emit(args, out)
    return EXIT_OK


def cmd_separate(args) -> int:
    if not args.graph or len(args.graph) != 2:
        raise InputError("separate needs exactly two --graph values")
    g1, g2 = (graphs.load_graph(s) for s in args.graph)
    sep = sweeps.find_separating_weight(g1, g2, args.level, args.trials, args.seed,
                                        dims_list=_dims(args.dims, ("2,2", "3,2", "2,3")))
    if sep is None:
        _emit(args, {"found": False})
        return EXIT_OK
    _emit(args, {"found": True, "weights": sep.weights.tolist(), "lower": sep.lower_relaxed,
                 "upper": sep.upper_constrained, "gap": sep.gap, "witness": sep.witness,
                 "larger": args.graph[sep.relaxed_index]})
    return EXIT_OK


def cmd_dilate_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    d = args.dim
    worst = 0.0
    for _ in range(args.trials):
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = m @ m.conj().T
        e0 = h / (np.linalg.eigvalsh(h).max() * (1 + rng.random()))
        r = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = r @ r.conj().T
        rho /= np.trace(rho).real
        _, _, rep = realizations.naimark_dilate([e0, np.eye(d) - e0], rho)
        psi = realizations.purify(rho)
        pt = np.abs(realizations.partial_trace_second(psi, d, d) - rho).max()
        worst = max(worst, rep.unitarity_error, rep.projector_error, rep.statistics_error, pt)
    _emit(args, {"trials": args.trials, "dim": d, "max_error": worst, "ok": worst <= 1e-10})
    return EXIT_OK if worst <= 1e-10 else EXIT_SOLVER


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", action="append", help="builtin:NAME or a JSON file")
    common.add_argument("--weights", help="weight vector file or inline list")
    common.add_argument("--path", choices=["fig4", "random", "random_kappa"])
    common.add_argument("--kappa", help="five comma-separated kappa values")
    common.add_argument("--eps", type=float, default=1.0, help="point on the weight path")
    common.add_argument("--level", default="1+AB", help="1, 1ab or 2")
    common.add_argument("--eps-grid", default="0:1:0.05")
    common.add_argument("--dims", action="append", help="dA,dB (repeatable)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-7)
    common.add_argument("--out")
    common.add_argument("--format", choices=["csv", "json", "svg", "text"])
    common.add_argument("--config", help="JSON file whose keys mirror the flags")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="coloredtheta",
                                     description="Classical and quantum bounds for "
                                                 "bicolored exclusivity graphs.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("alpha", parents=[common]).set_defaults(func=cmd_alpha)
    sub.add_parser("theta", parents=[common]).set_defaults(func=cmd_theta)
    p = sub.add_parser("theta-colored", parents=[common])
    p.add_argument("--dump-classes", help="write the moment variable table as JSON")
    p.set_defaults(func=cmd_theta_colored)
    p = sub.add_parser("membership", parents=[common])
    p.add_argument("--behavior", help="behavior vector file or inline list")
    p.set_defaults(func=cmd_membership)
    sub.add_parser("family", parents=[common]).set_defaults(func=cmd_family)
    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("--no-lower", action="store_true", help="skip realization lower bounds")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("kink", parents=[common])
    p.add_argument("--curve", help="CSV of epsilon,value")
    p.add_argument("--threshold", type=float, default=5.0)
    p.set_defaults(func=cmd_kink)
    p = sub.add_parser("separate", parents=[common])
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_separate)
    p = sub.add_parser("dilate-check", parents=[common])
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_dilate_check)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config: {exc}") from exc
    defaults = parser.parse_args([args.command])
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise InputError(f"unknown config key {key!r}")
        # explicit command-line flags win over the config file
        if getattr(args, attr) == getattr(defaults, attr, None):
            if attr in ("graph", "dims") and isinstance(value, str):
                value = [value]
            setattr(args, attr, value)
    return args


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InputError, ValueError, KeyError, FileNotFoundError,
            realizations.RealizationError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
