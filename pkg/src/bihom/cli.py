"""Command line entry point: ``bihom <subcommand> ...``.

Every subcommand prints JSON (``lattice`` prints CSV) on stdout.  The system
and boxes come from ``--config`` when given, otherwise from ``--system``
with centred unit boxes.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from .arcs import (InfeasibleParameters, arcs_measure, check_disjointness, choose_parameters,
                   locate_arc)
from .counting import BoxPair, count_solutions
from .expsum import BudgetExceeded, complete_sum, weyl_sum
from .harness import BUILTINS, ConfigError, jsonable, load_config, run_experiment
from .integral import oscillatory_I, schmidt_J, singular_integral_partial
from .lattice import batch_csv, shrinking_batch
from .local import euler_product, local_factor, singular_series_partial

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


def _emit(obj) -> None:
    print(json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False))


def _system_and_boxes(args):
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        return cfg.system, cfg.b1, cfg.b2, cfg.closed
    system = BUILTINS[args.system]()
    return (system, ((-0.5, 0.5),) * system.n1, ((-0.5, 0.5),) * system.n2,
            not getattr(args, "half_open", False))


def _parse_number(text: str):
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    try:
        return int(text)
    except ValueError:
        return float(text)


def cmd_count(args) -> int:
    system, b1, b2, closed = _system_and_boxes(args)
    boxes = BoxPair(b1, b2, args.p1, args.p2, closed)
    start = time.perf_counter()
    n = count_solutions(system, boxes, args.strategy, args.workers)
    _emit({"p1": args.p1, "p2": args.p2, "n": n, "wall_time": time.perf_counter() - start})
    return EXIT_OK


def cmd_expsum(args) -> int:
    system, b1, b2, closed = _system_and_boxes(args)
    if args.q is not None:
        a = [int(v) for v in args.a.split(",")] if args.a else [1] * system.R
        sys_ = system if system.is_integral else system.cleared()
        cs = complete_sum(sys_, a, args.q)
        v = cs.value
        pairs = args.q ** (system.n1 + system.n2)
        _emit({"q": args.q, "a": list(cs.a), "re": v.real, "im": v.imag, "abs": abs(v),
               "pairs": pairs, "histogram": [int(h) for h in cs.histogram]})
        return EXIT_OK
    if not args.alpha:
        raise ValueError("give --alpha or --q")
    alpha = [_parse_number(t) for t in args.alpha.split(",")]
    boxes = BoxPair(b1, b2, args.p1, args.p2, closed)
    v = weyl_sum(system, alpha, boxes)
    _emit({"alpha": [str(x) for x in alpha], "re": v.real, "im": v.imag, "abs": abs(v),
           "pairs": boxes.npoints(1) * boxes.npoints(2)})
    return EXIT_OK


def cmd_lattice(args) -> int:
    if args.action != "verify-lemma51":
        raise ValueError(f"unknown lattice action {args.action!r}")
    sys.stdout.write(batch_csv(shrinking_batch(args.instances, args.seed)))
    return EXIT_OK


def _params(args):
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        s = cfg.system
        R, d1, d2 = s.R, s.d1, s.d2
        K = args.K if args.K is not None else min(cfg.codim_x or 0, cfg.codim_y or 0) / 2 ** s.dtilde
    else:
        R, d1, d2, K = args.R, args.d1, args.d2, args.K if args.K is not None else 3.0
    b = BoxPair(((0, 1),), ((0, 1),), args.p1, args.p2).b
    return choose_parameters(R, d1, d2, b, K).at(args.p1, args.p2)


def cmd_arcs(args) -> int:
    params = _params(args)
    out = {"parameters": params.as_dict()}
    if args.action == "locate":
        alpha = [_parse_number(t) for t in args.alpha.split(",")]
        c = locate_arc(alpha, params, args.variant)
        out["center"] = c.as_dict() if c else None
    elif args.action == "disjoint":
        out.update(check_disjointness(params).as_dict())
    elif args.action == "measure":
        out.update(arcs_measure(params).as_dict())
    else:
        raise ValueError(f"unknown arcs action {args.action!r}")
    _emit(out)
    return EXIT_OK


def _fraction_json(x: Fraction) -> dict:
    return {"exact": f"{x.numerator}/{x.denominator}", "float": float(x)}


def cmd_sseries(args) -> int:
    system, _, _, _ = _system_and_boxes(args)
    sys_ = system if system.is_integral else system.cleared()
    out = {"Q": args.Q, "S_Q": _fraction_json(singular_series_partial(sys_, args.Q))}
    if args.euler:
        factors = {}
        for item in args.euler.split(","):
            p, _, l = item.partition(":")
            lf = local_factor(sys_, int(p), int(l) if l else args.depth)
            factors[f"{lf.p}^{lf.l}"] = _fraction_json(lf.partial)
        out["euler_factors"] = factors
        out["euler_product"] = _fraction_json(euler_product(sys_, args.Q, args.depth))
    _emit(out)
    return EXIT_OK


def cmd_sintegral(args) -> int:
    system, b1, b2, _ = _system_and_boxes(args)
    if args.method == "osc":
        if args.u is not None:
            r = oscillatory_I(system, [float(v) for v in args.u.split(",")], b1, b2)
            _emit({"u": args.u, "value": r.value.real, "imag": r.value.imag,
                   "error_estimate": r.error, "converged": r.converged})
            return EXIT_OK
        J = singular_integral_partial(system, args.phi, b1, b2)
        _emit({"phi": args.phi, "value": J.value, "imag": J.imag, "error_estimate": J.error,
               "converged": J.converged})
        return EXIT_OK
    ex = schmidt_J(system, args.T, b1, b2)
    _emit({"T": args.T, "value": ex.values[-1], "extrapolated": ex.extrapolated,
           "T_values": dict(zip((f"{t:g}" for t in ex.Ts), ex.values)), "order": ex.order,
           "error_estimate": ex.error, "converged": ex.converged, "degenerate": ex.degenerate,
           "note": ex.note})
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    report = run_experiment(cfg)
    text = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(report.to_csv())
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK if report.status == "ok" else EXIT_PARTIAL


def _add_system(p, boxes: bool = True):
    p.add_argument("--config", help="TOML experiment config supplying system and boxes")
    p.add_argument("--system", default="sys_a", choices=sorted(BUILTINS),
                   help="builtin system when no config is given")
    if boxes:
        p.add_argument("--half-open", action="store_true",
                       help="read builtin boxes as half-open products")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bihom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="exact solution count N(P1, P2)")
    _add_system(p)
    p.add_argument("--p1", type=float, required=True)
    p.add_argument("--p2", type=float, required=True)
    p.add_argument("--strategy", default="auto", choices=["auto", "generic", "fibered"])
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("expsum", help="exponential sum S(alpha) or complete sum S_{a,q}")
    _add_system(p)
    p.add_argument("--alpha", help="comma-separated reals or fractions p/q")
    p.add_argument("--p1", type=float, default=8)
    p.add_argument("--p2", type=float, default=8)
    p.add_argument("--q", type=int, help="modulus of a complete sum")
    p.add_argument("--a", help="comma-separated numerators for the complete sum")
    p.set_defaults(func=cmd_expsum)

    p = sub.add_parser("lattice", help="lattice experiments (CSV output)")
    p.add_argument("action", choices=["verify-lemma51"])
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("arcs", help="major-arc parameters, location, disjointness, measure")
    p.add_argument("action", choices=["locate", "disjoint", "measure"])
    p.add_argument("--config")
    p.add_argument("--R", type=int, default=1)
    p.add_argument("--d1", type=int, default=1)
    p.add_argument("--d2", type=int, default=1)
    p.add_argument("--K", type=float)
    p.add_argument("--p1", type=float, default=32)
    p.add_argument("--p2", type=float, default=32)
    p.add_argument("--alpha", default="0")
    p.add_argument("--variant", default="PRIME", choices=["PRIME", "PLAIN"])
    p.set_defaults(func=cmd_arcs)

    p = sub.add_parser("sseries", help="truncated singular series and Euler factors")
    _add_system(p, boxes=False)
    p.add_argument("--Q", type=int, default=50)
    p.add_argument("--euler", help="comma-separated primes, optionally p:depth")
    p.add_argument("--depth", type=int, default=1)
    p.set_defaults(func=cmd_sseries)

    p = sub.add_parser("sintegral", help="singular integral by either pipeline")
    _add_system(p, boxes=False)
    p.add_argument("--method", default="schmidt", choices=["osc", "schmidt"])
    p.add_argument("--phi", type=float, default=16)
    p.add_argument("--T", type=float, default=32)
    p.add_argument("--u", help="evaluate I(u) only (osc method)")
    p.set_defaults(func=cmd_sintegral)

    p = sub.add_parser("experiment", help="count versus prediction over a schedule")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="JSON report path (stdout if omitted)")
    p.add_argument("--csv", help="CSV table path")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InfeasibleParameters, BudgetExceeded, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
