"""Command-line frontend: ``stablecap <command> ...``.

Exit codes: 0 success, 1 I/O or argument error, 2 invalid deviation profile
(or a point where productization is impossible), 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal
from fractions import Fraction

import numpy as np

from . import tsp_audit, verify
from .affine import NotProductizable, productize
from .bernoulli import extremal_bernoulli
from .bounds import SCHEMA_VERSION, InvalidProfile, bound_report, profile_from
from .capacity import ZERO_OUTSIDE, CapacityQuery, capacity
from .permanent import ColumnSumSpec, min_per_scan, minimize_permanent, permanent, rank_one_candidate
from .poly import SparsePolynomial
from .sr import (
    DiscreteMeasure,
    GroupPartition,
    WeightedGraph,
    expectations,
    measure_probability_bounds,
    spanning_tree_measure,
)

EXIT_OK, EXIT_USAGE, EXIT_PROFILE, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _json_default(x):
    if isinstance(x, (Fraction, Decimal)):
        return str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _numbers(text: str, kind=float) -> list:
    try:
        return [kind(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _flatten(prefix: str, obj, out: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append(f"{prefix}: {json.dumps(obj, default=_json_default)}")


def _emit(report: dict, args) -> None:
    report = dict(report)
    report.setdefault("schema_version", SCHEMA_VERSION)
    report["command"] = args.command
    report["seed"] = args.seed
    if args.format == "text":
        lines: list[str] = []
        _flatten("", json.loads(json.dumps(report, default=_json_default)), lines)
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


# -- commands -------------------------------------------------------------------------------


def cmd_capacity(args) -> int:
    p = SparsePolynomial.from_dict(_read_json(args.poly))
    kappa = _numbers(args.kappa, int)
    if len(kappa) != p.num_vars:
        raise UsageError(f"kappa has {len(kappa)} entries, polynomial has {p.num_vars} variables")
    res = capacity(CapacityQuery(p, tuple(kappa), args.tol))
    total = float(p.sum_of_coefficients())
    if total <= 0:
        raise UsageError("polynomial must have positive coefficient sum")
    alpha = [float(g) / total for g in p.gradient_at_one()]
    # bounds are stated for p(1) = 1; rescale
    rep = bound_report(alpha, kappa, exact=res.value).to_dict()
    for key in ("two_term", "one_term", "simple", "coeff_bound", "baseline_kko"):
        if rep[key] is not None:
            rep[key] *= total
    rep["status"] = res.status
    rep["membership"] = res.membership
    rep["iterations"] = res.iterations
    rep["grad_norm"] = res.grad_norm
    rep["solver_notes"] = list(res.notes)
    rep["coefficient"] = float(p.coefficient(kappa))
    rep["p_at_one"] = total
    rep["alpha"] = alpha
    _emit(rep, args)
    if res.status != ZERO_OUTSIDE and rep["two_term"] is None:
        print("invalid deviation profile: " + "; ".join(rep["notes"]), file=sys.stderr)
        return EXIT_PROFILE
    return EXIT_OK


def cmd_bound(args) -> int:
    alpha = _numbers(args.alpha)
    kappa = _numbers(args.kappa, int)
    if len(alpha) != len(kappa):
        raise UsageError("alpha and kappa differ in length")
    rep = bound_report(alpha, kappa, exact=args.exact).to_dict()
    _emit(rep, args)
    return EXIT_PROFILE if rep["two_term"] is None else EXIT_OK


def _violating_subset(E, kappa, which: str, k: int) -> list[int]:
    dev = [float(e) - q for e, q in zip(E, kappa)]
    order = sorted(range(len(dev)), key=lambda i: (-dev[i], i) if which == "eps" else (dev[i], i))
    return sorted(order[:k])


def cmd_sr_bound(args) -> int:
    if (args.graph is None) == (args.measure is None):
        raise UsageError("give exactly one of --graph and --measure")
    if args.graph is not None:
        mu = spanning_tree_measure(WeightedGraph.from_dict(_read_json(args.graph)))
    else:
        mu = DiscreteMeasure.from_dict(_read_json(args.measure))
    P = GroupPartition.from_dict(_read_json(args.groups))
    P.check_ground(mu.ground_size)
    kappa = _numbers(args.kappa, int)
    if len(kappa) != P.n:
        raise UsageError(f"kappa has {len(kappa)} entries, there are {P.n} groups")
    try:
        b = measure_probability_bounds(mu, P, kappa)
    except InvalidProfile as exc:
        E = [float(e) for e in expectations(mu, P)]
        subset = _violating_subset(E, kappa, exc.which, exc.k)
        _emit({"error": str(exc), "violating_groups": subset, "expectations": E, "kappa": kappa,
               "profile": profile_from(E, kappa).to_dict()}, args)
        print(f"some |E[A_S] - kappa_S| >= 1: groups {subset}", file=sys.stderr)
        return EXIT_PROFILE
    rep = b.as_report()
    rep["expectations"] = [float(e) for e in expectations(mu, P)]
    rep["kappa"] = kappa
    _emit(rep, args)
    return EXIT_OK


def cmd_productize(args) -> int:
    p = SparsePolynomial.from_dict(_read_json(args.poly))
    u = _numbers(args.point)
    try:
        res = productize(p, u, d=args.degree, tol=args.tol, seed=args.seed)
    except NotProductizable as exc:
        _emit({"error": str(exc), "productizable": False}, args)
        print(f"not productizable: {exc}", file=sys.stderr)
        return EXIT_PROFILE
    rep = res.matrix.to_dict()
    rep.update(value=res.value, target=res.target, upper=res.upper, lower=res.lower,
               vertices_tried=res.vertices_tried, productizable=True)
    _emit(rep, args)
    return EXIT_OK


def cmd_permanent(args) -> int:
    modes = [args.matrix is not None, args.scan is not None, args.minimize is not None]
    if sum(modes) != 1:
        raise UsageError("give exactly one of --matrix, --scan and --minimize")
    if args.matrix is not None:
        data = _read_json(args.matrix)
        rows = data["rows"] if isinstance(data, dict) and "rows" in data else data
        if args.exact:
            rows = [[Fraction(x) for x in r] for r in rows]
            rep = {"permanent": permanent(rows, exact=True)}
        else:
            rep = {"permanent": permanent(np.array(rows, dtype=float))}
    elif args.scan is not None:
        rep = min_per_scan(args.scan, args.n_max)
    else:
        spec = ColumnSumSpec(tuple(_numbers(args.minimize)))
        X, val, results = minimize_permanent(spec, seed=args.seed, restarts=args.restarts)
        R = rank_one_candidate(spec)
        rep = {"matrix": X, "value": val, "rank_one": R, "distance_to_rank_one": float(np.abs(X - R).max()),
               "restart_values": sorted(float(v) for v, _ in results)}
    _emit(rep, args)
    return EXIT_OK


def cmd_bernoulli(args) -> int:
    if (args.g is None) == (args.g_values is None):
        raise UsageError("give exactly one of --g and --g-values")
    g = _read_json(args.g) if args.g is not None else _numbers(args.g_values)
    if isinstance(g, dict):
        g = g.get("g")
    if not isinstance(g, list):
        raise UsageError("g table must be a JSON list or {\"g\": [...]}")
    val, params = extremal_bernoulli([float(x) for x in g], args.n, args.q, args.direction)
    _emit({"value": val, "params": [float(x) for x in params], "n": args.n, "q": args.q,
           "direction": args.direction}, args)
    return EXIT_OK


def cmd_tsp_audit(args) -> int:
    c = tsp_audit.TSPConstants(eps_half=args.eps_half, eps_eta=args.eps_eta)
    rep = json.loads(tsp_audit.audit_json(c))
    _emit(rep, args)
    return EXIT_OK if rep["all_pass"] else EXIT_VERIFY


def cmd_verify(args) -> int:
    rep = verify.run(args.suite, seed=args.seed, count=args.count, jobs=args.jobs)
    _emit(rep, args)
    return EXIT_OK if rep["passed"] else EXIT_VERIFY


# -- parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")

    parser = _Parser(prog="stablecap", description="Capacity bounds, strongly Rayleigh probability bounds "
                                                    "and related checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("capacity", parents=[common], help="capacity and the bound chain for a polynomial")
    p.add_argument("--poly", required=True, help="polynomial JSON file")
    p.add_argument("--kappa", required=True, help="comma-separated exponent")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("bound", parents=[common], help="bound chain from alpha and kappa alone")
    p.add_argument("--alpha", required=True)
    p.add_argument("--kappa", required=True)
    p.add_argument("--exact", type=float, default=None, help="known capacity, echoed for comparison")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sr-bound", parents=[common], help="probability bounds for a measure and a grouping")
    p.add_argument("--graph", help="weighted graph JSON (spanning tree measure)")
    p.add_argument("--measure", help="explicit measure JSON")
    p.add_argument("--groups", required=True, help="grouping JSON")
    p.add_argument("--kappa", required=True)
    p.set_defaults(func=cmd_sr_bound)

    p = sub.add_parser("productize", parents=[common], help="product of affine forms matching p at a point")
    p.add_argument("--poly", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--degree", type=int, default=None)
    p.set_defaults(func=cmd_productize, tol=1e-10)

    p = sub.add_parser("permanent", parents=[common], help="permanents and the minimizer experiments")
    p.add_argument("--matrix", help="square matrix JSON (list of rows or {\"rows\": ...})")
    p.add_argument("--exact", action="store_true", help="rational arithmetic; entries may be strings like \"1/3\"")
    p.add_argument("--scan", type=float, default=None, metavar="T", help="sparse vs rank-one scan at t = T")
    p.add_argument("--n-max", type=int, default=60)
    p.add_argument("--minimize", default=None, metavar="C", help="column sums, comma-separated")
    p.add_argument("--restarts", type=int, default=10)
    p.set_defaults(func=cmd_permanent)

    p = sub.add_parser("bernoulli-extremal", parents=[common], help="extremal Bernoulli sums")
    p.add_argument("--g", help="JSON file with the g table")
    p.add_argument("--g-values", help="comma-separated g table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--direction", choices=("min", "max"), default="min")
    p.set_defaults(func=cmd_bernoulli)

    p = sub.add_parser("tsp-audit", parents=[common], help="constant arithmetic audit")
    p.add_argument("--eps-half", default="0.0002")
    p.add_argument("--eps-eta", default="1e-10")
    p.set_defaults(func=cmd_tsp_audit)

    p = sub.add_parser("verify", parents=[common], help="randomized invariant suites")
    p.add_argument("suite", choices=verify.SUITES + ("all",))
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stablecap {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, TypeError) as exc:
        print(f"stablecap {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
