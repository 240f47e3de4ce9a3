"""Command-line entry point: ``cftransfer <command> ...``.

Exit codes: 0 all checks passed, 2 usage error, 3 budget exhausted, 4 a check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .cf_core import as_rational, check_length_bounds, cylinder_interval, format_rational
from .config import RunConfig, load_document
from .cylinder_nd import (
    cylinder_nd,
    diameter,
    diameter_bounds,
    digit_separation_check,
    sibling_separation_check,
)
from .digitset import banach_density, parse_set, relative_density, upper_density
from .errors import BudgetExceeded, CheckFailure, InvalidInput

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_CHECK = 0, 2, 3, 4


class UsageError(InvalidInput):
    pass


def _emit(obj, args, csv_text: str | None = None) -> None:
    if args.format == "csv":
        if csv_text is None:
            raise UsageError(f"the {args.command} command has no CSV output")
        text = csv_text
    else:
        text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> RunConfig:
    data = {}
    if args.config:
        doc = load_document(args.config)
        data.update(doc.get("run", doc))
    if args.budget is not None:
        data["budget"] = args.budget
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "jobs", None) is not None:
        data["jobs"] = args.jobs
    cfg = RunConfig.from_mapping(data)
    if cfg.budget <= 0:
        raise UsageError("budgets must be positive")
    return cfg


# ------------------------------------------------------------------------ parsing
def parse_digits(text: str) -> tuple[int, ...]:
    """``"2,1"`` -> (2, 1); errors name the offending position."""
    out = []
    for i, tok in enumerate(text.replace(",", " ").split(), start=1):
        if not tok.isdigit() or int(tok) < 1:
            raise UsageError(f"digit {i} ({tok!r}) is not a positive integer")
        out.append(int(tok))
    return tuple(out)


def parse_word_nd(text: str) -> tuple[tuple[int, ...], ...]:
    """Digit vectors separated by ``;``, coordinates by spaces or commas: ``"1 2; 3 4"``."""
    vecs = []
    for i, chunk in enumerate(text.split(";"), start=1):
        if not chunk.strip():
            continue
        try:
            vecs.append(parse_digits(chunk))
        except UsageError as exc:
            raise UsageError(f"vector {i}: {exc}") from None
    if vecs and len({len(v) for v in vecs}) != 1:
        raise UsageError("digit vectors have different dimensions")
    return tuple(vecs)


def _q(x) -> str:
    return format_rational(x)


# ----------------------------------------------------------------------- commands
def cmd_cylinder(args) -> int:
    if args.word is None and args.nd is None:
        raise UsageError("give --word or --nd")
    if args.word is not None:
        word = parse_digits(args.word)
        if not word:
            raise UsageError("empty word")
        I = cylinder_interval(word)
        b = check_length_bounds(word)
        ok = b.lower <= b.length <= b.upper
        _emit({"word": list(word), "interval": I.to_json(), "display": str(I),
               "length": _q(I.length), "lower_bound": _q(b.lower), "upper_bound": _q(b.upper),
               "bounds_ok": ok}, args)
        return EXIT_OK if ok else EXIT_CHECK
    word = parse_word_nd(args.nd)
    if not word:
        raise UsageError("empty word")
    d = len(word[0])
    c = cylinder_nd(word, d)
    lower, diam, upper = diameter_bounds(word, d)
    l2 = diameter(c, "l2")
    out = {"word": [list(v) for v in word], "d": d, "factors": [f.to_json() for f in c.factors],
           "side_lengths": [_q(x) for x in c.side_lengths], "diameter_linf": _q(diam),
           "diameter_l2": [_q(l2.lo), _q(l2.hi)], "lower_bound": _q(lower), "upper_bound": _q(upper),
           "bounds_ok": lower <= diam <= upper}
    ok = out["bounds_ok"]
    if args.separate:
        v, w = parse_word_nd(args.separate[0])[0], parse_word_nd(args.separate[1])[0]
        sib = sibling_separation_check(word, v, w)
        dig = digit_separation_check(word, v, w)
        out["separation"] = {"v": list(v), "w": list(w), "distance": _q(sib.distance),
                             "sibling_bound": _q(sib.bound), "sibling_ok": sib.ok,
                             "digit_bound": _q(dig.bound), "digit_ok": dig.ok}
        ok = ok and sib.ok and dig.ok
    _emit(out, args)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_exponent(args) -> int:
    from .exponents import lambda_trace, s_sharp, s_star

    S = parse_set(args.set)
    cfg = _config(args)
    tol = as_rational(args.tol)
    if args.kind == "s_star":
        b = s_star(S, tol, cfg)
    elif args.kind == "s_sharp":
        b = s_sharp(S, tol, cfg)
    else:
        b = lambda_trace(S, tol, args.search, cfg)
    out = {"set": args.set, **b.to_json()}
    if b.status not in ("bracket", "upper_bound"):
        out["reason"] = b.status
    _emit(out, args)
    if b.status == "budget":
        return EXIT_BUDGET
    return EXIT_OK if b.status in ("bracket", "upper_bound") else EXIT_CHECK


def cmd_construct(args) -> int:
    from .transference import ConstructionSchedule, construct, verify_schedule

    if args.verify:
        rep = verify_schedule(ConstructionSchedule.from_json(load_document(args.verify)))
        _emit({"verified": rep.ok, "mismatches": rep.mismatches, "failures": rep.failures}, args)
        return EXIT_OK if rep.ok else EXIT_CHECK
    t, L = as_rational(args.t), as_rational(args.L)
    if not t > L > 1:
        raise UsageError("need t > L > 1")
    if args.stages < 1:
        raise UsageError("need at least one stage")
    A1, A2 = parse_set(args.ambient), parse_set(args.target)
    seed = parse_set(args.seed_set) if args.seed_set else None
    sched = construct(A1, A2, t, L, args.stages, seed=seed, budget=_config(args).budget)
    _emit(sched.to_json(), args)
    complete = sched.stages == args.stages
    if not complete:
        print(f"built {sched.stages} of {args.stages} stages: " + "; ".join(sched.notes), file=sys.stderr)
    return EXIT_OK if complete and sched.certified and all(r["ok"] for r in sched.density) else EXIT_CHECK


def cmd_moran(args) -> int:
    from .moran import MoranSpec, SeedParams, enumerate_tree, moran_lower_bound, seed_moran_spec

    cfg = _config(args)
    if args.tree is not None:
        if not args.seed_set:
            raise UsageError("--tree needs --seed-set")
        p = SeedParams(as_rational(args.t), as_rational(args.L), parse_set(args.seed_set))
        tree = enumerate_tree(p, args.tree, node_budget=args.node_budget, subsample=not args.full,
                              budget=cfg.budget)
        _emit(tree.to_json(), args, tree.leaf_csv())
        return EXIT_OK if tree.ok else EXIT_CHECK
    if args.cantor:
        spec = MoranSpec.cantor()
    elif args.seed_set:
        p = SeedParams(as_rational(args.t), as_rational(args.L), parse_set(args.seed_set))
        spec = seed_moran_spec(p, args.alpha, args.n, budget=cfg.budget)
    else:
        raise UsageError("give --cantor or --seed-set")
    rep = moran_lower_bound(spec, args.n)
    ok = rep.bounded_by(0.05)
    out = rep.to_json()
    out["bounded_by_d"] = ok
    _emit(out, args, rep.to_csv())
    return EXIT_OK if ok else EXIT_CHECK


def cmd_density(args) -> int:
    S = parse_set(args.set)
    budget = _config(args).budget
    try:
        horizons = [int(x) for x in args.N]
    except ValueError:
        raise UsageError(f"horizons must be integers, got {args.N}") from None
    if args.kind == "upper":
        rep = upper_density(S, horizons, budget)
    elif args.kind == "relative":
        if not args.within:
            raise UsageError("--kind relative needs --within")
        rep = relative_density(S, parse_set(args.within), horizons, budget)
    else:
        rep = banach_density(S, horizons[-1], "exhaustive", args.bound, budget)
    _emit(rep.to_json(), args, rep.to_csv())
    return EXIT_OK


def cmd_suite(args) -> int:
    from .suite import CRITERIA, criterion_11, dumps, report, run_criteria

    if not args.all and not args.only:
        raise UsageError("give --all or --only")
    try:
        ids = sorted(CRITERIA) if args.all else sorted({int(x) for x in args.only.split(",")})
    except ValueError:
        raise UsageError(f"--only expects comma-separated integers, got {args.only!r}") from None
    main_ids = [i for i in ids if i != 11]
    results = run_criteria(main_ids, args.seed, max(1, args.jobs))
    if 11 in ids:
        results.append(criterion_11(args.seed))
    rep = report(results, args.seed)
    text = dumps(rep)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    for r in results:
        print(r.line())
    if args.format == "json" and not args.out:
        sys.stdout.write(text)
    return EXIT_OK if rep["all_passed"] else EXIT_CHECK


# ------------------------------------------------------------------------ parser
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", help="TOML or JSON document with run settings")
    common.add_argument("--budget", type=int, help="enumeration budget (default from CFTRANSFER_BUDGET)")

    ap = argparse.ArgumentParser(prog="cftransfer", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cylinder", parents=[common], help="cylinder endpoints, lengths and separation")
    p.add_argument("--word", help="1-d word, e.g. 2,1")
    p.add_argument("--nd", help='d-dimensional word, e.g. "1 2; 3 4"')
    p.add_argument("--separate", nargs=2, metavar=("V", "W"), help="two child digit vectors")
    p.set_defaults(func=cmd_cylinder)

    p = sub.add_parser("exponent", parents=[common], help="bracket s_sharp, s_star or the trace exponent")
    p.add_argument("--set", required=True)
    p.add_argument("--kind", choices=("s_sharp", "s_star", "lambda"), required=True)
    p.add_argument("--tol", default="1/100")
    p.add_argument("--search", choices=("auto", "product", "diagonal", "coordinate"), default="auto")
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("construct", parents=[common], help="build or verify an insertion schedule")
    p.add_argument("--ambient", default="full1")
    p.add_argument("--target", default="evens1")
    p.add_argument("--seed-set", help="seed alphabet (default: ambient minus target)")
    p.add_argument("--stages", type=int, default=2)
    p.add_argument("--t", default="2")
    p.add_argument("--L", default="3/2")
    p.add_argument("--verify", metavar="SCHEDULE", help="re-check a serialized schedule")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("moran", parents=[common], help="Moran lower-bound ratios and cylinder trees")
    p.add_argument("--cantor", action="store_true")
    p.add_argument("--seed-set")
    p.add_argument("--t", default="10")
    p.add_argument("--L", default="2")
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--tree", type=int, metavar="DEPTH")
    p.add_argument("--node-budget", type=int, default=10_000)
    p.add_argument("--full", action="store_true", help="no subsampling; truncate instead")
    p.set_defaults(func=cmd_moran)

    p = sub.add_parser("density", parents=[common], help="upper, relative or Banach density")
    p.add_argument("--set", required=True)
    p.add_argument("--N", nargs="+", required=True)
    p.add_argument("--kind", choices=("upper", "relative", "banach"), default="upper")
    p.add_argument("--within", help="ambient set for --kind relative")
    p.add_argument("--bound", type=int, default=0, help="translate range for --kind banach")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("suite", parents=[common], help="run the acceptance checks")
    p.add_argument("--all", action="store_true")
    p.add_argument("--only", help="comma-separated criterion ids")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_suite, format="text")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except InvalidInput as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
