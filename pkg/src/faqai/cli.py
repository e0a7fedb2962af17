"""Command-line entry point: eval, width, train, kmeans, prob, oracle, bench.

Results go to standard output as JSON; ``--counters`` writes operation counters
as JSON lines to standard error.  Exit status is 0 on success, 1 on usage
errors and 2 on data or planning errors.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction

import numpy as np

from . import engine, heavylight, ml, oracle, probiq, widths
from .errors import FaqaiError
from .generators import cycle_instance, path_instance
from .query import load_query, load_query_db, ligament
from .relation import AnnotatedRelation, Counters

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _json_value(v):
    if isinstance(v, Fraction):
        return widths.fraction_str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def relation_json(rel: AnnotatedRelation) -> dict:
    out = {"schema": list(rel.schema), "semiring": rel.semiring.id}
    if not rel.schema:
        out["value"] = _json_value(rel.scalar())
    else:
        out["rows"] = [[*map(_json_value, t), _json_value(a)] for t, a in rel.sorted_items()]
    return out


def _emit(obj):
    print(json.dumps(obj, sort_keys=False, default=_json_value))


def _emit_counters(args, counters: Counters, **extra):
    if getattr(args, "counters", False):
        print(json.dumps({"counters": counters.as_dict(), **extra}), file=sys.stderr)


def cmd_eval(args):
    q, db = load_query_db(args.query, args.data)
    p = engine.plan(q, relaxed=not args.strict_td)
    if args.plan_only:
        _emit({"plan": p.describe()})
        return
    counters = Counters()
    rel = engine.evaluate(db, q, p, counters)
    _emit({"result": relation_json(rel), "width": widths.fraction_str(p.width)})
    _emit_counters(args, counters)


def cmd_width(args):
    q = load_query(args.query)
    rep = widths.width(q.hypergraph(), args.kind, q.free)
    _emit(rep.to_json())


def _train_config(args) -> ml.TrainConfig:
    return ml.TrainConfig(lam=args.lam, C=args.c, eps=args.eps, max_iters=args.iters, seed=args.seed,
                          d=args.d, alpha_scalene=args.alpha, eps_insensitive=args.eps_width,
                          init=args.init)


def cmd_train(args):
    fq = ml.load_feature_query(args.query, args.data)
    cfg = _train_config(args)
    loss = ml.canonical_loss(args.loss)
    if args.solver == "cutting-plane":
        if loss != "hinge":
            raise UsageError("the cutting-plane solver trains the hinge loss only")
        res = ml.cutting_plane_train(fq, cfg)
        out = res.params.to_json()
        out.update(solver="cutting-plane", xi=res.xi, violation=res.violation, rounds=res.iterations)
    else:
        params = ml.bgd_train(fq, loss, cfg)
        out = params.to_json()
        out.update(solver="bgd", objective=params.history[-1] if params.history else None)
    out["loss"] = loss
    _emit(out)


def cmd_kmeans(args):
    fq = ml.load_feature_query(args.query, args.data)
    cfg = ml.TrainConfig(max_iters=args.iters, seed=args.seed)
    res = ml.kmeans_fit(fq, args.k, cfg)
    _emit(res.to_json())


def cmd_prob(args):
    q, db = probiq.load_iq(args.query, args.data)
    _emit({"probability": probiq.iq_probability(db, q)})


def _is_iq(path) -> bool:
    with open(path, encoding="utf-8") as f:
        return "inequalities" in json.load(f)


def cmd_oracle(args):
    if _is_iq(args.query):
        q, db = probiq.load_iq(args.query, args.data)
        _emit({"probability": oracle.oracle_worlds(db, q)})
        return
    q, db = load_query_db(args.query, args.data)
    _emit({"result": relation_json(oracle.oracle_eval(db, q))})


def cmd_bench(args):
    rng = random.Random(args.seed)
    sizes = args.n
    for n in sizes:
        counters = Counters()
        if args.shape == "cycle4":
            db = cycle_instance(rng, n, args.adversarial)
            value = heavylight.count_4cycle(db, counters=counters)
            rec = {"shape": args.shape, "n": n, "value": value}
        else:
            db = path_instance(rng, n, args.adversarial)
            res = heavylight.count_path_ineq(db, ligament({"a": 1, "d": -1}), counters=counters)
            rec = {"shape": args.shape, "n": n, "value": res.value, "u_size": res.u_size,
                   "w_size": res.w_size, "threshold": res.threshold}
        rec["counters"] = counters.as_dict()
        _emit(rec)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="faqai", description="FAQ-AI evaluation, widths and in-database learning")
    top.add_argument("--seed", type=int, default=0, help="seed for every randomized step")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data=True):
        p.add_argument("-q", "--query", required=True, help="query JSON file")
        if data:
            p.add_argument("-d", "--data", required=True, help="directory of <relation>.csv files")
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        p.add_argument("--counters", action="store_true", help="report operation counters on stderr")

    p = sub.add_parser("eval", help="evaluate a query with the engine")
    common(p)
    p.add_argument("--plan-only", action="store_true", help="print the plan without evaluating")
    p.add_argument("--strict-td", action="store_true",
                   help="plan over ordinary decompositions (ligaments inside one bag)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("width", help="compute a width parameter exactly")
    common(p, data=False)
    p.add_argument("--kind", required=True,
                   choices=widths.KINDS + tuple(widths.KIND_ALIASES), help="width to compute")
    p.set_defaults(func=cmd_width)

    p = sub.add_parser("train", help="train a linear model over a feature join")
    common(p)
    p.add_argument("--loss", required=True, choices=("huber", "hinge", "eps", "ordinal", "scalene",
                                                     "eps_insensitive", "ordinal_hinge"))
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--c", type=float, default=1.0, help="SVM regularization for the cutting-plane solver")
    p.add_argument("--eps", type=float, default=1e-3, help="cutting-plane tolerance")
    p.add_argument("--eps-width", type=float, default=0.1, help="width of the insensitive zone")
    p.add_argument("--alpha", type=float, default=0.5, help="scalene asymmetry in (0,1)")
    p.add_argument("--d", type=int, default=None, help="number of ordinal levels")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--init", choices=("random", "zeros"), default="random")
    p.add_argument("--solver", choices=("bgd", "cutting-plane"), default="bgd")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("kmeans", help="Lloyd's k-means over a feature join")
    common(p)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--iters", type=int, default=100)
    p.set_defaults(func=cmd_kmeans)

    p = sub.add_parser("prob", help="probability of an inequality query on independent tuples")
    common(p)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("oracle", help="brute-force reference for eval or prob inputs")
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="degree-partitioned counts with operation counters")
    p.add_argument("--shape", required=True, choices=("cycle4", "path4-ineq"))
    p.add_argument("--n", type=int, nargs="+", required=True, help="instance size(s)")
    p.add_argument("--adversarial", action="store_true")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_bench)
    return top


def thread_cap() -> int:
    """Validate FAQAI_THREADS up front so a typo is a usage error rather than a silent fallback."""
    raw = os.environ.get("FAQAI_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise UsageError(f"faqai: error: FAQAI_THREADS must be a positive integer, got {raw!r}")
    return n


def main(argv=None) -> int:
    parser = build_parser()
    try:
        thread_cap()
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except (FaqaiError, OSError, json.JSONDecodeError) as e:
        print(f"faqai: error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
