"""Command line front end.

Exit codes: 0 success (every experiment check passed), 1 a check failed,
2 bad usage or bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

from . import corpus as C
from . import generators as G
from .derand import (PartialDesign, build_design, pack_relations, prg_probability, suggest_prg_parameters)
from .experiments import EXPERIMENTS, BirthdayParams
from .logic.evaluator import evaluate, query
from .logic.parser import parse, to_text
from .logic.syntax import FormulaError, free_vars
from .randsem import (GapSpec, RandomSpace, amplify, check_gap, exact_probability, mc_probability)
from .structures import Structure, StructureError, Vocabulary, make_arithmetic, make_empty_structure


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()] if text else []


def _read_text(arg: str) -> str:
    if arg.startswith("@"):
        with open(arg[1:]) as fh:
            return fh.read()
    return arg


def _structure(path: str) -> Structure:
    if path == "-":
        return Structure.loads(sys.stdin.read())
    with open(path) as fh:
        return Structure.loads(fh.read())


def _vocab(text: str) -> Vocabulary:
    return Vocabulary.of(*[t.strip() for t in text.split(",") if t.strip()]) if text else Vocabulary()


def _assignment(items) -> dict:
    out = {}
    for item in items or ():
        name, _, val = item.partition("=")
        if not val:
            raise UsageError(f"assignment {item!r} is not of the form x=3")
        out[name.strip()] = int(val)
    return out


def _emit(obj, fmt: str, out=None):
    out = out or sys.stdout
    if fmt == "json":
        json.dump(obj, out, indent=2, default=str)
        out.write("\n")
        return
    rows = obj if isinstance(obj, list) else [obj]
    flat = [{k: (json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in r.items()} for r in rows]
    keys = list(dict.fromkeys(k for r in flat for k in r))
    w = csv.DictWriter(out, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    w.writerows(flat)


# ---------------------------------------------------------------- subcommands


def cmd_gen(args):
    fam = args.family
    if fam == "empty":
        A = make_empty_structure(args.n)
    elif fam == "arithmetic":
        A = make_arithmetic(args.n, args.which.split(","))
    elif fam in ("cfi", "tcfi"):
        base = G.random_3regular(args.vertices, args.seed) if args.base == "random" else G.builtin_base_graph(args.base)
        spec = G.CfiSpec(base, frozenset(_ints(args.twist)))
        A = G.gen_cfi(spec) if fam == "cfi" else G.gen_tcfi(spec, cap=args.ba_cap)
    elif fam == "matching":
        A = G.gen_matching_ba(G.MatchingBaSpec(args.p, args.k))
    elif fam == "sparse":
        A = G.gen_sparse_additive(_ints(args.Q))
    else:
        raise UsageError(f"unknown family {fam!r}")
    sys.stdout.write(A.dumps() + "\n")
    return 0


def cmd_corpus(args):
    if args.name is None:
        rows = [{"name": e.name, "vocabulary": str(e.vocabulary), "family": e.family, "summary": e.summary}
                for e in C.CORPUS.values()]
        _emit(rows, args.format)
        return 0
    entry = C.CORPUS.get(args.name)
    if entry is None:
        raise UsageError(f"unknown corpus entry {args.name!r}; try `rlogic corpus`")
    params = dict(entry.params)
    if args.param:
        for item in args.param:
            k, _, v = item.partition("=")
            params[k] = json.loads(v)
    print(to_text(entry.builder(**params)))
    return 0


def _formula(args, vocab=None):
    return parse(_read_text(args.formula), vocab)


def cmd_eval(args):
    A = _structure(args.structure)
    phi = _formula(args, A.vocabulary)
    asg = _assignment(args.assign)
    fv = sorted(free_vars(phi)[0] - set(asg))
    if fv:
        order = tuple(fv) + tuple(sorted(free_vars(phi)[0] & set(asg)))
        fixed = tuple(asg[v] for v in order[len(fv):])
        rows = sorted(t[:len(fv)] for t in query(A, phi, order=order) if t[len(fv):] == fixed)
        _emit({"free": fv, "tuples": [list(t) for t in rows]}, args.format)
    else:
        _emit({"holds": evaluate(A, phi, asg)}, args.format)
    return 0


def _space(args):
    A = _structure(args.structure)
    rho = _vocab(args.random)
    return RandomSpace(A, rho), parse(_read_text(args.formula), A.vocabulary.union(rho))


def _estimate(space, phi, asg, args):
    if args.mode == "exact" or (args.mode == "auto" and space.bit_budget <= args.cap):
        return exact_probability(space, phi, asg, cap=args.cap)
    if args.samples:
        return mc_probability(space, phi, asg, samples=args.samples, seed=args.seed, delta=args.delta,
                              workers=args.workers)
    return mc_probability(space, phi, asg, epsilon=args.epsilon, delta=args.delta, seed=args.seed,
                          workers=args.workers)


def cmd_prob(args):
    space, phi = _space(args)
    _emit(_estimate(space, phi, _assignment(args.assign), args).to_dict(), args.format)
    return 0


def cmd_gap(args):
    rho = _vocab(args.random)
    gap = GapSpec(Fraction(args.alpha), Fraction(args.beta))
    rows = []
    for path in args.structures:
        A = _structure(path)
        phi = parse(_read_text(args.formula), A.vocabulary.union(rho))
        space = RandomSpace(A, rho)
        mc = {"seed": args.seed, "delta": args.delta}
        if args.samples:
            mc["samples"] = args.samples
        else:
            mc["epsilon"] = args.epsilon
        cls = check_gap([space], phi, gap, cap=args.cap, **mc)[0]
        rows.append({"structure": path, "class": cls.value})
    _emit(rows, args.format)
    return 0


def cmd_amplify(args):
    rho = _vocab(args.random)
    phi = parse(_read_text(args.formula))
    f, v = amplify(phi, rho, args.n, args.l)
    _emit({"formula": to_text(f), "random_vocabulary": str(v)}, args.format)
    return 0


def cmd_design(args):
    if args.action == "build":
        if args.m is None:
            m, d = suggest_prg_parameters(args.n, args.depth)
        else:
            m, d = args.m, args.degree if args.degree is not None else 1
        _emit(build_design(args.n, m, d).to_dict(), args.format)
        return 0
    with open(args.file) as fh:
        D = PartialDesign.from_dict(json.load(fh))
    bad = D.problems()
    _emit({"valid": not bad, "problems": bad, "max_intersection": D.max_intersection()}, args.format)
    return 0 if not bad else 1


def cmd_prg(args):
    space, phi = _space(args)
    if args.pack:
        packed, R = pack_relations(phi, space.random_vocab, space.base.vocabulary)
        space, phi = RandomSpace(space.base, Vocabulary((R,))), packed
    if args.design:
        with open(args.design) as fh:
            D = PartialDesign.from_dict(json.load(fh))
    else:
        m, d = (args.m, args.degree) if args.m else suggest_prg_parameters(space.bit_budget, args.depth)
        D = build_design(space.bit_budget, m, d)
    prg = prg_probability(space, phi, D, args.mode, seed=args.seed, samples=args.samples or 1000)
    true = _estimate(space, phi, None, args)
    _emit({"generator": prg.to_dict(), "true": true.to_dict(),
           "difference": abs(float(prg.value) - float(true.value)),
           "design": {"n": D.n, "m": D.m, "degree_bound": D.degree_bound, "l": D.l}}, args.format)
    return 0


def cmd_experiment(args):
    name = args.name
    fn = EXPERIMENTS[name]
    kw = {"seed": args.seed}
    if args.samples and name in ("birthday", "cfi", "rescher", "sparse"):
        kw["samples"] = args.samples
    if name == "cfi":
        kw["tier"] = args.tier
        if args.base:
            kw["base"] = args.base
    rep = fn(**kw)
    doc = rep.to_dict()
    if args.format == "json":
        _emit(doc, "json")
    else:
        _emit([{"experiment": doc["experiment"], **c} for c in doc["checks"]], "csv")
    return 0 if rep.passed else 1


# ---------------------------------------------------------------- parser


def _common(defaults: bool) -> argparse.ArgumentParser:
    """Global flags, accepted both before and after the subcommand."""
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(0), help="64-bit seed for all randomness")
    p.add_argument("--samples", type=int, default=d(None), help="Monte Carlo sample count")
    p.add_argument("--cap", type=int, default=d(24), help="largest bit budget for exact enumeration")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"))
    p.add_argument("--tier", choices=("fast", "slow"), default=d("fast"))
    return p


def build_parser() -> argparse.ArgumentParser:
    sub_common = _common(False)
    ap = argparse.ArgumentParser(prog="rlogic", parents=[_common(True)],
                                 description="Randomised finite-model-theory workbench.")
    sp = ap.add_subparsers(dest="command", required=True)

    g = sp.add_parser("gen", parents=[sub_common], help="emit a structure as JSON")
    g.add_argument("family", choices=("empty", "arithmetic", "cfi", "tcfi", "matching", "sparse"))
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--which", default="leq,plus,times")
    g.add_argument("--base", default="k4", choices=G.BASE_GRAPHS + ("random",))
    g.add_argument("--vertices", type=int, default=6, help="vertex count for --base random")
    g.add_argument("--twist", default="", help="comma separated edge indices")
    g.add_argument("--ba-cap", type=int, default=G.DEFAULT_TCFI_CAP)
    g.add_argument("--p", type=int, default=3)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--Q", default="1,4,13,40")
    g.set_defaults(fn=cmd_gen)

    c = sp.add_parser("corpus", parents=[sub_common], help="list or print corpus formulas")
    c.add_argument("name", nargs="?")
    c.add_argument("--param", action="append", help="builder parameter as key=JSON")
    c.set_defaults(fn=cmd_corpus)

    def formula_args(p, structure=True):
        if structure:
            p.add_argument("structure", help="structure JSON file, or - for stdin")
        p.add_argument("formula", help="formula text, or @file")

    def prob_args(p):
        p.add_argument("--random", required=True, help="random symbols, e.g. R/1,S/2")
        p.add_argument("--mode", choices=("auto", "exact", "mc"), default="auto")
        p.add_argument("--epsilon", type=float, default=0.02)
        p.add_argument("--delta", type=float, default=0.001)
        p.add_argument("--workers", type=int, default=1)

    e = sp.add_parser("eval", parents=[sub_common], help="evaluate a formula or query")
    formula_args(e)
    e.add_argument("--assign", action="append", help="x=3")
    e.set_defaults(fn=cmd_eval)

    p = sp.add_parser("prob", parents=[sub_common], help="satisfaction probability")
    formula_args(p)
    prob_args(p)
    p.add_argument("--assign", action="append")
    p.set_defaults(fn=cmd_prob)

    q = sp.add_parser("gap", parents=[sub_common], help="classify structures against an (alpha, beta] gap")
    q.add_argument("formula")
    q.add_argument("structures", nargs="+")
    q.add_argument("--random", required=True)
    q.add_argument("--alpha", required=True)
    q.add_argument("--beta", required=True)
    q.add_argument("--epsilon", type=float, default=0.02)
    q.add_argument("--delta", type=float, default=0.001)
    q.set_defaults(fn=cmd_gap)

    a = sp.add_parser("amplify", parents=[sub_common], help="l-of-n threshold over renamed copies")
    formula_args(a, structure=False)
    a.add_argument("--random", required=True)
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--l", type=int, default=1)
    a.set_defaults(fn=cmd_amplify)

    d = sp.add_parser("design", parents=[sub_common], help="polynomial-graph designs")
    dsub = d.add_subparsers(dest="action", required=True)
    db = dsub.add_parser("build", parents=[sub_common])
    db.add_argument("--n", type=int, required=True)
    db.add_argument("--m", type=int)
    db.add_argument("--degree", type=int)
    db.add_argument("--depth", type=int, default=0)
    db.set_defaults(fn=cmd_design)
    dc = dsub.add_parser("check", parents=[sub_common])
    dc.add_argument("file")
    dc.set_defaults(fn=cmd_design)

    r = sp.add_parser("prg", parents=[sub_common], help="generator versus true probability")
    rsub = r.add_subparsers(dest="action", required=True)
    rc = rsub.add_parser("compare", parents=[sub_common])
    formula_args(rc)
    prob_args(rc)
    rc.set_defaults(mode="exact")
    rc.add_argument("--design", help="design JSON file")
    rc.add_argument("--m", type=int)
    rc.add_argument("--degree", type=int, default=1)
    rc.add_argument("--depth", type=int, default=0)
    rc.add_argument("--pack", action="store_true", help="pack random symbols into one relation first")
    rc.set_defaults(fn=cmd_prg)

    x = sp.add_parser("experiment", parents=[sub_common], help="run a reproduction experiment")
    x.add_argument("name", choices=sorted(EXPERIMENTS))
    x.add_argument("--base", choices=G.BASE_GRAPHS)
    x.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, FormulaError, StructureError, ValueError, KeyError, OSError) as exc:
        print(f"rlogic: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
