"""Formula trees for FO with counting, monadic set quantifiers and the Rescher quantifier."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Union

from ..structures import Renaming, Vocabulary, VocabularyError


class FormulaError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class SetMember:
    setvar: str
    var: str


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class CountExists:
    """At least `k` witnesses for `var`."""

    k: int
    var: str
    body: "Formula"

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise FormulaError(f"counting threshold must be >= 1, got {self.k!r}")


@dataclass(frozen=True)
class ExistsSet:
    setvar: str
    body: "Formula"


@dataclass(frozen=True)
class ForallSet:
    setvar: str
    body: "Formula"


@dataclass(frozen=True)
class Rescher:
    """True iff |{v : left}| <= |{v : right}| for the shared bound tuple v."""

    vars: tuple[str, ...]
    left: "Formula"
    right: "Formula"

    def __post_init__(self):
        if not self.vars:
            raise FormulaError("Rescher quantifier needs at least one bound variable")
        if len(set(self.vars)) != len(self.vars):
            raise FormulaError(f"repeated bound variable in {self.vars}")


Formula = Union[Atom, Eq, SetMember, Not, And, Or, Implies, Iff, Exists, Forall,
                CountExists, ExistsSet, ForallSet, Rescher]

BINARY = (And, Or, Implies, Iff)
FO_QUANTIFIERS = (Exists, Forall, CountExists)
SET_QUANTIFIERS = (ExistsSet, ForallSet)


def conj(*fs: Formula) -> Formula:
    if not fs:
        raise FormulaError("empty conjunction")
    return reduce(And, fs)


def disj(*fs: Formula) -> Formula:
    if not fs:
        raise FormulaError("empty disjunction")
    return reduce(Or, fs)


def exists(vars_: str, body: Formula) -> Formula:
    """exists("x y", body) nests one quantifier per name, outermost first."""
    for v in reversed(vars_.split()):
        body = Exists(v, body)
    return body


def forall(vars_: str, body: Formula) -> Formula:
    for v in reversed(vars_.split()):
        body = Forall(v, body)
    return body


def atom(rel: str, *args: str) -> Atom:
    return Atom(rel, tuple(args))


def children(f: Formula) -> tuple:
    if isinstance(f, (Atom, Eq, SetMember)):
        return ()
    if isinstance(f, Not):
        return (f.sub,)
    if isinstance(f, BINARY) or isinstance(f, Rescher):
        return (f.left, f.right)
    return (f.body,)


def free_vars(f: Formula) -> tuple[frozenset, frozenset]:
    """(free first-order variables, free set variables)."""
    if isinstance(f, Atom):
        return frozenset(f.args), frozenset()
    if isinstance(f, Eq):
        return frozenset((f.left, f.right)), frozenset()
    if isinstance(f, SetMember):
        return frozenset((f.var,)), frozenset((f.setvar,))
    if isinstance(f, FO_QUANTIFIERS):
        v, s = free_vars(f.body)
        return v - {f.var}, s
    if isinstance(f, SET_QUANTIFIERS):
        v, s = free_vars(f.body)
        return v, s - {f.setvar}
    if isinstance(f, Rescher):
        v1, s1 = free_vars(f.left)
        v2, s2 = free_vars(f.right)
        return (v1 | v2) - set(f.vars), s1 | s2
    vs, ss = frozenset(), frozenset()
    for c in children(f):
        v, s = free_vars(c)
        vs, ss = vs | v, ss | s
    return vs, ss


def quantifier_rank(f: Formula) -> int:
    if isinstance(f, (Atom, Eq, SetMember)):
        return 0
    inner = max(quantifier_rank(c) for c in children(f))
    if isinstance(f, (Not,) + BINARY):
        return inner
    return inner + 1


def variables(f: Formula) -> frozenset:
    """Every first-order variable name occurring in f, free or bound."""
    if isinstance(f, Atom):
        return frozenset(f.args)
    if isinstance(f, Eq):
        return frozenset((f.left, f.right))
    if isinstance(f, SetMember):
        return frozenset((f.var,))
    out = frozenset()
    for c in children(f):
        out |= variables(c)
    if isinstance(f, FO_QUANTIFIERS):
        out |= {f.var}
    elif isinstance(f, Rescher):
        out |= set(f.vars)
    return out


def symbol_arities(f: Formula) -> dict[str, int]:
    """Relation symbols of f with their arities; inconsistent use raises."""
    out: dict[str, int] = {}

    def walk(g):
        if isinstance(g, Atom):
            prev = out.setdefault(g.rel, len(g.args))
            if prev != len(g.args):
                raise FormulaError(f"symbol {g.rel!r} used with arities {prev} and {len(g.args)}")
            return
        for c in children(g):
            walk(c)

    walk(f)
    return out


def vocabulary_of(f: Formula) -> Vocabulary:
    return Vocabulary.of(*sorted(symbol_arities(f).items()))


def map_atoms(f: Formula, fn) -> Formula:
    """Rebuild f with every Atom replaced by fn(atom)."""
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, (Eq, SetMember)):
        return f
    if isinstance(f, Not):
        return Not(map_atoms(f.sub, fn))
    if isinstance(f, BINARY):
        return type(f)(map_atoms(f.left, fn), map_atoms(f.right, fn))
    if isinstance(f, CountExists):
        return CountExists(f.k, f.var, map_atoms(f.body, fn))
    if isinstance(f, FO_QUANTIFIERS):
        return type(f)(f.var, map_atoms(f.body, fn))
    if isinstance(f, SET_QUANTIFIERS):
        return type(f)(f.setvar, map_atoms(f.body, fn))
    return Rescher(f.vars, map_atoms(f.left, fn), map_atoms(f.right, fn))


def rename_symbols(f: Formula, r: Renaming | dict) -> Formula:
    m = r.name_map() if isinstance(r, Renaming) else dict(r)
    used = symbol_arities(f)
    missing = sorted(set(used) - set(m))
    if missing:
        raise VocabularyError(f"symbols {missing} not in the renaming's domain")
    return map_atoms(f, lambda a: Atom(m[a.rel], a.args))


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in children(f))
