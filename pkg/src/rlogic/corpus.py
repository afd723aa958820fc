"""Builders for the named formulas used by the experiments.

Each builder returns a plain Formula tree. Where a formula is written in
text it goes through the parser, so printing and re-parsing is the identity
on everything here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .logic.parser import parse
from .logic.syntax import (And, Atom, CountExists, Eq, Exists, ExistsSet, Forall, Formula, FormulaError, Iff,
                           Implies, Not, Or, Rescher, SetMember, atom, conj, disj, free_vars, map_atoms, symbol_arities)
from .structures import Vocabulary, VocabularyError

# ---------------------------------------------------------------- ordered


def _phi(i: int, f: str, a: str, b: str) -> Formula:
    if i == 0:
        return Forall(a, atom("leq", f, a))
    # a is the element just below f; b ranges over the interval [a, f]
    return Exists(a, Forall(b, conj(
        _phi(i - 1, a, b, f),
        Not(Eq(f, a)),
        atom("leq", a, f),
        Implies(And(atom("leq", a, b), atom("leq", b, f)), Or(Eq(a, b), Eq(f, b))),
    )))


def phi_ith(i: int) -> Formula:
    """phi(x) true exactly of element i of the leq order; uses three variables."""
    if i < 0:
        raise ValueError("i must be nonnegative")
    return _phi(i, "x", "y", "z")


# ---------------------------------------------------------------- isolated-vertex patterns


def _isolated(x: str, y: str = "y") -> Formula:
    return Forall(y, Not(atom("E", x, y)))


def _pattern(k: int, S, x: str) -> Formula:
    S = set(S)
    if not S <= set(range(1, k + 1)):
        raise ValueError(f"{sorted(S)} is not a subset of 1..{k}")
    lits = [atom(f"R{i}", x) if i in S else Not(atom(f"R{i}", x)) for i in range(1, k + 1)]
    return conj(*lits)


def psi_S(k: int, S) -> Formula:
    """Some isolated vertex carries exactly the R-pattern S (S within 1..k)."""
    if k < 1:
        raise ValueError("k must be positive")
    return Exists("x", And(_isolated("x"), _pattern(k, S, "x")))


def psi_family(k: int, family) -> Formula:
    family = [frozenset(S) for S in family]
    if not family:
        raise ValueError("family must be nonempty")
    if len(set(family)) != len(family):
        raise ValueError("family members must be distinct")
    return disj(*(psi_S(k, S) for S in family))


def pattern_vocabulary(k: int) -> Vocabulary:
    return Vocabulary.of(*(f"R{i}/1" for i in range(1, k + 1)))


def phi_one_isolated() -> Formula:
    """Exactly one vertex has no E-neighbour."""
    return parse("exists x. (forall y. !E(x, y)) & (forall z. (forall y. !E(z, y)) -> z = x)")


def gap_sentence(k: int, family, chi: Formula) -> Formula:
    """one-isolated -> (chi & psi_family): probability p, 0 or 1 by case."""
    return Implies(phi_one_isolated(), And(chi, psi_family(k, family)))


# ---------------------------------------------------------------- coin


def coin_formula(phi_c: Formula, symbol: str = "R0") -> Formula:
    vs, ss = free_vars(phi_c)
    if len(vs) != 1 or ss:
        raise FormulaError(f"phi_c must have exactly one free element variable, has {sorted(vs)} and sets {sorted(ss)}")
    (v,) = vs
    return Exists(v, And(atom(symbol, v), phi_c))


def _sets_to_atoms(f: Formula, names: dict) -> Formula:
    if isinstance(f, SetMember):
        return Atom(names[f.setvar], (f.var,)) if f.setvar in names else f
    if isinstance(f, (Atom, Eq)):
        return f
    if isinstance(f, Not):
        return Not(_sets_to_atoms(f.sub, names))
    if isinstance(f, (And, Or, Implies, Iff)):
        return type(f)(_sets_to_atoms(f.left, names), _sets_to_atoms(f.right, names))
    if isinstance(f, CountExists):
        return CountExists(f.k, f.var, _sets_to_atoms(f.body, names))
    if isinstance(f, (Exists, Forall)):
        return type(f)(f.var, _sets_to_atoms(f.body, names))
    if isinstance(f, Rescher):
        return Rescher(f.vars, _sets_to_atoms(f.left, names), _sets_to_atoms(f.right, names))
    if f.setvar in names:
        raise FormulaError(f"set variable {f.setvar!r} is rebound inside its own scope")
    return type(f)(f.setvar, _sets_to_atoms(f.body, names))


def pfo_from_sigma11(psi: Formula, phi_c: Formula) -> tuple[Formula, Vocabulary]:
    """Existential monadic prefix to random unary relations, plus a fair coin.

    The leading set quantifiers of psi become random symbols R1..Rk; the coin
    is R0 on the element defined by phi_c. Returns (formula, random vocabulary).
    """
    prefix = []
    body = psi
    while isinstance(body, ExistsSet):
        prefix.append(body.setvar)
        body = body.body
    names = {X: f"R{i}" for i, X in enumerate(prefix, start=1)}
    taken = set(symbol_arities(psi)) | set(symbol_arities(phi_c))
    clash = taken & ({"R0"} | set(names.values()))
    if clash:
        raise VocabularyError(f"random symbols {sorted(clash)} already occur in the input")
    rho = Vocabulary.of("R0/1", *(f"{r}/1" for r in names.values()))
    return Or(coin_formula(phi_c), _sets_to_atoms(body, names)), rho


# ---------------------------------------------------------------- CFI with Boolean algebra


def _bottom(w: str, u: str) -> str:
    return f"(P({w}) & forall {u}. sqsubseteq({u}, {w}) -> {u} = {w})"


def _atom_text(z: str) -> str:
    return (f"(P({z}) & !{_bottom(z, 'u')} & "
            f"(forall w. sqsubseteq(w, {z}) -> (w = {z} | {_bottom('w', 'u')})))")


def atom_formula() -> Formula:
    """alpha(z): z is a minimal element above the bottom of the algebra."""
    return parse(_atom_text("z"))


def _pair_node(x: str, c: str = "c") -> str:
    return f"(exists {c}. E({x}, {c}) & sim({x}, {c}))"


def _edge_group(x: str, y: str) -> str:
    # partner in the same edge group: same class, not adjacent, and
    # attached to the same centre group
    return (f"(sim({x}, {y}) & !{x} = {y} & {_pair_node(x)} & !E({x}, {y}) & "
            f"(exists c. exists d. E({x}, c) & E({y}, d) & sim(c, d) & !sim(c, {x})))")


def edge_group_formula() -> Formula:
    return parse(_edge_group("x", "y"))


def _xi_text(x: str) -> str:
    return (f"(exists y. {_edge_group(x, 'y')} & "
            f"(exists z. {_atom_text('z')} & !R({x}, z) & R(y, z) & "
            f"(forall w. less(w, z) -> (R({x}, w) <-> R(y, w)))))")


def xi() -> Formula:
    """xi(x): x has the smaller R-number in its edge group.

    The number of a node x is the set of atoms z with R(x, z), compared at
    the less-least atom where the two members differ. Equal numbers select
    neither member.
    """
    return parse(_xi_text("x"))


def _xi_fail_text() -> str:
    return (f"(exists p. exists q. {_edge_group('p', 'q')} & "
            f"!{_xi_text('p')} & !{_xi_text('q')})")


def xi_failure() -> Formula:
    """Some edge group whose two members get the same number."""
    return parse(_xi_fail_text())


TCFI_RANDOM = Vocabulary.of("R/2")


def tcfi_sentence() -> Formula:
    """Twist parity is odd, read off the O-predicate of a Boolean-algebra element.

    An atom is bad when its linked centre group has an odd number of chosen
    neighbours or its linked edget joins a chosen node to a non-chosen one.
    The sentence asks for an odd element whose atoms are exactly the bad
    ones. If some edge group is undistinguished it rejects.
    """
    chosen = _xi_text
    odd_centre = (f"(exists c. sim(c, z) & !P(c) & !{_pair_node('c', 'e')} & "
                  f"(((exists>=1 v. E(c, v) & {chosen('v')}) & !(exists>=2 v. E(c, v) & {chosen('v')})) | "
                  f"(exists>=3 v. E(c, v) & {chosen('v')})))")
    twisted = (f"(exists s. exists t. sim(z, s) & sim(z, t) & E(s, t) & "
               f"{chosen('s')} & !{chosen('t')})")
    text = (f"!{_xi_fail_text()} & "
            f"(exists b. P(b) & !O(b) & "
            f"(forall z. {_atom_text('z')} -> (sqsubseteq(z, b) <-> ({odd_centre} | {twisted}))))")
    return parse(text)


# ---------------------------------------------------------------- matching / Boolean algebra


def phi_inj() -> Formula:
    return parse("forall x. forall y. x = y | P(x) | P(y) | (exists z. P(z) & !(R(x, z) <-> R(y, z)))")


# ---------------------------------------------------------------- additive


def _le(a: str, b: str, d: str) -> str:
    return f"(exists {d}. plus({a}, {d}, {b}))"


def _le3(x: str, n: str) -> str:
    # x <= 3n for x >= n: x = n + a with a = b + c, b <= n, c <= n
    return f"(exists a. plus({n}, a, {x}) & (exists b. exists c. plus(b, c, a) & {_le('b', n, 'd')} & {_le('c', n, 'd')}))"


def phi_sparse() -> Formula:
    """No window {n, ..., 3n} holds two distinct P elements."""
    window = f"({_le('n', 'x', 'd')} & {_le3('x', 'n')} & {_le('n', 'y', 'd')} & {_le3('y', 'n')})"
    return parse(f"forall x. P(x) -> (forall y. P(y) -> (x = y | (forall n. !{window})))")


def coverage_formula() -> Formula:
    """Some S_a is empty and every S_a has all its one-point flips realised.

    S_a is {b in P : R(a, b)}. By connectivity of the hypercube this holds
    iff every subset of P is some S_a.
    """
    return parse(
        "(exists a. forall b. P(b) -> !R(a, b)) & "
        "(forall a. forall q. P(q) -> (exists b. forall c. P(c) -> (R(b, c) <-> !(R(a, c) <-> c = q))))"
    )


def _lt(a: str, b: str) -> str:
    return f"({_le(a, b, 'd')} & !{a} = {b})"


def evenness_formula() -> Formula:
    """Some S_a omits min P, contains max P and alternates along P."""
    is_min = f"(P(q) & forall u. P(u) -> {_le('q', 'u', 'd')})"
    is_max = f"(P(q) & forall u. P(u) -> {_le('u', 'q', 'd')})"
    succ = f"(P(q) & P(r) & {_lt('q', 'r')} & forall u. P(u) -> !({_lt('q', 'u')} & {_lt('u', 'r')}))"
    return parse(
        f"exists a. (forall q. {is_min} -> !R(a, q)) & (forall q. {is_max} -> R(a, q)) & "
        f"(forall q. forall r. {succ} -> !(R(a, q) <-> R(a, r)))"
    )


ADDITIVE_RANDOM = Vocabulary.of("R/2")


# ---------------------------------------------------------------- random order


def rescher_order(width: int = 5) -> Formula:
    """phi(x, y): |{v : R(x, v)}| <= |{v : R(y, v)}| over v of length `width`."""
    vs = tuple(f"x{i}" for i in range(1, width + 1))
    return Rescher(vs, Atom("R", ("x",) + vs), Atom("R", ("y",) + vs))


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    builder: Callable[..., Formula]
    params: dict = field(default_factory=dict)
    vocabulary: Vocabulary = Vocabulary()
    family: str = ""
    summary: str = ""

    def build(self) -> Formula:
        return self.builder(**self.params)


def _entries():
    e = [
        CorpusEntry("phi_ith", phi_ith, {"i": 2}, Vocabulary.of("leq/2"), "ordered structures",
                    "defines the element at position i"),
        CorpusEntry("psi_S", psi_S, {"k": 2, "S": (1, 2)}, Vocabulary.of("E/2", "R1/1", "R2/1"),
                    "graphs with one isolated vertex", "isolated vertex with a fixed random pattern"),
        CorpusEntry("psi_family", psi_family, {"k": 2, "family": ((), (1,), (2,))},
                    Vocabulary.of("E/2", "R1/1", "R2/1"), "graphs with one isolated vertex",
                    "disjunction of pattern sentences"),
        CorpusEntry("phi_one_isolated", phi_one_isolated, {}, Vocabulary.of("E/2"), "graphs",
                    "exactly one isolated vertex"),
        CorpusEntry("coin", lambda: coin_formula(phi_ith(0)), {}, Vocabulary.of("R0/1", "leq/2"),
                    "ordered structures", "fair coin on the minimum"),
        CorpusEntry("atom", atom_formula, {}, Vocabulary.of("P/1", "sqsubseteq/2"), "CFI with Boolean algebra",
                    "atoms of the algebra"),
        CorpusEntry("edge_group", edge_group_formula, {}, Vocabulary.of("E/2", "sim/2"), "CFI graphs",
                    "the two members of an edge group"),
        CorpusEntry("xi", xi, {}, Vocabulary.of("E/2", "sim/2", "P/1", "sqsubseteq/2", "less/2", "R/2"),
                    "CFI with Boolean algebra", "random choice of one node per edge group"),
        CorpusEntry("xi_failure", xi_failure, {},
                    Vocabulary.of("E/2", "sim/2", "P/1", "sqsubseteq/2", "less/2", "R/2"),
                    "CFI with Boolean algebra", "some edge group is not separated"),
        CorpusEntry("tcfi", tcfi_sentence, {},
                    Vocabulary.of("E/2", "sim/2", "P/1", "O/1", "sqsubseteq/2", "less/2", "R/2"),
                    "CFI with Boolean algebra", "odd twist parity"),
        CorpusEntry("phi_inj", phi_inj, {}, Vocabulary.of("P/1", "R/2"), "matching with Boolean algebra",
                    "random map from N to subsets of M is injective"),
        CorpusEntry("phi_sparse", phi_sparse, {}, Vocabulary.of("plus/3", "P/1"), "additive structures",
                    "P is sparse"),
        CorpusEntry("coverage", coverage_formula, {}, Vocabulary.of("P/1", "R/2"), "additive structures",
                    "every subset of P is realised by R"),
        CorpusEntry("evenness", evenness_formula, {}, Vocabulary.of("plus/3", "P/1", "R/2"), "additive structures",
                    "alternating subset along P exists"),
        CorpusEntry("rescher_order", rescher_order, {}, Vocabulary.of("R/6"), "any structure",
                    "random preorder by R-degree"),
    ]
    return {x.name: x for x in e}


CORPUS: dict[str, CorpusEntry] = _entries()
