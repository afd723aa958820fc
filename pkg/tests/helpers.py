"""Hypothesis strategies shared by the test modules."""
from __future__ import annotations

import itertools

from hypothesis import strategies as st

from rlogic.logic.syntax import (And, Atom, CountExists, Eq, Exists, ExistsSet, Forall, ForallSet, Iff,
                                 Implies, Not, Or, Rescher, SetMember)
from rlogic.structures import Structure, Vocabulary, expand, make_arithmetic

VARS = ("x", "y", "z")
var = st.sampled_from(VARS)


def _atoms(sets: bool, arithmetic: bool):
    parts = [
        st.builds(lambda a, b: Atom("E", (a, b)), var, var),
        st.builds(lambda a: Atom("P", (a,)), var),
        st.builds(Eq, var, var),
    ]
    if arithmetic:
        parts.append(st.builds(lambda a, b, c: Atom("plus", (a, b, c)), var, var, var))
        parts.append(st.builds(lambda a, b: Atom("leq", (a, b)), var, var))
    if sets:
        parts.append(st.builds(SetMember, st.just("X"), var))
    return st.one_of(parts)


def _extend(children):
    return st.one_of(
        st.builds(Not, children),
        st.builds(And, children, children),
        st.builds(Or, children, children),
        st.builds(Implies, children, children),
        st.builds(Iff, children, children),
        st.builds(Exists, var, children),
        st.builds(Forall, var, children),
        st.builds(CountExists, st.integers(1, 3), var, children),
        st.builds(Rescher, st.sampled_from([("x",), ("y",), ("x", "y")]), children, children),
    )


def formulas(max_leaves: int = 10, sets: bool = False, arithmetic: bool = False):
    body = st.recursive(_atoms(sets, arithmetic), _extend, max_leaves=max_leaves)
    if not sets:
        return body
    return st.builds(lambda q, f: q("X", f), st.sampled_from([ExistsSet, ForallSet]), body)


@st.composite
def graphs(draw, min_n: int = 1, max_n: int = 8, arithmetic: bool = False):
    """Structures over E/2 and P/1, optionally carrying leq and plus."""
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.product(range(n), repeat=2))
    E = draw(st.sets(st.sampled_from(pairs), max_size=len(pairs)))
    P = draw(st.sets(st.integers(0, n - 1), max_size=n))
    rels = {"E/2": E, "P/1": [(p,) for p in P]}
    if arithmetic:
        return expand(make_arithmetic(n, ["leq", "plus"]), rels)
    return Structure(n, Vocabulary.of("E/2", "P/1"), {"E": E, "P": [(p,) for p in P]})


def assignments(n: int):
    return st.fixed_dictionaries({v: st.integers(0, n - 1) for v in VARS})


_QUANT = st.sampled_from(["exists", "forall", "count2", "rescher"])


def _wrap(kind, v, f):
    if kind == "exists":
        return Exists(v, f)
    if kind == "forall":
        return Forall(v, f)
    if kind == "count2":
        return CountExists(2, v, f)
    return Rescher((v,), f, Not(f))


@st.composite
def quantified(draw, max_leaves: int = 9, sets: bool = False, arithmetic: bool = False):
    """Formulas under a prefix of one to three quantifiers, so guards get exercised."""
    f = draw(st.recursive(_atoms(sets, arithmetic), _extend, max_leaves=max_leaves))
    for v in draw(st.lists(var, min_size=1, max_size=3)):
        f = _wrap(draw(_QUANT), v, f)
    if sets:
        f = draw(st.sampled_from([ExistsSet, ForallSet]))("X", f)
    return f
