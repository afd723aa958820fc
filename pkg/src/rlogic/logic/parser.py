"""ASCII concrete syntax.

    phi  ::= "forall" v "." phi | "exists" v "." phi | "exists>=" NAT v "." phi
           | "Forall" V "." phi | "Exists" V "." phi
           | "J" v+ "." "(" phi ")" "(" phi ")"
           | phi "<->" phi | phi "->" phi | phi "|" phi | phi "&" phi
           | "!" phi | "(" phi ")" | atom
    atom ::= IDENT "(" v {"," v} ")" | v "=" v | V "(" v ")"

Precedence from tightest: ! & | -> (right assoc) <-> (left assoc).
Quantifier bodies extend as far right as possible.
"""
from __future__ import annotations

import re
import warnings

from ..structures import Vocabulary
from .syntax import (Atom, CountExists, Eq, Exists, ExistsSet, Forall, ForallSet, Formula,
                     FormulaError, Iff, Implies, Not, Or, And, Rescher, SetMember)

KEYWORDS = {"forall", "exists", "Forall", "Exists", "J"}

_TOKEN = re.compile(r"\s*(?:(<->|->|>=|[()!&|.,=])|(\d+)|([A-Za-z_][A-Za-z0-9_]*))")


class FormulaSyntaxError(FormulaError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


class ArityError(FormulaError):
    pass


class FreeSetVariableWarning(UserWarning):
    pass


def _tokenize(text: str):
    out, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("op", m.group(1), start))
        elif m.group(2):
            out.append(("nat", m.group(2), start))
        else:
            out.append(("ident", m.group(3), start))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


def _is_var(name: str) -> bool:
    return name[0].islower() or name[0] == "_"


class _Parser:
    def __init__(self, text, vocab, set_vars):
        self.toks = _tokenize(text)
        self.i = 0
        self.vocab = vocab
        self.bound_sets: list[str] = list(set_vars)
        self.free_sets: set[str] = set()

    def peek(self, k=0):
        return self.toks[self.i + k]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "eof":
            raise FormulaSyntaxError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def var(self):
        kind, val, pos = self.take()
        if kind != "ident" or not _is_var(val) or val in KEYWORDS:
            raise FormulaSyntaxError(f"expected a lowercase variable, found {val or 'end of input'!r}", pos)
        return val

    def setvar(self):
        kind, val, pos = self.take()
        if kind != "ident" or _is_var(val) or val in KEYWORDS:
            raise FormulaSyntaxError(f"expected an uppercase set variable, found {val or 'end of input'!r}", pos)
        return val

    def parse(self):
        f = self.iff()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise FormulaSyntaxError(f"unexpected {val!r}", pos)
        return f

    def iff(self):
        f = self.imp()
        while self.peek()[1] == "<->":
            self.take()
            f = Iff(f, self.imp())
        return f

    def imp(self):
        f = self.or_()
        if self.peek()[1] == "->":
            self.take()
            return Implies(f, self.imp())
        return f

    def or_(self):
        f = self.and_()
        while self.peek()[1] == "|":
            self.take()
            f = Or(f, self.and_())
        return f

    def and_(self):
        f = self.unary()
        while self.peek()[1] == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self):
        kind, val, pos = self.peek()
        if val == "!" and kind == "op":
            self.take()
            return Not(self.unary())
        if val == "(" and kind == "op":
            self.take()
            f = self.iff()
            self.expect(")")
            return f
        if kind != "ident":
            raise FormulaSyntaxError(f"unexpected {val or 'end of input'!r}", pos)
        if val in ("forall", "exists"):
            self.take()
            k = None
            if val == "exists" and self.peek()[1] == ">=":
                self.take()
                nk, nv, npos = self.take()
                if nk != "nat":
                    raise FormulaSyntaxError("expected a natural number after '>='", npos)
                k = int(nv)
                if k < 1:
                    raise FormulaSyntaxError("counting threshold must be >= 1", npos)
            v = self.var()
            self.expect(".")
            body = self.iff()
            if k is not None:
                return CountExists(k, v, body)
            return Exists(v, body) if val == "exists" else Forall(v, body)
        if val in ("Forall", "Exists"):
            self.take()
            sv = self.setvar()
            self.expect(".")
            self.bound_sets.append(sv)
            try:
                body = self.iff()
            finally:
                self.bound_sets.pop()
            return ExistsSet(sv, body) if val == "Exists" else ForallSet(sv, body)
        if val == "J":
            self.take()
            vs = [self.var()]
            while self.peek()[1] != ".":
                vs.append(self.var())
            self.expect(".")
            self.expect("(")
            left = self.iff()
            self.expect(")")
            self.expect("(")
            right = self.iff()
            self.expect(")")
            try:
                return Rescher(tuple(vs), left, right)
            except FormulaError as exc:
                raise FormulaSyntaxError(str(exc), pos) from None
        return self.atom()

    def atom(self):
        kind, name, pos = self.take()
        if self.peek()[1] == "=":
            if not _is_var(name):
                raise FormulaSyntaxError(f"expected a variable before '=', found {name!r}", pos)
            self.take()
            return Eq(name, self.var())
        if self.peek()[1] != "(":
            raise FormulaSyntaxError(f"expected '(' or '=' after {name!r}", self.peek()[2])
        self.take()
        args = [self.var()]
        while self.peek()[1] == ",":
            self.take()
            args.append(self.var())
        self.expect(")")
        if name in self.bound_sets:
            if len(args) != 1:
                raise ArityError(f"set variable {name!r} applied to {len(args)} arguments at position {pos}")
            return SetMember(name, args[0])
        if self.vocab is not None:
            if name in self.vocab:
                want = self.vocab.arity(name)
                if want != len(args):
                    raise ArityError(f"{name!r} has arity {want} but is applied to {len(args)} arguments at position {pos}")
                return Atom(name, tuple(args))
            if not _is_var(name) and len(args) == 1:
                self.free_sets.add(name)
                return SetMember(name, args[0])
            raise FormulaSyntaxError(f"unknown relation symbol {name!r}", pos)
        return Atom(name, tuple(args))


def parse(text: str, vocab: Vocabulary | None = None, set_vars=()) -> Formula:
    """Parse `text`.

    Uppercase unary applications resolve to set membership when the name is
    bound by an enclosing set quantifier or listed in `set_vars`. With a
    vocabulary, undeclared uppercase unary names become free set variables
    and a FreeSetVariableWarning is emitted; arities are checked against it.
    Without a vocabulary, every other application is a relation atom.
    """
    p = _Parser(text, vocab, set_vars)
    f = p.parse()
    if p.free_sets:
        warnings.warn(f"free set variables {sorted(p.free_sets)}", FreeSetVariableWarning, stacklevel=2)
    from .syntax import symbol_arities
    symbol_arities(f)
    return f


def to_text(f: Formula) -> str:
    """Canonical text; parse(to_text(f)) == f."""
    return _show(f, top=True)


def _show(f, top=False) -> str:
    if isinstance(f, Atom):
        return f"{f.rel}({', '.join(f.args)})"
    if isinstance(f, SetMember):
        return f"{f.setvar}({f.var})"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Not):
        inner = f.sub
        if isinstance(inner, (Atom, SetMember, Not, Rescher)):
            return "!" + _show(inner)
        return "!(" + _show(inner, top=True) + ")"
    if isinstance(f, Rescher):
        return f"J {' '.join(f.vars)} . ( {_show(f.left, top=True)} ) ( {_show(f.right, top=True)} )"
    op = {And: "&", Or: "|", Implies: "->", Iff: "<->"}.get(type(f))
    if op is not None:
        s = f"{_show(f.left)} {op} {_show(f.right)}"
    elif isinstance(f, CountExists):
        s = f"exists>={f.k} {f.var}. {_show(f.body)}"
    elif isinstance(f, Exists):
        s = f"exists {f.var}. {_show(f.body)}"
    elif isinstance(f, Forall):
        s = f"forall {f.var}. {_show(f.body)}"
    elif isinstance(f, ExistsSet):
        s = f"Exists {f.setvar}. {_show(f.body)}"
    elif isinstance(f, ForallSet):
        s = f"Forall {f.setvar}. {_show(f.body)}"
    else:
        raise TypeError(f"not a formula: {f!r}")
    return s if top else f"({s})"
