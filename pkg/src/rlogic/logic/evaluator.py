"""Model checking over finite structures.

The main path compiles a formula once into closures. A quantifier whose body
has an atomic conjunct mentioning the bound variable (for forall: an atomic
conjunct of the antecedent) only enumerates elements satisfying that atom,
found through the relation's lookup index. Quantifier results are memoised
per structure on the values of their free variables.

`naive_evaluate` is the reference semantics: plain recursion with full
enumeration everywhere. Tests use it as the oracle for the compiled path.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from ..structures import Structure, VocabularyError
from .syntax import (And, Atom, CountExists, Eq, Exists, ExistsSet, Forall, ForallSet, Formula,
                     Iff, Implies, Not, Or, Rescher, SetMember, free_vars, symbol_arities)

DEFAULT_SET_CAP = 20


class EvaluationError(ValueError):
    pass


class UnboundVariableError(EvaluationError):
    pass


class ResourceLimitError(EvaluationError):
    pass


class NotADefinitionError(EvaluationError):
    pass


@dataclass(frozen=True)
class Assignment:
    elements: Mapping[str, int] = field(default_factory=dict)
    sets: Mapping[str, frozenset] = field(default_factory=dict)

    @classmethod
    def coerce(cls, asg) -> "Assignment":
        if asg is None:
            return cls()
        if isinstance(asg, Assignment):
            return asg
        elems, sets = {}, {}
        for k, v in dict(asg).items():
            if isinstance(v, (set, frozenset, list, tuple)):
                sets[k] = frozenset(v)
            else:
                elems[k] = int(v)
        return cls(elems, sets)

    def env(self, n: int) -> dict:
        env = {}
        for k, v in self.elements.items():
            if not 0 <= v < n:
                raise EvaluationError(f"{k} := {v} is outside the universe [0,{n})")
            env[k] = v
        for k, s in self.sets.items():
            mask = 0
            for a in s:
                if not 0 <= a < n:
                    raise EvaluationError(f"set {k} contains {a}, outside [0,{n})")
                mask |= 1 << a
            env[k] = mask
        return env


def check_vocabulary(A: Structure, f: Formula) -> None:
    for name, ar in symbol_arities(f).items():
        sym = A.vocabulary.get(name)
        if sym is None:
            raise VocabularyError(f"symbol {name!r} not in {A.vocabulary}")
        if sym.arity != ar:
            raise VocabularyError(f"symbol {name!r} has arity {sym.arity} in the structure, {ar} in the formula")


class _Ctx:
    __slots__ = ("n", "rels", "contains", "memo", "set_cap")

    def __init__(self, A: Structure, memo: list, set_cap: int | None):
        self.n = A.universe_size
        self.rels = A.relations
        self.contains = {k: r.contains for k, r in A.relations.items()}
        self.memo = memo
        self.set_cap = set_cap


_MISSING = object()


def _conjuncts(f):
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _guard_candidates(body, v, universal):
    """Literals whose falsity makes the quantifier body trivially (non-)witnessing."""
    if not universal:
        return _conjuncts(body)
    if isinstance(body, Implies):
        return _conjuncts(body.left)
    if isinstance(body, Not):
        return _conjuncts(body.sub)
    if isinstance(body, Or):
        out = []
        for d in _disjuncts(body):
            if isinstance(d, Not):
                out.append(d.sub)
        return out
    return []


def _disjuncts(f):
    if isinstance(f, Or):
        return _disjuncts(f.left) + _disjuncts(f.right)
    return [f]


def _plan_for(lits, vs):
    """A candidate generator for the variable tuple `vs`, or None."""
    for g in lits:
        if isinstance(g, Atom) and all(v in g.args for v in vs):
            return _atom_plan(g, vs)
        if len(vs) == 1:
            v = vs[0]
            if isinstance(g, Eq) and (g.left == v) != (g.right == v):
                other = g.right if g.left == v else g.left

                def plan(ctx, env, o=other):
                    return (env[o],)
                plan.static = False
                return plan
            if isinstance(g, SetMember) and g.var == v:
                return _set_plan(g.setvar)
    return None


def _set_plan(X):
    def plan(ctx, env):
        mask = env[X]
        return [a for a in range(ctx.n) if (mask >> a) & 1]
    plan.static = False
    return plan


def _atom_plan(g: Atom, vs):
    rel = g.rel
    keypos = tuple(i for i, a in enumerate(g.args) if a not in vs)
    keyvars = tuple(g.args[i] for i in keypos)
    first = tuple(g.args.index(v) for v in vs)
    repeats = tuple((i, g.args.index(a)) for i, a in enumerate(g.args) if a in vs and g.args.index(a) != i)
    cache_key = ("cand", keypos, first, repeats)
    single = len(vs) == 1

    def plan(ctx, env):
        relation = ctx.rels[rel]
        key = tuple(env[a] for a in keyvars)
        cache = relation._index.setdefault(cache_key, {})
        hit = cache.get(key)
        if hit is None:
            seen = set()
            for t in relation.lookup(keypos, key):
                if all(t[i] == t[j] for i, j in repeats):
                    seen.add(t[first[0]] if single else tuple(t[p] for p in first))
            hit = cache[key] = sorted(seen)
        return hit

    plan.static = not keyvars
    return plan


class _Compiler:
    def __init__(self, guards: bool):
        self.guards = guards
        self.slot_symbols: list[frozenset] = []

    @property
    def nslots(self):
        return len(self.slot_symbols)

    def slot(self, *fs):
        """A memo slot whose contents depend only on the symbols of `fs`."""
        syms = frozenset()
        for f in fs:
            syms |= frozenset(symbol_arities(f))
        self.slot_symbols.append(syms)
        return len(self.slot_symbols) - 1

    def c(self, f):
        if isinstance(f, Atom):
            return self.atom(f)
        if isinstance(f, Eq):
            a, b = f.left, f.right
            return lambda ctx, env: env[a] == env[b]
        if isinstance(f, SetMember):
            X, x = f.setvar, f.var
            return lambda ctx, env: bool((env[X] >> env[x]) & 1)
        if isinstance(f, Not):
            sub = self.c(f.sub)
            return lambda ctx, env: not sub(ctx, env)
        if isinstance(f, And):
            l, r = self.c(f.left), self.c(f.right)
            return lambda ctx, env: l(ctx, env) and r(ctx, env)
        if isinstance(f, Or):
            l, r = self.c(f.left), self.c(f.right)
            return lambda ctx, env: l(ctx, env) or r(ctx, env)
        if isinstance(f, Implies):
            l, r = self.c(f.left), self.c(f.right)
            return lambda ctx, env: (not l(ctx, env)) or r(ctx, env)
        if isinstance(f, Iff):
            l, r = self.c(f.left), self.c(f.right)
            return lambda ctx, env: l(ctx, env) == r(ctx, env)
        if isinstance(f, (Exists, Forall, CountExists)):
            return self.memoised(f, self.fo_quantifier(f))
        if isinstance(f, (ExistsSet, ForallSet)):
            return self.memoised(f, self.set_quantifier(f))
        if isinstance(f, Rescher):
            return self.memoised(f, self.rescher(f))
        raise TypeError(f"not a formula: {f!r}")

    def atom(self, f):
        rel, args = f.rel, f.args
        if len(args) == 1:
            a = args[0]
            return lambda ctx, env: ctx.contains[rel]((env[a],))
        if len(args) == 2:
            a, b = args
            return lambda ctx, env: ctx.contains[rel]((env[a], env[b]))
        if len(args) == 3:
            a, b, c = args
            return lambda ctx, env: ctx.contains[rel]((env[a], env[b], env[c]))
        return lambda ctx, env: ctx.contains[rel](tuple(env[a] for a in args))

    def memoised(self, f, inner):
        fv, fs = free_vars(f)
        keyvars = tuple(sorted(fv)) + tuple(sorted(fs))
        slot = self.slot(f)

        def fn(ctx, env):
            memo = ctx.memo[slot]
            key = tuple(env[u] for u in keyvars)
            r = memo.get(key)
            if r is None:
                r = memo[key] = inner(ctx, env)
            return r

        return fn

    def fo_quantifier(self, f):
        v = f.var
        body = self.c(f.body)
        universal = isinstance(f, Forall)
        lits = _guard_candidates(f.body, v, universal) if self.guards else []
        plan = _plan_for(lits, (v,)) if self.guards else None
        # literals mentioning only v filter the candidates once per structure
        filters = [self.c(g) for g in lits if not isinstance(g, Atom) and free_vars(g) == (frozenset((v,)), frozenset())]
        if filters and (plan is None or plan.static):
            fslot = self.slot(*lits)
            base = plan

            def plan(ctx, env):
                memo = ctx.memo[fslot]
                hit = memo.get(())
                if hit is None:
                    old = env.get(v, _MISSING)
                    hit = []
                    for a in (base(ctx, env) if base is not None else range(ctx.n)):
                        env[v] = a
                        if all(g(ctx, env) for g in filters):
                            hit.append(a)
                    _restore(env, v, old)
                    memo[()] = hit
                return hit

        def cands(ctx, env):
            return plan(ctx, env) if plan is not None else range(ctx.n)

        if isinstance(f, Exists):
            def fn(ctx, env):
                old = env.get(v, _MISSING)
                try:
                    for a in cands(ctx, env):
                        env[v] = a
                        if body(ctx, env):
                            return True
                    return False
                finally:
                    _restore(env, v, old)
        elif universal:
            def fn(ctx, env):
                old = env.get(v, _MISSING)
                try:
                    for a in cands(ctx, env):
                        env[v] = a
                        if not body(ctx, env):
                            return False
                    return True
                finally:
                    _restore(env, v, old)
        else:
            k = f.k

            def fn(ctx, env):
                old = env.get(v, _MISSING)
                count = 0
                try:
                    for a in cands(ctx, env):
                        env[v] = a
                        if body(ctx, env):
                            count += 1
                            if count >= k:
                                return True
                    return False
                finally:
                    _restore(env, v, old)
        return fn

    def set_quantifier(self, f):
        X = f.setvar
        body = self.c(f.body)
        want = isinstance(f, ExistsSet)

        def fn(ctx, env):
            _check_set_cap(ctx.n, ctx.set_cap)
            old = env.get(X, _MISSING)
            try:
                for mask in range(1 << ctx.n):
                    env[X] = mask
                    if body(ctx, env) == want:
                        return want
                return not want
            finally:
                _restore(env, X, old)

        return fn

    def rescher(self, f):
        vs = f.vars
        left, right = self.counter(vs, f.left), self.counter(vs, f.right)
        return lambda ctx, env: left(ctx, env) <= right(ctx, env)

    def counter(self, vs, g):
        body = self.c(g)
        plan = _plan_for(_conjuncts(g), vs) if self.guards else None
        # a bare guard atom is true on exactly its candidate tuples
        exact_atom = plan is not None and isinstance(g, Atom)

        def count(ctx, env):
            if plan is None:
                tuples = itertools.product(range(ctx.n), repeat=len(vs))
            else:
                tuples = plan(ctx, env)
                if exact_atom:
                    return len(tuples)
                if len(vs) == 1:
                    tuples = ((a,) for a in tuples)
            olds = [env.get(v, _MISSING) for v in vs]
            total = 0
            try:
                for t in tuples:
                    for v, a in zip(vs, t):
                        env[v] = a
                    if body(ctx, env):
                        total += 1
            finally:
                for v, o in zip(vs, olds):
                    _restore(env, v, o)
            return total

        return count


def _restore(env, v, old):
    if old is _MISSING:
        env.pop(v, None)
    else:
        env[v] = old


def _check_set_cap(n, cap):
    if cap is not None and n > cap:
        raise ResourceLimitError(
            f"set quantification over a universe of size {n} exceeds the cap {cap}; pass a larger set_cap to override")


class CompiledFormula:
    """A formula compiled once and evaluated on many structures."""

    def __init__(self, formula: Formula, guards: bool = True):
        self.formula = formula
        comp = _Compiler(guards)
        self._fn = comp.c(formula)
        self._slot_symbols = comp.slot_symbols
        self._shared: dict = {}
        fv, fs = free_vars(formula)
        self.free_vars = tuple(sorted(fv))
        self.free_sets = tuple(sorted(fs))

    def context(self, A: Structure, set_cap: int | None = DEFAULT_SET_CAP) -> _Ctx:
        """Fresh evaluation state for A.

        A memo slot is reused from an earlier context when every relation its
        subformula mentions is the very same object, so quantifiers over the
        fixed part of many random expansions of one base run only once.
        """
        rels = A.relations
        memo = []
        for i, syms in enumerate(self._slot_symbols):
            objs = tuple(rels[s] for s in sorted(syms) if s in rels)
            hit = self._shared.get(i)
            if hit is None or hit[0] != A.universe_size or len(hit[1]) != len(objs) \
                    or any(a is not b for a, b in zip(hit[1], objs)):
                hit = self._shared[i] = (A.universe_size, objs, {})
            memo.append(hit[2])
        return _Ctx(A, memo, set_cap)

    def _bound_env(self, A: Structure, asg) -> dict:
        env = Assignment.coerce(asg).env(A.universe_size)
        missing = [v for v in self.free_vars + self.free_sets if v not in env]
        if missing:
            raise UnboundVariableError(f"free variables {missing} are not bound by the assignment")
        return env

    def holds(self, A: Structure, asg=None, ctx: _Ctx | None = None, set_cap: int | None = DEFAULT_SET_CAP) -> bool:
        env = self._bound_env(A, asg)
        if ctx is None:
            ctx = self.context(A, set_cap)
        return bool(self._fn(ctx, env))

    def holds_env(self, ctx: _Ctx, env: dict) -> bool:
        """Fast path for callers that already validated `env`."""
        return bool(self._fn(ctx, env))


def compile_formula(f: Formula, guards: bool = True) -> CompiledFormula:
    return CompiledFormula(f, guards)


def evaluate(A: Structure, f: Formula, asg=None, *, strategy: str = "guarded",
             set_cap: int | None = DEFAULT_SET_CAP) -> bool:
    """Truth of f in A under the assignment (mapping or Assignment).

    strategy: "guarded" (compiled, guard-aware, memoised), "plain" (compiled,
    full enumeration) or "naive" (reference recursion). set_cap bounds the
    universe size for set quantifiers; None disables the cap.
    """
    check_vocabulary(A, f)
    if strategy == "naive":
        return naive_evaluate(A, f, asg, set_cap=set_cap)
    if strategy not in ("guarded", "plain"):
        raise ValueError(f"unknown strategy {strategy!r}")
    return CompiledFormula(f, guards=strategy == "guarded").holds(A, asg, set_cap=set_cap)


def naive_evaluate(A: Structure, f: Formula, asg=None, *, set_cap: int | None = DEFAULT_SET_CAP) -> bool:
    check_vocabulary(A, f)
    env = Assignment.coerce(asg).env(A.universe_size)
    fv, fs = free_vars(f)
    missing = sorted((fv | fs) - set(env))
    if missing:
        raise UnboundVariableError(f"free variables {missing} are not bound by the assignment")
    return _naive(A, f, env, set_cap)


def _naive(A, f, env, cap):
    n = A.universe_size
    if isinstance(f, Atom):
        return tuple(env[a] for a in f.args) in A.relations[f.rel].tuples()
    if isinstance(f, Eq):
        return env[f.left] == env[f.right]
    if isinstance(f, SetMember):
        return bool((env[f.setvar] >> env[f.var]) & 1)
    if isinstance(f, Not):
        return not _naive(A, f.sub, env, cap)
    if isinstance(f, And):
        return _naive(A, f.left, env, cap) and _naive(A, f.right, env, cap)
    if isinstance(f, Or):
        return _naive(A, f.left, env, cap) or _naive(A, f.right, env, cap)
    if isinstance(f, Implies):
        return (not _naive(A, f.left, env, cap)) or _naive(A, f.right, env, cap)
    if isinstance(f, Iff):
        return _naive(A, f.left, env, cap) == _naive(A, f.right, env, cap)
    if isinstance(f, Exists):
        return any(_naive(A, f.body, {**env, f.var: a}, cap) for a in range(n))
    if isinstance(f, Forall):
        return all(_naive(A, f.body, {**env, f.var: a}, cap) for a in range(n))
    if isinstance(f, CountExists):
        return sum(_naive(A, f.body, {**env, f.var: a}, cap) for a in range(n)) >= f.k
    if isinstance(f, (ExistsSet, ForallSet)):
        _check_set_cap(n, cap)
        results = (_naive(A, f.body, {**env, f.setvar: m}, cap) for m in range(1 << n))
        return any(results) if isinstance(f, ExistsSet) else all(results)
    if isinstance(f, Rescher):
        def count(g):
            return sum(_naive(A, g, {**env, **dict(zip(f.vars, t))}, cap)
                       for t in itertools.product(range(n), repeat=len(f.vars)))
        return count(f.left) <= count(f.right)
    raise TypeError(f"not a formula: {f!r}")


def query(A: Structure, f: Formula, *, order: tuple[str, ...] | None = None,
          strategy: str = "guarded") -> frozenset:
    """All tuples (over the free variables in sorted-name order) satisfying f."""
    check_vocabulary(A, f)
    fv, fs = free_vars(f)
    if fs:
        raise UnboundVariableError(f"query needs a formula without free set variables, got {sorted(fs)}")
    names = tuple(order) if order is not None else tuple(sorted(fv))
    if set(names) != set(fv):
        raise EvaluationError(f"variable order {names} does not match free variables {sorted(fv)}")
    n = A.universe_size
    if strategy == "naive":
        return frozenset(t for t in itertools.product(range(n), repeat=len(names))
                         if _naive(A, f, dict(zip(names, t)), DEFAULT_SET_CAP))
    cf = CompiledFormula(f, guards=strategy == "guarded")
    ctx = cf.context(A)
    return frozenset(t for t in itertools.product(range(n), repeat=len(names))
                     if cf.holds_env(ctx, dict(zip(names, t))))


def element_defined_by(A: Structure, f: Formula) -> int:
    fv, fs = free_vars(f)
    if len(fv) != 1 or fs:
        raise NotADefinitionError(f"need exactly one free first-order variable, got {sorted(fv | fs)}")
    hits = sorted(query(A, f))
    if len(hits) != 1:
        raise NotADefinitionError(f"formula is satisfied by {len(hits)} elements, not exactly one")
    return hits[0][0]


def defines_linear_order(A: Structure, f: Formula, order: tuple[str, str] | None = None) -> bool:
    """Whether f(x, y) defines a reflexive, antisymmetric, transitive, total relation."""
    fv, _ = free_vars(f)
    if len(fv) != 2:
        raise EvaluationError(f"need exactly two free variables, got {sorted(fv)}")
    rel = query(A, f, order=order)
    return is_linear_order(rel, A.universe_size)


def is_linear_order(rel, n: int) -> bool:
    rel = set(rel)
    for a in range(n):
        if (a, a) not in rel:
            return False
        for b in range(n):
            ab, ba = (a, b) in rel, (b, a) in rel
            if a != b and ab == ba:
                return False
    for a, b in rel:
        for c in range(n):
            if (b, c) in rel and (a, c) not in rel:
                return False
    return True
