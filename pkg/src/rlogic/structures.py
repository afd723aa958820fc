"""Finite relational structures over the canonical universe 0..n-1.

Relations are stored either as sparse tuple sets or as dense boolean arrays
indexed by the tuple itself. The lexicographic tuple rank (most significant
component first) is the bit order shared by random expansions and the PRG.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

BUILTIN_ARITIES = {"leq": 2, "plus": 3, "times": 3}


class StructureError(ValueError):
    """Base class for malformed structures and vocabularies."""


class InvalidUniverseError(StructureError):
    pass


class VocabularyError(StructureError):
    pass


@dataclass(frozen=True)
class RelationSymbol:
    name: str
    arity: int

    def __post_init__(self):
        if not isinstance(self.arity, int) or self.arity < 1:
            raise VocabularyError(f"relation {self.name!r} must have arity >= 1, got {self.arity}")
        want = BUILTIN_ARITIES.get(self.name)
        if want is not None and want != self.arity:
            raise VocabularyError(f"built-in {self.name!r} must have arity {want}")

    def __str__(self):
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class Vocabulary:
    """Relation symbols in declaration order (the order fixes bit layouts)."""

    symbols: tuple[RelationSymbol, ...] = ()

    def __post_init__(self):
        names = [s.name for s in self.symbols]
        if len(set(names)) != len(names):
            raise VocabularyError(f"duplicate symbol names in {names}")

    @classmethod
    def of(cls, *items) -> "Vocabulary":
        """Build from RelationSymbols, (name, arity) pairs or "name/arity" strings."""
        syms = []
        for it in items:
            if isinstance(it, RelationSymbol):
                syms.append(it)
            elif isinstance(it, str):
                name, _, ar = it.partition("/")
                syms.append(RelationSymbol(name, int(ar)))
            else:
                syms.append(RelationSymbol(*it))
        return cls(tuple(syms))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.symbols)

    def arity(self, name: str) -> int:
        for s in self.symbols:
            if s.name == name:
                return s.arity
        raise KeyError(name)

    def get(self, name: str) -> RelationSymbol | None:
        for s in self.symbols:
            if s.name == name:
                return s
        return None

    def __contains__(self, item) -> bool:
        if isinstance(item, RelationSymbol):
            return item in self.symbols
        return any(s.name == item for s in self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def union(self, other: "Vocabulary") -> "Vocabulary":
        extra = [s for s in other.symbols if s not in self.symbols]
        for s in extra:
            if s.name in self:
                raise VocabularyError(f"arity clash for {s.name!r}")
        return Vocabulary(self.symbols + tuple(extra))

    def issubset(self, other: "Vocabulary") -> bool:
        return all(s in other.symbols for s in self.symbols)

    def isdisjoint(self, other: "Vocabulary") -> bool:
        return not any(s.name in other for s in self.symbols)

    def same_set(self, other: "Vocabulary") -> bool:
        return set(self.symbols) == set(other.symbols)

    def bit_budget(self, n: int) -> int:
        return sum(n ** s.arity for s in self.symbols)

    def __str__(self):
        return "{" + ", ".join(map(str, self.symbols)) + "}"


def tuple_rank(t: tuple[int, ...], n: int) -> int:
    r = 0
    for a in t:
        r = r * n + a
    return r


def tuple_unrank(rank: int, n: int, arity: int) -> tuple[int, ...]:
    out = []
    for _ in range(arity):
        rank, a = divmod(rank, n)
        out.append(a)
    return tuple(reversed(out))


class Relation:
    """An immutable relation of fixed arity over [0, n).

    Lookup indexes are filled lazily and shared by every structure holding
    this object, which is what makes repeated expansions of one base cheap.
    """

    __slots__ = ("arity", "n", "_tuples", "_dense", "_index", "contains")

    def __init__(self, arity: int, n: int, tuples=None, dense=None):
        self.arity = arity
        self.n = n
        self._index: dict = {}
        if dense is not None:
            dense = np.asarray(dense, dtype=bool)
            if dense.shape != (n,) * arity:
                raise StructureError(f"dense relation has shape {dense.shape}, expected {(n,) * arity}")
            dense.flags.writeable = False
            self._dense = dense
            self._tuples = None
            if arity == 1:
                flat = dense.tolist()
                self.contains = lambda t: flat[t[0]]
            else:
                self.contains = dense.item
        else:
            ts = frozenset(tuple(int(a) for a in t) for t in (tuples or ()))
            for t in ts:
                if len(t) != arity:
                    raise StructureError(f"tuple {t} does not have arity {arity}")
                for a in t:
                    if not 0 <= a < n:
                        raise StructureError(f"tuple {t} has component out of range [0,{n})")
            self._tuples = ts
            self._dense = None
            self.contains = ts.__contains__

    @classmethod
    def _trusted(cls, arity: int, n: int, tuples: frozenset) -> "Relation":
        rel = cls.__new__(cls)
        rel.arity, rel.n, rel._index = arity, n, {}
        rel._tuples, rel._dense = tuples, None
        rel.contains = tuples.__contains__
        return rel

    def __reduce__(self):
        if self._dense is not None:
            return (Relation, (self.arity, self.n, None, np.array(self._dense)))
        return (Relation._trusted, (self.arity, self.n, self._tuples))

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    def tuples(self) -> frozenset:
        if self._tuples is None:
            self._tuples = frozenset(map(tuple, np.argwhere(self._dense).tolist()))
        return self._tuples

    def dense(self) -> np.ndarray:
        if self._dense is None:
            arr = np.zeros((self.n,) * self.arity, dtype=bool)
            for t in self._tuples:
                arr[t] = True
            arr.flags.writeable = False
            self._dense = arr
        return self._dense

    def bits(self) -> np.ndarray:
        """Flat membership vector in lexicographic tuple-rank order."""
        return self.dense().reshape(-1)

    def __len__(self):
        if self._tuples is not None:
            return len(self._tuples)
        return int(self._dense.sum())

    def __iter__(self):
        return iter(sorted(self.tuples()))

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        if (self.arity, self.n) != (other.arity, other.n):
            return False
        if self._dense is not None and other._dense is not None:
            return bool(np.array_equal(self._dense, other._dense))
        return self.tuples() == other.tuples()

    def __hash__(self):
        return hash((self.arity, self.n, self.tuples()))

    def __repr__(self):
        kind = "dense" if self.is_dense else "sparse"
        return f"Relation(arity={self.arity}, n={self.n}, size={len(self)}, {kind})"

    def lookup(self, positions: tuple[int, ...], key: tuple[int, ...]) -> list[tuple[int, ...]]:
        """All tuples whose components at `positions` equal `key`, sorted."""
        by_pos = self._index.get(positions)
        if by_pos is None:
            by_pos = {}
            if self._dense is None:
                for t in sorted(self._tuples):
                    by_pos.setdefault(tuple(t[p] for p in positions), []).append(t)
            self._index[positions] = by_pos
        hit = by_pos.get(key)
        if hit is None:
            if self._dense is None:
                return []
            hit = by_pos[key] = self._dense_lookup(positions, key)
        return hit

    def _dense_lookup(self, positions, key):
        sl: list = [slice(None)] * self.arity
        for p, v in zip(positions, key):
            sl[p] = v
        free = [i for i in range(self.arity) if i not in positions]
        out = []
        for row in np.argwhere(self._dense[tuple(sl)]).tolist():
            t = [0] * self.arity
            for p, v in zip(positions, key):
                t[p] = v
            for i, v in zip(free, row):
                t[i] = v
            out.append(tuple(t))
        return out


@lru_cache(maxsize=None)
def _builtin_relation(name: str, n: int) -> Relation:
    r = range(n)
    if name == "leq":
        ts = frozenset((a, b) for a in r for b in range(a, n))
    elif name == "plus":
        ts = frozenset((a, b, a + b) for a in r for b in range(n - a))
    elif name == "times":
        ts = frozenset((a, b, a * b) for a in r for b in r if a * b < n)
    else:
        raise KeyError(name)
    return Relation._trusted(BUILTIN_ARITIES[name], n, ts)


class Structure:
    """A finite structure with universe 0..n-1. Immutable once built."""

    __slots__ = ("universe_size", "vocabulary", "relations")

    def __init__(self, universe_size: int, vocabulary: Vocabulary = Vocabulary(), relations: Mapping | None = None):
        if not isinstance(universe_size, (int, np.integer)) or universe_size < 1:
            raise InvalidUniverseError(f"universe size must be a positive integer, got {universe_size!r}")
        n = int(universe_size)
        relations = dict(relations or {})
        rels = {}
        for sym in vocabulary:
            if sym.name not in relations:
                raise VocabularyError(f"no interpretation for {sym}")
            rels[sym.name] = _as_relation(relations.pop(sym.name), sym.arity, n)
        if relations:
            raise VocabularyError(f"relations {sorted(relations)} not declared in vocabulary")
        for sym in vocabulary:
            if sym.name in BUILTIN_ARITIES and rels[sym.name] != _builtin_relation(sym.name, n):
                raise VocabularyError(f"built-in {sym.name!r} must equal its arithmetic relation on [0,{n})")
        object.__setattr__(self, "universe_size", n)
        object.__setattr__(self, "vocabulary", vocabulary)
        object.__setattr__(self, "relations", MappingProxyType(rels))

    def __setattr__(self, key, value):
        raise AttributeError("Structure is immutable")

    @classmethod
    def _trusted(cls, n: int, vocabulary: Vocabulary, rels: dict) -> "Structure":
        s = object.__new__(cls)
        object.__setattr__(s, "universe_size", n)
        object.__setattr__(s, "vocabulary", vocabulary)
        object.__setattr__(s, "relations", MappingProxyType(rels))
        return s

    def __reduce__(self):
        return (Structure._trusted, (self.universe_size, self.vocabulary, dict(self.relations)))

    @property
    def n(self) -> int:
        return self.universe_size

    @property
    def universe(self) -> range:
        return range(self.universe_size)

    def __getitem__(self, name: str) -> Relation:
        return self.relations[name]

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return (
            self.universe_size == other.universe_size
            and self.vocabulary.same_set(other.vocabulary)
            and all(self.relations[k] == other.relations[k] for k in self.relations)
        )

    def __hash__(self):
        return hash((self.universe_size, frozenset(self.vocabulary.symbols)))

    def __repr__(self):
        return f"Structure(n={self.universe_size}, vocabulary={self.vocabulary})"

    def to_dict(self) -> dict:
        return {
            "universe": self.universe_size,
            "vocab": [{"name": s.name, "arity": s.arity} for s in self.vocabulary],
            "relations": {k: [list(t) for t in sorted(r.tuples())] for k, r in self.relations.items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Structure":
        try:
            vocab = Vocabulary(tuple(RelationSymbol(v["name"], int(v["arity"])) for v in doc.get("vocab", [])))
            rels = {k: [tuple(t) for t in v] for k, v in doc.get("relations", {}).items()}
            return cls(int(doc["universe"]), vocab, rels)
        except (KeyError, TypeError) as exc:
            raise StructureError(f"malformed structure document: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "Structure":
        return cls.from_dict(json.loads(text))


def _as_relation(value, arity: int, n: int) -> Relation:
    if isinstance(value, Relation):
        if value.arity != arity or value.n != n:
            raise StructureError(f"relation of arity {value.arity} over {value.n} where {arity} over {n} expected")
        return value
    if isinstance(value, np.ndarray) and value.dtype == bool:
        return Relation(arity, n, dense=value)
    return Relation(arity, n, tuples=[tuple(t) if not isinstance(t, int) else (t,) for t in value])


def make_empty_structure(n: int) -> Structure:
    return Structure(n)


def make_arithmetic(n: int, which: Iterable[str] = ("leq", "plus", "times")) -> Structure:
    """The arithmetic structure on [0, n) restricted to the chosen built-ins."""
    if not isinstance(n, int) or n < 1:
        raise InvalidUniverseError(f"universe size must be a positive integer, got {n!r}")
    names = [w for w in ("leq", "plus", "times") if w in set(which)]
    unknown = set(which) - set(BUILTIN_ARITIES)
    if unknown:
        raise VocabularyError(f"unknown built-ins {sorted(unknown)}")
    vocab = Vocabulary.of(*((w, BUILTIN_ARITIES[w]) for w in names))
    return Structure._trusted(n, vocab, {w: _builtin_relation(w, n) for w in names})


def expand(A: Structure, new_relations: Mapping, vocabulary: Vocabulary | None = None) -> Structure:
    """Add relations over the same universe.

    Keys of `new_relations` may be RelationSymbols, "name/arity" strings or
    plain names (then `vocabulary` must declare them). Values are tuple
    iterables, boolean arrays or Relation objects.
    """
    syms, rels = [], dict(A.relations)
    for key, value in new_relations.items():
        if isinstance(key, RelationSymbol):
            sym = key
        elif "/" in key:
            sym = Vocabulary.of(key).symbols[0]
        elif vocabulary is not None and key in vocabulary:
            sym = vocabulary.get(key)
        elif isinstance(value, Relation):
            sym = RelationSymbol(key, value.arity)
        else:
            raise VocabularyError(f"cannot infer arity for {key!r}")
        if sym.name in A.vocabulary:
            raise VocabularyError(f"symbol {sym.name!r} already in vocabulary")
        rel = _as_relation(value, sym.arity, A.universe_size)
        if sym.name in BUILTIN_ARITIES and rel != _builtin_relation(sym.name, A.universe_size):
            raise VocabularyError(f"built-in {sym.name!r} must equal its arithmetic relation on [0,{A.universe_size})")
        syms.append(sym)
        rels[sym.name] = rel
    if not syms:
        return A
    return Structure._trusted(A.universe_size, Vocabulary(A.vocabulary.symbols + tuple(syms)), rels)


def restrict(B: Structure, sigma: Vocabulary | Iterable[str]) -> Structure:
    names = sigma.names if isinstance(sigma, Vocabulary) else tuple(sigma)
    missing = [nm for nm in names if nm not in B.vocabulary]
    if missing:
        raise VocabularyError(f"symbols {missing} not in {B.vocabulary}")
    if isinstance(sigma, Vocabulary) and not sigma.issubset(B.vocabulary):
        raise VocabularyError(f"{sigma} is not a subset of {B.vocabulary}")
    keep = tuple(s for s in B.vocabulary if s.name in names)
    return Structure._trusted(B.universe_size, Vocabulary(keep), {s.name: B.relations[s.name] for s in keep})


@dataclass(frozen=True)
class Renaming:
    """Arity-preserving bijection between two vocabularies."""

    pairs: tuple[tuple[RelationSymbol, RelationSymbol], ...]

    def __post_init__(self):
        src = [a for a, _ in self.pairs]
        dst = [b for _, b in self.pairs]
        if len({s.name for s in src}) != len(src) or len({s.name for s in dst}) != len(dst):
            raise VocabularyError("renaming is not a bijection")
        for a, b in self.pairs:
            if a.arity != b.arity:
                raise VocabularyError(f"renaming {a} -> {b} changes arity")

    @classmethod
    def of(cls, vocab: Vocabulary, mapping: Mapping[str, str]) -> "Renaming":
        """Rename the listed symbols of `vocab`; the others map to themselves."""
        for k in mapping:
            if k not in vocab:
                raise VocabularyError(f"{k!r} not in {vocab}")
        return cls(tuple((s, RelationSymbol(mapping.get(s.name, s.name), s.arity)) for s in vocab))

    @property
    def source(self) -> Vocabulary:
        return Vocabulary(tuple(a for a, _ in self.pairs))

    @property
    def target(self) -> Vocabulary:
        return Vocabulary(tuple(b for _, b in self.pairs))

    def name_map(self) -> dict[str, str]:
        return {a.name: b.name for a, b in self.pairs}

    def inverse(self) -> "Renaming":
        return Renaming(tuple((b, a) for a, b in self.pairs))

    def compose(self, then: "Renaming") -> "Renaming":
        nxt = {a.name: b for a, b in then.pairs}
        return Renaming(tuple((a, nxt[b.name]) for a, b in self.pairs))


def rename(A: Structure, r: Renaming) -> Structure:
    if not r.source.same_set(A.vocabulary):
        raise VocabularyError(f"renaming source {r.source} does not match {A.vocabulary}")
    m = {a.name: b for a, b in r.pairs}
    syms = tuple(m[s.name] for s in A.vocabulary)
    rels = {m[k].name: v for k, v in A.relations.items()}
    return Structure(A.universe_size, Vocabulary(syms), rels)


def permute(A: Structure, perm) -> Structure:
    """Image of A under the element bijection i -> perm[i]."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(A.universe_size)):
        raise StructureError("not a permutation of the universe")
    rels = {k: [tuple(perm[a] for a in t) for t in r.tuples()] for k, r in A.relations.items()}
    return Structure(A.universe_size, A.vocabulary, rels)
