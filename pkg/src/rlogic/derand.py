"""Polynomial-graph designs, Nisan seed expansion, relation packing and
translation covers of the Boolean cube.

Output bit j of the generator is the bit at position j of the expansion
bitstring of a RandomSpace, i.e. relations in random-vocabulary declaration
order and tuples in lexicographic rank order within each relation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy

from .corpus import _phi
from .logic.evaluator import CompiledFormula
from .logic.syntax import And, Atom, Exists, Formula, map_atoms, symbol_arities, variables
from .randsem import ProbEstimate, RandomSpace, _prepare, hoeffding_epsilon, sample_bits
from .structures import RelationSymbol, Vocabulary, VocabularyError

EXACT_SEED_CAP = 20
MAX_COVER_DIM = 20


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class PartialDesign:
    """Sets A_1..A_n within [l], each of size m, pairwise meeting in <= degree_bound points."""

    n: int
    m: int
    degree_bound: int
    sets: tuple[frozenset, ...]
    l: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(int(x) for x in A) for A in self.sets))
        if self.l is None:
            object.__setattr__(self, "l", self.m * self.m)
        if len(self.sets) != self.n:
            raise DesignError(f"expected {self.n} sets, got {len(self.sets)}")

    def problems(self) -> list[str]:
        out = []
        for i, A in enumerate(self.sets):
            if len(A) != self.m:
                out.append(f"|A_{i}| = {len(A)} != {self.m}")
            if A and (min(A) < 0 or max(A) >= self.l):
                out.append(f"A_{i} is not within [0, {self.l})")
        for i, j in itertools.combinations(range(self.n), 2):
            k = len(self.sets[i] & self.sets[j])
            if k > self.degree_bound:
                out.append(f"|A_{i} & A_{j}| = {k} > {self.degree_bound}")
        if self.n > 1 and self.degree_bound > math.ceil(math.log2(self.n)):
            out.append(f"degree bound {self.degree_bound} exceeds ceil(log2 {self.n})")
        return out

    def validate(self) -> "PartialDesign":
        bad = self.problems()
        if bad:
            raise DesignError("; ".join(bad[:5]))
        return self

    def max_intersection(self) -> int:
        return max((len(a & b) for a, b in itertools.combinations(self.sets, 2)), default=0)

    def matrix(self) -> np.ndarray:
        """n x l 0/1 incidence matrix."""
        M = np.zeros((self.n, self.l), dtype=np.uint8)
        for i, A in enumerate(self.sets):
            M[i, sorted(A)] = 1
        return M

    def truncate(self, n: int) -> "PartialDesign":
        if not 1 <= n <= self.n:
            raise DesignError(f"cannot truncate {self.n} sets to {n}")
        return PartialDesign(n, self.m, self.degree_bound, self.sets[:n], self.l)

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "degree_bound": self.degree_bound, "l": self.l,
                "sets": [sorted(A) for A in self.sets]}

    @classmethod
    def from_dict(cls, doc: dict) -> "PartialDesign":
        try:
            return cls(int(doc["n"]), int(doc["m"]), int(doc["degree_bound"]),
                       tuple(frozenset(A) for A in doc["sets"]), doc.get("l"))
        except (KeyError, TypeError) as exc:
            raise DesignError(f"malformed design document: {exc}") from exc


def poly_coefficients(i: int, m: int, degree_bound: int) -> tuple[int, ...]:
    """Base-m digits of i, constant term first."""
    out = []
    for _ in range(degree_bound + 1):
        i, r = divmod(i, m)
        out.append(r)
    return tuple(out)


def poly_eval(coeffs, x: int, m: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % m
    return acc


def build_design(n: int, m: int, degree_bound: int) -> PartialDesign:
    """A_i is the graph {x*m + f_i(x)} of the i-th polynomial of degree <= degree_bound."""
    if n < 1:
        raise DesignError("n must be positive")
    if not sympy.isprime(m):
        raise DesignError(f"m = {m} is not prime")
    if degree_bound < 0:
        raise DesignError("degree bound must be nonnegative")
    if n > m ** (degree_bound + 1):
        raise DesignError(f"only {m ** (degree_bound + 1)} polynomials of degree <= {degree_bound} over F_{m}, need {n}")
    if degree_bound >= m and n > m ** m:
        raise DesignError("polynomials of degree >= m are not distinct as functions")
    sets = []
    for i in range(n):
        c = poly_coefficients(i, m, degree_bound)
        sets.append(frozenset(x * m + poly_eval(c, x, m) for x in range(m)))
    return PartialDesign(n, m, degree_bound, tuple(sets))


def identity_design(n: int) -> PartialDesign:
    """A_i = {i}: the generator passes seed bits through unchanged."""
    return PartialDesign(n, 1, 0, tuple(frozenset((i,)) for i in range(n)), l=n)


def nisan_expand(seed, design: PartialDesign) -> np.ndarray:
    """Output bit i is the parity of the seed bits indexed by A_i."""
    y = np.asarray(seed, dtype=np.uint8).reshape(-1)
    if y.shape != (design.l,):
        raise DesignError(f"seed has length {y.size}, design needs {design.l}")
    return (design.matrix() @ y) % 2 == 1


def _fresh(taken, count):
    out, k = [], 0
    while len(out) < count:
        name = f"_p{k}"
        if name not in taken:
            out.append(name)
        k += 1
    return out


def pack_relations(phi: Formula, rho: Vocabulary, base: Vocabulary, symbol: str = "R") -> tuple[Formula, RelationSymbol]:
    """Replace R_1..R_k by one relation R of arity 1 + max arity.

    R_i(xs) becomes exists y (y is element i-1 & R(y, y, ..., y, xs)); the
    padding reuses y. Needs leq in the base vocabulary to name elements.
    """
    if len(rho) == 0:
        return phi, None
    if "leq" not in base:
        raise VocabularyError("packing needs the order leq in the base vocabulary")
    taken_syms = set(symbol_arities(phi)) | set(base.names)
    while symbol in taken_syms or symbol in rho:
        symbol += "_"
    rmax = max(s.arity for s in rho)
    index = {s.name: i for i, s in enumerate(rho.symbols)}
    f, a, b = _fresh(variables(phi), 3)

    def repl(at: Atom) -> Formula:
        i = index.get(at.rel)
        if i is None:
            return at
        pad = (f,) * (rmax - len(at.args))
        return Exists(f, And(_phi(i, f, a, b), Atom(symbol, (f,) + pad + at.args)))

    return map_atoms(phi, repl), RelationSymbol(symbol, rmax + 1)


def _prg_count(space, cf, env, design, seeds):
    cache: dict[bytes, bool] = {}
    hits = 0
    for y in seeds:
        bits = nisan_expand(y, design)
        key = np.packbits(bits).tobytes()
        r = cache.get(key)
        if r is None:
            r = cache[key] = cf.holds_env(cf.context(space.expansion(bits)), dict(env))
        hits += r
    return hits


def prg_probability(space: RandomSpace, phi: Formula, design: PartialDesign, mode: str = "exact", *,
                    asg=None, seed: int = 0, samples: int = 1000, delta: float = 0.001) -> ProbEstimate:
    """Pr over seeds that the generated expansion satisfies phi."""
    if design.n != space.bit_budget:
        raise DesignError(f"design produces {design.n} bits, the space needs {space.bit_budget}")
    cf, env = _prepare(space, phi, asg)
    if mode == "exact":
        if design.l > EXACT_SEED_CAP:
            raise DesignError(f"seed length {design.l} exceeds the exact cap {EXACT_SEED_CAP}")
        seeds = (np.array(y, dtype=np.uint8) for y in itertools.product((0, 1), repeat=design.l))
        hits = _prg_count(space, cf, env, design, seeds)
        total = 2 ** design.l
        return ProbEstimate(Fraction(hits, total), "prg-exact", total, bit_budget=design.l)
    if mode == "mc":
        seeds = (sample_bits(seed, i, design.l) for i in range(samples))
        hits = _prg_count(space, cf, env, design, seeds)
        return ProbEstimate(hits / samples, "prg-monte-carlo", samples, hoeffding_epsilon(samples, delta),
                            delta, seed, design.l, hits)
    raise ValueError(f"mode must be 'exact' or 'mc', got {mode!r}")


def suggest_prg_parameters(n: int, depth: int, max_m: int = 1009) -> tuple[int, int]:
    """(m, degree bound): the least prime above ceil(log2 n)^(depth+3), capped at max_m,
    raised further only if there are too few polynomials."""
    if n < 2:
        raise ValueError("n must be at least 2")
    d = math.ceil(math.log2(n))
    target = min(max(d ** (depth + 3), 2), max_m)
    m = sympy.nextprime(target - 1)
    while m ** (d + 1) < n:
        m = sympy.nextprime(m)
    return int(m), d


# ---------------------------------------------------------------- covers


@dataclass(frozen=True)
class CoverProblem:
    l: int
    M: frozenset

    def __post_init__(self):
        if not 1 <= self.l <= MAX_COVER_DIM:
            raise ValueError(f"dimension must lie in 1..{MAX_COVER_DIM}")
        object.__setattr__(self, "M", frozenset(int(x) for x in self.M))
        if any(not 0 <= x < 2 ** self.l for x in self.M):
            raise ValueError("points of M must lie in [0, 2^l)")

    @property
    def size(self) -> int:
        return 2 ** self.l


@dataclass(frozen=True)
class CoverResult:
    found: bool
    translates: tuple[int, ...] = ()
    method: str = ""
    definitive: bool = False
    covered: int = 0


def _translate_mask(M, y) -> int:
    mask = 0
    for x in M:
        mask |= 1 << (x ^ y)
    return mask


def verify_cover(problem: CoverProblem, translates) -> bool:
    full = (1 << problem.size) - 1
    mask = 0
    for y in translates:
        mask |= _translate_mask(problem.M, y)
    return mask == full


def cover_search(problem: CoverProblem, k: int, budget: int = 10_000, seed: int = 0) -> CoverResult:
    """k translates y_i with the union of y_i xor M equal to the whole cube, or a not-found result.

    Not-found is definitive when k|M| < 2^l or the exhaustive pass ran (l <= 5).
    """
    N, M = problem.size, problem.M
    if k < 1:
        raise ValueError("k must be positive")
    if k * len(M) < N:
        return CoverResult(False, method="counting-bound", definitive=True, covered=k * len(M))
    full = (1 << N) - 1
    masks = [_translate_mask(M, y) for y in range(N)] if problem.l <= 12 else None
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        ys = tuple(int(y) for y in rng.integers(0, N, size=k))
        acc = 0
        for y in ys:
            acc |= masks[y] if masks is not None else _translate_mask(M, y)
        if acc == full:
            assert verify_cover(problem, ys)
            return CoverResult(True, ys, "random", True, N)
    if problem.l > 5:
        return CoverResult(False, method="budget-exhausted", definitive=False)
    # shifting a cover by its first translate gives a cover containing 0
    for rest in itertools.combinations(range(1, N), min(k, N) - 1):
        acc = masks[0]
        for y in rest:
            acc |= masks[y]
        if acc == full:
            ys = (0,) + rest
            assert verify_cover(problem, ys)
            return CoverResult(True, ys, "exhaustive", True, N)
    return CoverResult(False, method="exhaustive", definitive=True)
