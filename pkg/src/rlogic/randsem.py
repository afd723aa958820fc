"""Random expansion spaces and randomised query semantics.

A random expansion of a base structure over the random vocabulary
R_1..R_k is a bitstring of length sum n^{r_i}: relations in declaration
order, each relation's tuples in lexicographic rank. Exact mode enumerates
all bitstrings; Monte Carlo draws sample i from a Philox stream keyed by the
seed with i in the high counter words, so sample i never depends on which
worker produced it.
"""
from __future__ import annotations

import enum
import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .logic.evaluator import Assignment, CompiledFormula, EvaluationError
from .logic.syntax import And, Formula, Or, free_vars, rename_symbols, symbol_arities
from .structures import Relation, RelationSymbol, Structure, Vocabulary, VocabularyError

DEFAULT_EXACT_CAP = 24
DEFAULT_EPSILON = 0.02
DEFAULT_DELTA = 0.001


class BudgetExceededError(EvaluationError):
    pass


class GapViolationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RandomSpace:
    base: Structure
    random_vocab: Vocabulary

    def __post_init__(self):
        if not self.random_vocab.isdisjoint(self.base.vocabulary):
            raise VocabularyError(f"random vocabulary {self.random_vocab} overlaps {self.base.vocabulary}")

    @property
    def n(self) -> int:
        return self.base.universe_size

    @property
    def bit_budget(self) -> int:
        return self.random_vocab.bit_budget(self.n)

    @property
    def vocabulary(self) -> Vocabulary:
        return self.base.vocabulary.union(self.random_vocab)

    def offsets(self) -> dict[str, int]:
        out, off = {}, 0
        for s in self.random_vocab:
            out[s.name] = off
            off += self.n ** s.arity
        return out

    def bit_index(self, name: str, t: tuple[int, ...]) -> int:
        """Position of tuple t of relation `name` in the expansion bitstring."""
        from .structures import tuple_rank
        return self.offsets()[name] + tuple_rank(t, self.n)

    def expansion(self, bits) -> Structure:
        """The expansion encoded by a 0/1 vector of length bit_budget."""
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (self.bit_budget,):
            raise ValueError(f"expected {self.bit_budget} bits, got shape {bits.shape}")
        n, off = self.n, 0
        rels = dict(self.base.relations)
        for s in self.random_vocab:
            size = n ** s.arity
            rels[s.name] = Relation(s.arity, n, dense=bits[off:off + size].reshape((n,) * s.arity))
            off += size
        return Structure._trusted(n, self.vocabulary, rels)

    def expansion_bits(self, X: Structure) -> np.ndarray:
        return np.concatenate([X.relations[s.name].bits() for s in self.random_vocab]) \
            if len(self.random_vocab) else np.zeros(0, dtype=bool)


@dataclass(frozen=True)
class ProbEstimate:
    value: Fraction | float
    method: str
    samples: int
    epsilon: float | None = None
    delta: float | None = None
    seed: int | None = None
    bit_budget: int | None = None
    successes: int | None = None

    def __float__(self):
        return float(self.value)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)

    @property
    def interval(self) -> tuple[float, float]:
        if self.is_exact:
            v = float(self.value)
            return v, v
        return max(0.0, float(self.value) - self.epsilon), min(1.0, float(self.value) + self.epsilon)

    @property
    def stderr(self) -> float:
        if self.is_exact:
            return 0.0
        p = float(self.value)
        return math.sqrt(max(p * (1 - p), 0.0) / self.samples)

    def to_dict(self) -> dict:
        out = {"method": self.method,
               "value": f"{self.value.numerator}/{self.value.denominator}" if self.is_exact else float(self.value),
               "samples": self.samples}
        if not self.is_exact:
            out.update(epsilon=self.epsilon, delta=self.delta, seed=self.seed)
        else:
            out.update(bit_budget=self.bit_budget)
        return out


@dataclass(frozen=True)
class GapSpec:
    alpha: Fraction
    beta: Fraction

    def __post_init__(self):
        a, b = Fraction(self.alpha), Fraction(self.beta)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        if not 0 <= a <= b <= 1:
            raise ValueError(f"need 0 <= alpha <= beta <= 1, got ({a}, {b}]")


class GapClass(str, enum.Enum):
    LOW = "Low"
    HIGH = "High"
    VIOLATION = "Violation"
    INCONCLUSIVE = "Inconclusive"


def _prepare(space: RandomSpace, phi: Formula, asg) -> tuple[CompiledFormula, dict]:
    vocab = space.vocabulary
    for name, ar in symbol_arities(phi).items():
        sym = vocab.get(name)
        if sym is None or sym.arity != ar:
            raise VocabularyError(f"symbol {name}/{ar} not in {vocab}")
    cf = CompiledFormula(phi)
    env = Assignment.coerce(asg).env(space.n)
    missing = [v for v in cf.free_vars + cf.free_sets if v not in env]
    if missing:
        raise EvaluationError(f"free variables {missing} are not bound by the assignment")
    return cf, env


def _satisfies(cf: CompiledFormula, X: Structure, env: dict) -> bool:
    return cf.holds_env(cf.context(X), dict(env))


def exact_probability(space: RandomSpace, phi: Formula, asg=None, *, cap: int = DEFAULT_EXACT_CAP) -> ProbEstimate:
    """Pr over all 2^B expansions, enumerated in lexicographic bit order."""
    B = space.bit_budget
    if B > cap:
        raise BudgetExceededError(f"bit budget {B} exceeds the exact-mode cap {cap}; use mc_probability")
    cf, env = _prepare(space, phi, asg)
    hits = 0
    for bits in itertools.product((False, True), repeat=B):
        if _satisfies(cf, space.expansion(np.array(bits, dtype=bool)), env):
            hits += 1
    return ProbEstimate(Fraction(hits, 2 ** B), "exact", 2 ** B, bit_budget=B)


def hoeffding_samples(epsilon: float, delta: float) -> int:
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError(f"epsilon and delta must lie in (0,1), got {epsilon}, {delta}")
    return math.ceil(math.log(2 / delta) / (2 * epsilon ** 2))


def hoeffding_epsilon(samples: int, delta: float) -> float:
    return math.sqrt(math.log(2 / delta) / (2 * samples))


def sample_bits(seed: int, index: int, count: int) -> np.ndarray:
    """The `count` fair bits of sample `index` under `seed`."""
    gen = np.random.Generator(np.random.Philox(key=seed & ((1 << 128) - 1), counter=[0, 0, index, 0]))
    raw = np.frombuffer(gen.bytes((count + 7) // 8), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:count].astype(bool)


def _mc_chunk(space, phi, env, seed, start, stop):
    cf = CompiledFormula(phi)
    B = space.bit_budget
    return sum(_satisfies(cf, space.expansion(sample_bits(seed, i, B)), env) for i in range(start, stop))


def mc_probability(space: RandomSpace, phi: Formula, asg=None, *, epsilon: float = DEFAULT_EPSILON,
                   delta: float = DEFAULT_DELTA, seed: int = 0, samples: int | None = None,
                   workers: int = 1) -> ProbEstimate:
    """Hoeffding estimate: |value - truth| <= epsilon with probability >= 1 - delta.

    With an explicit `samples` count, epsilon is recomputed from it.
    """
    if samples is None:
        samples = hoeffding_samples(epsilon, delta)
    else:
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0,1), got {delta}")
        if samples < 1:
            raise ValueError("samples must be positive")
        epsilon = hoeffding_epsilon(samples, delta)
    _, env = _prepare(space, phi, asg)
    if workers <= 1:
        hits = _mc_chunk(space, phi, env, seed, 0, samples)
    else:
        bounds = np.linspace(0, samples, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_mc_chunk, space, phi, env, seed, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
            hits = sum(f.result() for f in futs)
    return ProbEstimate(hits / samples, "monte-carlo", samples, epsilon, delta, seed, space.bit_budget, hits)


def probability(space: RandomSpace, phi: Formula, asg=None, *, cap: int = DEFAULT_EXACT_CAP, **mc) -> ProbEstimate:
    """Exact when the bit budget is within `cap`, Monte Carlo otherwise."""
    if space.bit_budget <= cap:
        return exact_probability(space, phi, asg, cap=cap)
    return mc_probability(space, phi, asg, **mc)


def classify(est: ProbEstimate, gap: GapSpec) -> GapClass:
    if est.is_exact:
        v = est.value
        if v <= gap.alpha:
            return GapClass.LOW
        if v > gap.beta:
            return GapClass.HIGH
        return GapClass.VIOLATION
    lo, hi = est.interval
    if hi <= gap.alpha:
        return GapClass.LOW
    if lo > gap.beta:
        return GapClass.HIGH
    if lo > gap.alpha and hi <= gap.beta:
        return GapClass.VIOLATION
    return GapClass.INCONCLUSIVE


def check_gap(instances, phi: Formula, gap: GapSpec, *, cap: int = DEFAULT_EXACT_CAP, **mc) -> list[GapClass]:
    """Classify each (space, assignment) pair; a bare RandomSpace means no free variables."""
    out = []
    for inst in instances:
        space, asg = (inst, None) if isinstance(inst, RandomSpace) else inst
        out.append(classify(probability(space, phi, asg, cap=cap, **mc), gap))
    return out


def bp_query(A: Structure, phi: Formula, random_vocab: Vocabulary, gap: GapSpec, *,
             cap: int = DEFAULT_EXACT_CAP, **mc) -> frozenset:
    """Tuples whose satisfaction probability exceeds beta.

    Tuples falling inside the gap are reported through GapViolationWarning.
    """
    space = RandomSpace(A, random_vocab)
    names = tuple(sorted(free_vars(phi)[0]))
    hits, bad = set(), []
    for t in itertools.product(range(A.universe_size), repeat=len(names)):
        est = probability(space, phi, dict(zip(names, t)), cap=cap, **mc)
        cls = classify(est, gap)
        if cls is GapClass.HIGH:
            hits.add(t)
        elif cls is not GapClass.LOW:
            bad.append((t, est.value))
    if bad:
        warnings.warn(f"{len(bad)} tuple(s) violate the gap ({gap.alpha}, {gap.beta}]: {bad[:5]}",
                      GapViolationWarning, stacklevel=2)
    return frozenset(hits)


def copy_name(name: str, i: int) -> str:
    return f"{name}_c{i}"


def amplify(phi: Formula, rho: Vocabulary, n: int, l: int) -> tuple[Formula, Vocabulary]:
    """Threshold formula: at least l of n independently renamed copies hold."""
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    names = {s.name for s in rho}
    copies = []
    for i in range(1, n + 1):
        mapping = {k: (copy_name(k, i) if k in names else k) for k in symbol_arities(phi)}
        copies.append(rename_symbols(phi, mapping))
    terms = []
    for I in itertools.combinations(range(n), l):
        t = copies[I[0]]
        for i in I[1:]:
            t = And(t, copies[i])
        terms.append(t)
    out = terms[0]
    for t in terms[1:]:
        out = Or(out, t)
    vocab = Vocabulary(tuple(RelationSymbol(copy_name(s.name, i), s.arity) for i in range(1, n + 1) for s in rho))
    return out, vocab


def binomial_tail(n: int, l: int, p) -> Fraction:
    """Exact Pr(Bin(n, p) >= l) for rational p."""
    p = Fraction(p)
    return sum((Fraction(math.comb(n, j)) * p ** j * (1 - p) ** (n - j) for j in range(max(l, 0), n + 1)), Fraction(0))


def _upper_tail_bound(n, l, p):
    """Hoeffding bound on Pr(Bin(n, p) >= l) for l/n > p."""
    t = l / n - p
    return math.exp(-2 * n * t * t) if t > 0 else 1.0


def amplification_plan(alpha, beta, alpha_target, beta_target, *, max_n: int = 100_000) -> tuple[int, int]:
    """(n, l) such that the l-of-n threshold formula moves an (alpha, beta] gap
    to (alpha_target, beta_target].

    Two-sided gaps use the majority threshold l = ceil(n (alpha + beta) / 2)
    and the Hoeffding form of the Chernoff bound. With alpha = 0 the one-sided
    choice l = 1 is used, which keeps probability 0 at 0.
    """
    a, b, at, bt = (Fraction(x) for x in (alpha, beta, alpha_target, beta_target))
    if not (0 <= a < b < 1 and 0 <= at < bt < 1):
        raise ValueError(f"infeasible gap parameters ({a}, {b}] -> ({at}, {bt}]")
    if a == 0:
        for n in range(1, max_n + 1):
            if 1 - (1 - b) ** n > bt:
                return n, 1
        raise ValueError("no plan within max_n")
    if at == 0:
        raise ValueError("a two-sided gap cannot be amplified to alpha' = 0")
    fa, fb, fat, fbt = float(a), float(b), float(at), float(bt)
    for n in range(1, max_n + 1):
        l = math.ceil(n * (a + b) / 2)
        low_ok = _upper_tail_bound(n, l, fa) <= fat
        # Pr(Bin(n, p) < l) for p just above beta, by symmetry of the bound
        miss = _upper_tail_bound(n, n - l + 1, 1 - fb)
        if low_ok and 1 - miss > fbt:
            return n, l
    raise ValueError("no plan within max_n")
