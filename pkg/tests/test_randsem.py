import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rlogic.logic import parse, symbol_arities
from rlogic.randsem import (BudgetExceededError, GapClass, GapSpec, GapViolationWarning, ProbEstimate,
                            RandomSpace, amplification_plan, amplify, binomial_tail, bp_query, check_gap,
                            classify, exact_probability, hoeffding_epsilon, hoeffding_samples, mc_probability,
                            probability, sample_bits)
from rlogic.structures import Structure, Vocabulary, VocabularyError, make_arithmetic, make_empty_structure

RHO = Vocabulary.of("R/1")


def test_bit_layout():
    space = RandomSpace(make_empty_structure(3), Vocabulary.of("S/1", "R/2"))
    assert space.bit_budget == 3 + 9
    assert space.offsets() == {"S": 0, "R": 3}
    assert space.bit_index("R", (1, 2)) == 3 + 5
    bits = np.zeros(12, dtype=bool)
    bits[space.bit_index("R", (1, 2))] = True
    bits[space.bit_index("S", (0,))] = True
    X = space.expansion(bits)
    assert X["R"].tuples() == {(1, 2)} and X["S"].tuples() == {(0,)}
    assert np.array_equal(space.expansion_bits(X), bits)


def test_space_validation():
    with pytest.raises(VocabularyError):
        RandomSpace(make_arithmetic(2, ["leq"]), Vocabulary.of("leq/2"))
    with pytest.raises(ValueError):
        RandomSpace(make_empty_structure(2), RHO).expansion([True])


@given(st.integers(1, 4), st.data())
def test_expansion_round_trip(n, data):
    space = RandomSpace(make_empty_structure(n), Vocabulary.of("R/1", "S/2"))
    bits = np.array(data.draw(st.lists(st.booleans(), min_size=space.bit_budget, max_size=space.bit_budget)),
                    dtype=bool)
    assert np.array_equal(space.expansion_bits(space.expansion(bits)), bits)


@pytest.mark.parametrize("text,n,want", [
    ("exists x. R(x)", 2, Fraction(3, 4)),
    ("forall x. R(x)", 2, Fraction(1, 4)),
    ("forall x. R(x)", 3, Fraction(1, 8)),
    ("exists x. R(x) & !R(x)", 3, Fraction(0)),
    ("exists>=2 x. R(x)", 3, Fraction(4, 8)),
])
def test_exact_values(text, n, want):
    est = exact_probability(RandomSpace(make_empty_structure(n), RHO), parse(text))
    assert est.value == want and est.is_exact and est.samples == 2 ** n


def test_exact_with_free_variable():
    space = RandomSpace(make_arithmetic(3, ["leq"]), RHO)
    f = parse("forall y. (leq(y, x) -> R(y))")
    assert exact_probability(space, f, {"x": 1}).value == Fraction(1, 4)


def test_exact_cap():
    space = RandomSpace(make_empty_structure(5), Vocabulary.of("R/2"))
    with pytest.raises(BudgetExceededError):
        exact_probability(space, parse("R(x,x)"), {"x": 0}, cap=24)
    assert probability(space, parse("exists x. R(x,x)"), samples=50).method == "monte-carlo"


def test_hoeffding():
    assert hoeffding_samples(0.02, 0.001) == math.ceil(math.log(2000) / (2 * 0.02 ** 2))
    n = hoeffding_samples(0.05, 0.01)
    assert hoeffding_epsilon(n, 0.01) <= 0.05
    with pytest.raises(ValueError):
        hoeffding_samples(0, 0.1)


def test_sample_bits_are_deterministic():
    a = sample_bits(7, 3, 100)
    assert a.dtype == bool and a.shape == (100,)
    assert np.array_equal(a, sample_bits(7, 3, 100))
    assert not np.array_equal(a, sample_bits(7, 4, 100))
    assert not np.array_equal(a, sample_bits(8, 3, 100))
    assert 0.35 < sample_bits(0, 0, 4000).mean() < 0.65


def test_mc_close_to_exact():
    space = RandomSpace(make_empty_structure(3), Vocabulary.of("R/2"))
    f = parse("forall x. exists y. R(x, y)")
    exact = float(exact_probability(space, f).value)
    est = mc_probability(space, f, epsilon=0.03, delta=0.01, seed=11)
    assert est.samples == hoeffding_samples(0.03, 0.01)
    assert abs(est.value - exact) <= est.epsilon
    lo, hi = est.interval
    assert lo <= exact <= hi
    again = mc_probability(space, f, epsilon=0.03, delta=0.01, seed=11)
    assert again == est


def test_gap_spec_validation():
    with pytest.raises(ValueError):
        GapSpec(Fraction(2, 3), Fraction(1, 3))
    assert GapSpec("1/3", "2/3").alpha == Fraction(1, 3)


@pytest.mark.parametrize("value,want", [
    (Fraction(0), GapClass.LOW), (Fraction(1, 3), GapClass.LOW), (Fraction(1, 2), GapClass.VIOLATION),
    (Fraction(2, 3), GapClass.VIOLATION), (Fraction(3, 4), GapClass.HIGH), (Fraction(1), GapClass.HIGH),
])
def test_classify_exact(value, want):
    est = ProbEstimate(value, "exact", 1)
    assert classify(est, GapSpec(Fraction(1, 3), Fraction(2, 3))) is want


def test_classify_interval():
    gap = GapSpec(Fraction(1, 3), Fraction(2, 3))
    mk = lambda v, eps: ProbEstimate(v, "monte-carlo", 100, eps, 0.01, 0)
    assert classify(mk(0.1, 0.05), gap) is GapClass.LOW
    assert classify(mk(0.9, 0.05), gap) is GapClass.HIGH
    assert classify(mk(0.5, 0.05), gap) is GapClass.VIOLATION
    assert classify(mk(0.35, 0.05), gap) is GapClass.INCONCLUSIVE


def test_check_gap_and_bp_query():
    A = Structure(3, Vocabulary.of("P/1"), {"P": [(0,), (2,)]})
    space = RandomSpace(A, RHO)
    phi = parse("R(x) & P(x)")
    gap = GapSpec(0, Fraction(1, 4))
    got = check_gap([(space, {"x": 0}), (space, {"x": 1})], phi, gap)
    assert got == [GapClass.HIGH, GapClass.LOW]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert bp_query(A, phi, RHO, gap) == {(0,), (2,)}
    with pytest.warns(GapViolationWarning):
        bp_query(A, phi, RHO, GapSpec(Fraction(1, 4), Fraction(1, 2)))


def test_amplify_shape():
    phi = parse("exists x. R(x) & P(x)")
    f, v = amplify(phi, RHO, 3, 2)
    assert v.names == ("R_c1", "R_c2", "R_c3")
    assert "P" in symbol_arities(f)
    with pytest.raises(ValueError):
        amplify(phi, RHO, 2, 3)


def test_binomial_tail():
    assert binomial_tail(3, 1, Fraction(1, 2)) == Fraction(7, 8)
    assert binomial_tail(5, 0, Fraction(1, 3)) == 1
    assert binomial_tail(4, 4, Fraction(1, 3)) == Fraction(1, 81)


@pytest.mark.parametrize("a,b,at,bt", [
    ("1/3", "2/3", "0.05", "0.95"), ("1/4", "1/2", "0.1", "0.9"), ("0", "1/4", "0", "0.9"),
])
def test_amplification_plan_meets_targets(a, b, at, bt):
    a, b, at, bt = map(Fraction, (a, b, at, bt))
    n, l = amplification_plan(a, b, at, bt)
    assert 1 <= l <= n
    # the threshold is monotone in p, so checking the gap endpoints suffices
    assert binomial_tail(n, l, a) <= at
    assert binomial_tail(n, l, b) > bt


def test_amplification_plan_rejects_infeasible():
    with pytest.raises(ValueError):
        amplification_plan(Fraction(1, 3), Fraction(2, 3), 0, Fraction(9, 10))
    with pytest.raises(ValueError):
        amplification_plan(Fraction(2, 3), Fraction(1, 3), Fraction(1, 10), Fraction(9, 10))
