import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from rlogic.derand import (CoverProblem, DesignError, PartialDesign, build_design, cover_search, identity_design,
                           nisan_expand, pack_relations, poly_coefficients, poly_eval, prg_probability,
                           suggest_prg_parameters, verify_cover)
from rlogic.logic import parse
from rlogic.randsem import RandomSpace, exact_probability
from rlogic.structures import Vocabulary, VocabularyError, make_arithmetic, make_empty_structure


def test_poly_helpers():
    assert poly_coefficients(0, 5, 2) == (0, 0, 0)
    assert poly_coefficients(7, 5, 2) == (2, 1, 0)
    c = (3, 0, 2)
    for x in range(7):
        assert poly_eval(c, x, 7) == (3 + 2 * x * x) % 7


@pytest.mark.parametrize("n,m,d", [(4, 2, 1), (9, 3, 1), (20, 5, 2), (64, 11, 2), (100, 11, 3)])
def test_design_properties(n, m, d):
    D = build_design(n, m, d)
    assert D.l == m * m and len(D.sets) == n
    assert all(len(A) == m for A in D.sets)
    assert D.max_intersection() <= d
    assert len(set(D.sets)) == n
    M = D.matrix()
    assert M.shape == (n, m * m) and (M.sum(axis=1) == m).all()
    # every set picks exactly one point per block of m
    assert all(sorted(x // m for x in A) == list(range(m)) for A in D.sets)


def test_design_validation():
    with pytest.raises(DesignError):
        build_design(4, 4, 1)
    with pytest.raises(DesignError):
        build_design(10, 3, 1)
    with pytest.raises(DesignError):
        build_design(0, 3, 1)
    bad = PartialDesign(2, 2, 0, (frozenset({0, 1}), frozenset({0, 2})))
    assert bad.problems()
    with pytest.raises(DesignError):
        bad.validate()
    with pytest.raises(DesignError):
        PartialDesign(3, 2, 1, (frozenset({0, 1}),))


def test_design_json_round_trip():
    D = build_design(12, 5, 1)
    assert PartialDesign.from_dict(D.to_dict()) == D
    with pytest.raises(DesignError):
        PartialDesign.from_dict({"n": 1})
    assert D.truncate(3).sets == D.sets[:3]


def test_identity_design_passes_bits_through():
    y = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
    assert np.array_equal(nisan_expand(y, identity_design(5)), y.astype(bool))
    with pytest.raises(DesignError):
        nisan_expand(y[:3], identity_design(5))


def test_expansion_is_parity_of_selected_bits():
    D = build_design(20, 5, 2)
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, D.l)
    out = nisan_expand(y, D)
    assert [bool(sum(y[j] for j in A) % 2) for A in D.sets] == out.tolist()


@given(st.data())
@settings(max_examples=50)
def test_expansion_linear(data):
    D = build_design(30, 7, 1)
    y = np.array(data.draw(st.lists(st.integers(0, 1), min_size=D.l, max_size=D.l)))
    z = np.array(data.draw(st.lists(st.integers(0, 1), min_size=D.l, max_size=D.l)))
    assert np.array_equal(nisan_expand(y ^ z, D), nisan_expand(y, D) ^ nisan_expand(z, D))


@pytest.mark.parametrize("n,depth", [(2, 0), (8, 0), (100, 0), (1000, 1), (10 ** 6, 2)])
def test_suggested_parameters(n, depth):
    m, d = suggest_prg_parameters(n, depth)
    assert sympy.isprime(m) and d == math.ceil(math.log2(n))
    assert m ** (d + 1) >= n
    if m <= 101:
        assert not build_design(min(n, 64), m, d).problems()


def test_packing_preserves_probability():
    A = make_arithmetic(3, ["leq"])
    rho = Vocabulary.of("R1/1", "R2/1")
    for text in ["exists x. R1(x) & !R2(x)", "forall x. R1(x) | R2(x)", "exists x. exists y. R1(x) & R2(y) & !x = y"]:
        psi = parse(text)
        packed, R = pack_relations(psi, rho, A.vocabulary)
        assert R.arity == 2
        want = exact_probability(RandomSpace(A, rho), psi).value
        assert exact_probability(RandomSpace(A, Vocabulary((R,))), packed).value == want


def test_packing_needs_order():
    with pytest.raises(VocabularyError):
        pack_relations(parse("exists x. R1(x)"), Vocabulary.of("R1/1"), Vocabulary.of("E/2"))


def test_prg_probability():
    space = RandomSpace(make_empty_structure(3), Vocabulary.of("R/1"))
    phi = parse("exists x. R(x)")
    assert prg_probability(space, phi, identity_design(3)).value == Fraction(7, 8)
    D = build_design(3, 3, 1)
    a = prg_probability(space, phi, D)
    assert a.method == "prg-exact" and a.samples == 2 ** 9
    assert a == prg_probability(space, phi, D)
    mc = prg_probability(space, phi, D, "mc", seed=2, samples=300)
    assert mc == prg_probability(space, phi, D, "mc", seed=2, samples=300)
    with pytest.raises(DesignError):
        prg_probability(space, phi, identity_design(4))
    with pytest.raises(DesignError):
        prg_probability(space, phi, build_design(3, 5, 1))
    with pytest.raises(ValueError):
        prg_probability(space, phi, D, "sometimes")


def _brute_cover(l, M, k):
    N = 2 ** l
    full = set(range(N))
    return any(set().union(*({x ^ y for x in M} for y in ys)) == full
               for ys in itertools.combinations_with_replacement(range(N), k))


@pytest.mark.parametrize("k", [2, 3])
def test_cover_search_matches_brute_force(k):
    l = 3
    for size in range(1, 7):
        for M in itertools.combinations(range(8), size):
            res = cover_search(CoverProblem(l, frozenset(M)), k, budget=50)
            assert res.definitive
            assert res.found == _brute_cover(l, M, k), M
            if res.found:
                assert verify_cover(CoverProblem(l, frozenset(M)), res.translates)


def test_cover_counting_bound():
    res = cover_search(CoverProblem(6, frozenset(range(10))), k=6)
    assert not res.found and res.definitive and res.method == "counting-bound"


def test_cover_large_dimension_random():
    rng = np.random.default_rng(1)
    M = frozenset(rng.choice(2 ** 10, 2 ** 10 - 40, replace=False).tolist())
    res = cover_search(CoverProblem(10, M), k=10)
    assert res.found and verify_cover(CoverProblem(10, M), res.translates)


def test_cover_problem_validation():
    with pytest.raises(ValueError):
        CoverProblem(0, frozenset())
    with pytest.raises(ValueError):
        CoverProblem(3, frozenset({8}))
    with pytest.raises(ValueError):
        cover_search(CoverProblem(3, frozenset({1})), 0)
