import itertools
from collections import Counter

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from rlogic.generators import (BASE_GRAPHS, BaseGraph, CfiSpec, GraphError, MatchingBaSpec, ShapeError,
                               builtin_base_graph, cfi_shape, gen_cfi, gen_matching_ba, gen_sparse_additive,
                               gen_tcfi, in_class_A, in_class_B, is_sparse, random_3regular, tcfi_atom_count,
                               twist_parity)
from rlogic.structures import Structure, Vocabulary, permute


def _nx(A, rel="E"):
    g = nx.Graph()
    g.add_nodes_from(A.universe)
    g.add_edges_from(A[rel].tuples())
    return g


@pytest.mark.parametrize("name,v,e", [("k4", 4, 6), ("prism", 6, 9), ("petersen", 10, 15), ("theta", 2, 3)])
def test_builtin_bases(name, v, e):
    G = builtin_base_graph(name)
    assert (G.vertex_count, len(G.edges)) == (v, e)
    assert name in BASE_GRAPHS


def test_base_graph_validation():
    with pytest.raises(GraphError):
        BaseGraph(4, ((0, 1), (1, 2), (2, 3), (3, 0)))
    with pytest.raises(GraphError):
        BaseGraph(2, ((0, 1),) * 3)
    two_k4 = tuple(itertools.combinations(range(4), 2)) + tuple(itertools.combinations(range(4, 8), 2))
    with pytest.raises(GraphError):
        BaseGraph(8, two_k4)
    with pytest.raises(KeyError):
        builtin_base_graph("cube")


@pytest.mark.parametrize("v", [4, 6, 10, 16])
def test_random_3regular(v):
    G = random_3regular(v, seed=5)
    g = nx.Graph(list(G.edges))
    assert g.number_of_nodes() == v and nx.is_connected(g)
    assert all(d == 3 for _, d in g.degree())
    assert random_3regular(v, seed=5) == G
    with pytest.raises(GraphError):
        random_3regular(v + 1, seed=0)


@pytest.mark.parametrize("name", BASE_GRAPHS)
def test_cfi_shape(name):
    G = builtin_base_graph(name)
    A = gen_cfi(CfiSpec(G, frozenset({0})))
    assert A.n == 10 * G.vertex_count
    E = A["E"].tuples()
    assert all((b, a) in E for a, b in E) and not any(a == b for a, b in E)
    assert Counter(a for a, _ in E) == {x: 3 for x in A.universe}
    sizes = Counter(sum(1 for b in A.universe if (a, b) in A["sim"].tuples()) for a in A.universe)
    assert sizes == {4: 4 * G.vertex_count, 2: 6 * G.vertex_count}
    groups, centres, edgets = cfi_shape(A)
    assert (len(groups), len(centres), len(edgets)) == (3 * G.vertex_count, G.vertex_count, len(G.edges))


def test_twist_parity_is_isomorphism_class_oracle():
    # independent check through networkx graph isomorphism
    G = builtin_base_graph("k4")
    g0 = _nx(gen_cfi(CfiSpec(G)))
    assert nx.is_isomorphic(g0, _nx(gen_cfi(CfiSpec(G, frozenset({0, 3})))))
    assert not nx.is_isomorphic(g0, _nx(gen_cfi(CfiSpec(G, frozenset({2})))))


@pytest.mark.parametrize("seed", range(3))
def test_twist_parity_random_base(seed):
    G = random_3regular(8, seed)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        T = frozenset(int(i) for i in np.flatnonzero(rng.random(len(G.edges)) < 0.5))
        A = gen_cfi(CfiSpec(G, T))
        assert twist_parity(A) == len(T) % 2
        assert twist_parity(permute(A, rng.permutation(A.n).tolist())) == len(T) % 2


def test_shape_errors():
    with pytest.raises(ShapeError):
        cfi_shape(Structure(10, Vocabulary.of("E/2", "sim/2"), {"E": [], "sim": []}))
    with pytest.raises(GraphError):
        CfiSpec(builtin_base_graph("k4"), frozenset({6}))


def test_tcfi_theta():
    G = builtin_base_graph("theta")
    m = tcfi_atom_count(G)
    A = gen_tcfi(CfiSpec(G))
    base = 10 * G.vertex_count
    assert m == 5 and A.n == base + 32
    sq = A["sqsubseteq"].tuples()
    assert sq == {(base + s, base + t) for s in range(32) for t in range(32) if s & t == s}
    assert {a for (a,) in A["P"].tuples()} == set(range(base, base + 32))
    assert {a for (a,) in A["O"].tuples()} == {base + s for s in range(32) if bin(s).count("1") % 2 == 0}
    atoms = [base + (1 << i) for i in range(m)]
    assert A["less"].tuples() == {(atoms[i], atoms[j]) for i in range(m) for j in range(i + 1, m)}
    # every atom is sim-linked to exactly one group of the CFI graph
    sim = A["sim"].tuples()
    linked = [sorted(b for b in range(base) if (a, b) in sim) for a in atoms]
    assert [len(x) for x in linked] == [4] * len(G.edges) + [4] * G.vertex_count
    assert restrict_graph(A) == restrict_graph(gen_cfi(CfiSpec(G)))


def restrict_graph(A):
    return {(a, b) for a, b in A["E"].tuples()}


def test_tcfi_cap():
    with pytest.raises(GraphError):
        gen_tcfi(CfiSpec(builtin_base_graph("prism")))
    with pytest.raises(GraphError):
        gen_tcfi(CfiSpec(builtin_base_graph("theta")), cap=16)


def test_matching_structure():
    spec = MatchingBaSpec(3, 2)
    A = gen_matching_ba(spec)
    M, N = spec.m_size, spec.n_size
    assert (M, N, A.n) == (6, 4, 10)
    E = A["E"].tuples()
    assert {(a, b) for a, b in E if a < M} == {(0, 1), (1, 0), (2, 3), (3, 2), (4, 5), (5, 4)}
    assert {(a - M, b - M) for a, b in E if a >= M} == {(s, t) for s in range(N) for t in range(N) if s & t == s}
    assert {a for (a,) in A["P"].tuples()} == set(range(M))
    assert in_class_B(MatchingBaSpec(2, 2)) and not in_class_B(MatchingBaSpec(1, 2))
    with pytest.raises(ValueError):
        MatchingBaSpec(0, 1)


def _sparse_brute(Q):
    Q = set(Q)
    return all(sum(1 for q in Q if n <= q <= 3 * n) <= 1 for n in range(max(Q) + 1))


@given(st.sets(st.integers(1, 60), min_size=1, max_size=6))
def test_is_sparse_matches_windows(Q):
    assert is_sparse(Q) == _sparse_brute(Q)
    assert in_class_A(Q) == (_sparse_brute(Q) and len(Q) % 2 == 0)


def test_sparse_structure():
    A = gen_sparse_additive([1, 4, 13])
    assert A.n == 14 and {a for (a,) in A["P"].tuples()} == {1, 4, 13}
    with pytest.raises(ValueError):
        gen_sparse_additive([])


@pytest.mark.parametrize("name", ["theta", "k4"])
def test_twist_parity_reads_augmented_structures(name):
    G = builtin_base_graph(name)
    for T in (frozenset(), frozenset({1}), frozenset({0, 2})):
        A = gen_tcfi(CfiSpec(G, T))
        groups, centres, edgets = cfi_shape(A)
        assert (len(groups), len(centres), len(edgets)) == (3 * G.vertex_count, G.vertex_count, len(G.edges))
        assert twist_parity(A) == len(T) % 2
