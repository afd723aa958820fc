"""Structure families: base cubic graphs, CFI graphs, the Boolean-algebra
augmented CFI class, matching/Boolean-algebra structures and sparse additive
structures.

Canonical layouts (all fixed so outputs are byte-reproducible):

* CFI gadget of base vertex v occupies nodes 10v..10v+9. Nodes 10v+0..3 are
  the centre nodes labelled by the even subsets {}, {0,1}, {0,2}, {1,2} of
  the three incidence slots; slot j has a-node 10v+4+2j and b-node
  10v+5+2j. A centre node is joined to the a-node of slot j iff j is in its
  label, otherwise to the b-node. Slots of v are its incident edges in
  increasing edge index.
* Boolean algebra element with atom set s (a bitmask over m atoms) is node
  base + s. Atom i < |E| is linked by sim to the four nodes of edget i, atom
  |E| + v to the centre group of v.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .structures import Structure, StructureError, Vocabulary, _builtin_relation

CENTRE_LABELS = ((), (0, 1), (0, 2), (1, 2))
DEFAULT_TCFI_CAP = 2 ** 12


class GraphError(StructureError):
    pass


@dataclass(frozen=True)
class BaseGraph:
    """A connected 3-regular (multi)graph; parallel edges keep distinct indices."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    multigraph: bool = False

    def __post_init__(self):
        deg = [0] * self.vertex_count
        for u, v in self.edges:
            if u == v:
                raise GraphError("self-loops are not allowed")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise GraphError(f"edge {(u, v)} out of range")
            deg[u] += 1
            deg[v] += 1
        if any(d != 3 for d in deg):
            raise GraphError(f"not 3-regular: degrees {deg}")
        keys = [tuple(sorted(e)) for e in self.edges]
        if len(set(keys)) != len(keys) and not self.multigraph:
            raise GraphError("parallel edges need multigraph=True")
        if not self._connected():
            raise GraphError("base graph is not connected")

    def _connected(self):
        g = nx.MultiGraph()
        g.add_nodes_from(range(self.vertex_count))
        g.add_edges_from(self.edges)
        return nx.is_connected(g)

    def incident(self, v: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if v in e]


def builtin_base_graph(name: str) -> BaseGraph:
    if name == "k4":
        return BaseGraph(4, tuple(itertools.combinations(range(4), 2)))
    if name == "prism":
        return BaseGraph(6, ((0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)))
    if name == "petersen":
        return BaseGraph(10, tuple(sorted(tuple(sorted(e)) for e in nx.petersen_graph().edges())))
    if name == "theta":
        return BaseGraph(2, ((0, 1), (0, 1), (0, 1)), multigraph=True)
    raise KeyError(f"unknown base graph {name!r}; choose from k4, prism, petersen, theta")


BASE_GRAPHS = ("k4", "prism", "petersen", "theta")


def random_3regular(v: int, seed: int, max_tries: int = 1000) -> BaseGraph:
    """A simple connected cubic graph, retried until connected."""
    if v < 4 or v % 2:
        raise GraphError(f"need an even vertex count >= 4, got {v}")
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(max_tries):
        g = nx.random_regular_graph(3, v, seed=int(child.generate_state(1)[0]))
        if nx.is_connected(g):
            return BaseGraph(v, tuple(sorted(tuple(sorted(e)) for e in g.edges())))
    raise GraphError(f"no connected graph within {max_tries} tries")


@dataclass(frozen=True)
class CfiSpec:
    base: BaseGraph
    twist_set: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        ts = frozenset(self.twist_set)
        object.__setattr__(self, "twist_set", ts)
        if not ts <= set(range(len(self.base.edges))):
            raise GraphError(f"twist set {sorted(ts)} is not a set of edge indices")


def _cfi_layout(G: BaseGraph, twist):
    """E edges, edge groups, centre groups and edgets of the CFI graph."""
    slot = {}
    for v in range(G.vertex_count):
        for j, e in enumerate(G.incident(v)):
            slot[(v, e)] = j
    E = set()
    for v in range(G.vertex_count):
        for c, label in enumerate(CENTRE_LABELS):
            for j in range(3):
                end = 10 * v + 4 + 2 * j + (0 if j in label else 1)
                E.add((10 * v + c, end))
    edgets = []
    for e, (u, v) in enumerate(G.edges):
        au, av = 10 * u + 4 + 2 * slot[(u, e)], 10 * v + 4 + 2 * slot[(v, e)]
        pairs = [(au, av + 1), (au + 1, av)] if e in twist else [(au, av), (au + 1, av + 1)]
        E.update(pairs)
        edgets.append((au, au + 1, av, av + 1))
    E |= {(b, a) for a, b in E}
    centres = [tuple(range(10 * v, 10 * v + 4)) for v in range(G.vertex_count)]
    groups = [(10 * v + 4 + 2 * j, 10 * v + 5 + 2 * j) for v in range(G.vertex_count) for j in range(3)]
    return E, groups, centres, edgets


CFI_VOCAB = Vocabulary.of("E/2", "sim/2")
TCFI_VOCAB = Vocabulary.of("E/2", "sim/2", "less/2", "sqsubseteq/2", "P/1", "O/1")


def gen_cfi(spec: CfiSpec) -> Structure:
    E, groups, centres, _ = _cfi_layout(spec.base, spec.twist_set)
    sim = set()
    for cls in groups + centres:
        sim.update(itertools.product(cls, repeat=2))
    return Structure(10 * spec.base.vertex_count, CFI_VOCAB, {"E": E, "sim": sim})


def tcfi_atom_count(G: BaseGraph) -> int:
    return G.vertex_count + len(G.edges)


def gen_tcfi(spec: CfiSpec, cap: int = DEFAULT_TCFI_CAP) -> Structure:
    """CFI graph plus the powerset algebra on m = |V| + |E| atoms."""
    G = spec.base
    m = tcfi_atom_count(G)
    if 2 ** m > cap:
        raise GraphError(f"Boolean algebra with {m} atoms has {2 ** m} elements, above the cap {cap}")
    E, _, centres, edgets = _cfi_layout(G, spec.twist_set)
    base = 10 * G.vertex_count
    n = base + 2 ** m
    atoms = [base + (1 << i) for i in range(m)]
    sim = {(a, a) for a in range(n)}
    for i, cls in enumerate(list(edgets) + centres):
        members = tuple(cls) + (atoms[i],)
        sim.update(itertools.product(members, repeat=2))
    less = {(atoms[i], atoms[j]) for i in range(m) for j in range(i + 1, m)}
    sq = {(base + s, base + t) for t in range(2 ** m) for s in _submasks(t)}
    P = {(base + s,) for s in range(2 ** m)}
    O = {(base + s,) for s in range(2 ** m) if bin(s).count("1") % 2 == 0}
    return Structure(n, TCFI_VOCAB, {"E": E, "sim": sim, "less": less, "sqsubseteq": sq, "P": P, "O": O})


def _submasks(t):
    s = t
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & t


class ShapeError(StructureError):
    pass


def cfi_shape(A: Structure):
    """Recover (edge groups, centre groups, edgets) from a CFI-shaped structure.

    Only E and sim are read, and only non-P elements are considered, so the
    augmented class works too. Edge groups are returned as sorted pairs.
    """
    P = {t[0] for t in A["P"].tuples()} if "P" in A.vocabulary else set()
    nodes = [a for a in A.universe if a not in P]
    E = A["E"].tuples()
    adj = {a: set() for a in nodes}
    for a, b in E:
        if a in adj:
            adj[a].add(b)
    classes = {}
    for a, b in A["sim"].tuples():
        if a in adj and b in adj:
            classes.setdefault(a, set()).add(b)
    seen, groups, centres = set(), [], []
    for a in nodes:
        if a in seen:
            continue
        cls = classes.get(a, {a}) | {a}
        seen |= cls
        # a class of 4 mutually non-adjacent nodes is a centre group; an edget
        # class contains cross edges and splits into two groups
        internal = [(x, y) for x in cls for y in adj[x] if y in cls]
        if len(cls) == 2 and not internal:
            groups.append(tuple(sorted(cls)))
        elif len(cls) == 4 and not internal:
            centres.append(tuple(sorted(cls)))
        elif len(cls) == 4:
            x = min(cls)
            partner = [y for y in cls if y != x and y not in adj[x]
                       and _centre_side(x, adj, cls, classes) == _centre_side(y, adj, cls, classes)]
            if len(partner) != 1:
                raise ShapeError(f"cannot split edget class {sorted(cls)}")
            g1 = tuple(sorted((x, partner[0])))
            groups.append(g1)
            groups.append(tuple(sorted(cls - set(g1))))
        else:
            raise ShapeError(f"class {sorted(cls)} is neither an edge group nor a centre group")
    for a in nodes:
        if len(adj[a]) != 3:
            raise ShapeError(f"node {a} has degree {len(adj[a])}, expected 3")
    group_of = {x: g for g in groups for x in g}
    centre_of = {x: c for c in centres for x in c}
    edgets = set()
    for g in groups:
        outs = set()
        for x in g:
            for y in adj[x]:
                if y in group_of and group_of[y] != g:
                    outs.add(group_of[y])
                elif y not in centre_of and y not in group_of:
                    raise ShapeError(f"edge {(x, y)} leaves the graph")
        if len(outs) != 1:
            raise ShapeError(f"edge group {g} is joined to {len(outs)} other groups")
        edgets.add(tuple(sorted((g, outs.pop()))))
    return groups, centres, sorted(edgets)


def _centre_side(x, adj, cls, classes):
    """The centre group(s) x hangs off; a and b of one group share it."""
    return frozenset(z for y in adj[x] if y not in cls for z in classes.get(y, {y}) | {y})


def twist_parity(A: Structure) -> int:
    """Parity of (odd centre groups + twisted edgets) under smallest-node a-labels."""
    groups, centres, edgets = cfi_shape(A)
    E = A["E"].tuples()
    a_nodes = {g[0] for g in groups}
    odd = 0
    for c in centres:
        counts = {sum((x, y) in E for y in a_nodes) % 2 for x in c}
        if len(counts) != 1:
            raise ShapeError(f"centre group {c} has mixed parities")
        odd += counts.pop()
    twisted = 0
    for g1, g2 in edgets:
        twisted += (g1[0], g2[1]) in E
    return (odd + twisted) % 2


@dataclass(frozen=True)
class MatchingBaSpec:
    pair_count: int
    atom_count: int

    def __post_init__(self):
        if self.pair_count < 1 or self.atom_count < 1:
            raise ValueError("pair_count and atom_count must be >= 1")

    @property
    def m_size(self) -> int:
        return 2 * self.pair_count

    @property
    def n_size(self) -> int:
        return 2 ** self.atom_count


MATCHING_VOCAB = Vocabulary.of("leq/2", "E/2", "P/1")


def gen_matching_ba(spec: MatchingBaSpec) -> Structure:
    """M = 0..2p-1 matched as (0,1),(2,3),...; N above it ordered by inclusion."""
    M, N = spec.m_size, spec.n_size
    n = M + N
    E = set()
    for i in range(0, M, 2):
        E |= {(i, i + 1), (i + 1, i)}
    E |= {(M + s, M + t) for t in range(N) for s in _submasks(t)}
    return Structure(n, MATCHING_VOCAB, {"leq": _builtin_relation("leq", n), "E": E, "P": {(a,) for a in range(M)}})


def in_class_B(spec: MatchingBaSpec) -> bool:
    # 2^{2p} >= (2^k)^2  <=>  p >= k
    return spec.pair_count >= spec.atom_count


def is_sparse(Q) -> bool:
    """At most one element of Q in every window {n, ..., 3n}."""
    q = sorted(set(Q))
    # the binding window for consecutive a < b is n = a
    return all(b > 3 * a for a, b in zip(q, q[1:]))


SPARSE_VOCAB = Vocabulary.of("plus/3", "P/1")


def gen_sparse_additive(Q) -> Structure:
    Q = sorted(set(Q))
    if not Q:
        raise ValueError("Q must be nonempty")
    if Q[0] < 0:
        raise ValueError("Q must contain naturals")
    n = Q[-1] + 1
    return Structure(n, SPARSE_VOCAB, {"plus": _builtin_relation("plus", n), "P": {(q,) for q in Q}})


def in_class_A(Q) -> bool:
    return bool(Q) and is_sparse(Q) and len(set(Q)) % 2 == 0
