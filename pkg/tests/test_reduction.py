import itertools

import numpy as np
import pytest

from hcs.errors import InvalidInput, InvalidLabeling, InvalidParameter, SizeLimitError
from hcs.labelcover import Alpha, Edge, LabelCoverInstance, OneToOne, TwoToTwo, gen_planted
from hcs.operators import gadget_operator
from hcs.oracles import SimpleGraph
from hcs.qcube import all_points
from hcs.reduction import (ColoringAssignment, decode_tlabeling, decoder_rule,
                           intended_coloring, read_set, reduce, verify_coloring)

FAMILY = {"almost3": "one-to-one", "col4": "two-to-two", "col3": "alpha"}


def single_edge(kind, R, perms=None):
    if kind == "almost3":
        c = OneToOne(perms or tuple(range(1, R + 1)))
    else:
        ident = tuple(range(1, R + 1))
        p1, p2 = perms or (ident, ident)
        c = (TwoToTwo if kind == "col4" else Alpha)(p1, p2)
    return LabelCoverInstance(2, R, (Edge(0, 1, c),))


def edge_set(graph):
    return {tuple(e) for e in graph.edge_array().tolist()}


# --- reduce -------------------------------------------------------------------


def test_almost3_isolated_block():
    g = reduce("almost3", LabelCoverInstance(1, 1))
    assert g.num_vertices == 3 and g.num_edges == 0


def test_almost3_single_edge_r1():
    g = reduce("almost3", single_edge("almost3", 1))
    assert edge_set(g) == {(x, 3 + y) for x in range(3) for y in range(3) if x != y}


def test_col3_single_edge_matches_support():
    g = reduce("col3", single_edge("col3", 2))
    T = gadget_operator("alpha")
    expected = {(x, 9 + y) for x in range(9) for y in range(9) if (x, y) in T.support}
    assert edge_set(g) == expected
    assert len(expected) == sum(1 for x, y in itertools.product(range(9), repeat=2)
                                if T.exact[x][y] > 0)


def test_col4_single_edge_matches_support():
    g = reduce("col4", single_edge("col4", 2))
    T = gadget_operator("col4")
    assert edge_set(g) == {(x, 16 + y) for x, y in T.support}


@pytest.mark.parametrize("kind,R", [("almost3", 2), ("col3", 4), ("col4", 2)])
def test_support_soundness_with_permutations(kind, R):
    rng = np.random.default_rng(R)
    if kind == "almost3":
        perms = tuple(int(p) + 1 for p in rng.permutation(R))
    else:
        perms = tuple(tuple(int(p) + 1 for p in rng.permutation(R)) for _ in range(2))
    G = single_edge(kind, R, perms)
    g = reduce(kind, G)
    T = gadget_operator("alpha" if kind == "col3" else kind)
    p1, p2 = (tuple(range(1, R + 1)), perms) if kind == "almost3" else perms
    pts = all_points(g.q, g.n)
    edges = edge_set(g)
    size = g.block_size
    sample = rng.choice(size * size, size=min(size * size, 2000), replace=False)
    for flat in sample:
        a, b = divmod(int(flat), size)
        xa, yb = pts[a], pts[b]
        xp = [xa[p - 1] for p in p1]
        yp = [yb[p - 1] for p in p2]
        if kind == "almost3":
            pairs = list(zip(xp, yp))
        else:
            pairs = [(g.q * xp[2 * i] + xp[2 * i + 1], g.q * yp[2 * i] + yp[2 * i + 1])
                     for i in range(R // 2)]
        supported = all(pair in T.support for pair in pairs)
        assert ((a, size + b) in edges) == supported


def test_no_loops_and_sorted():
    G = LabelCoverInstance(1, 1, (Edge(0, 0, OneToOne((1,))),))
    g = reduce("almost3", G)
    e = g.edge_array()
    assert np.all(e[:, 0] < e[:, 1])
    assert edge_set(g) == {(0, 1), (0, 2), (1, 2)}


def test_reduce_checks_family_and_size():
    with pytest.raises(InvalidParameter):
        reduce("col4", single_edge("almost3", 2))
    with pytest.raises(InvalidParameter):
        reduce("col5", single_edge("almost3", 2))
    with pytest.raises(SizeLimitError):
        reduce("col4", LabelCoverInstance(2, 8))


def test_vertex_locate_round_trip():
    g = reduce("col3", single_edge("col3", 2))
    for vid in (0, 5, 9, 17):
        block, x = g.locate(vid)
        assert g.vertex(block, x) == vid


def test_dimacs_round_trip():
    G, _ = gen_planted("one-to-one", 3, 3, 2, seed=1)
    g = reduce("almost3", G)
    text = g.to_dimacs()
    assert text.startswith("c {")
    h = SimpleGraph.from_dimacs(text)
    assert h.num_vertices == g.num_vertices
    assert np.array_equal(h.edge_array(), g.edge_array())


# --- intended colorings -------------------------------------------------------


@pytest.mark.parametrize("kind,nv,R", [("almost3", 4, 2), ("col4", 3, 2), ("col3", 3, 2)])
@pytest.mark.parametrize("seed", range(5))
def test_planted_completeness(kind, nv, R, seed):
    G, hidden = gen_planted(FAMILY[kind], nv, 4, R, seed)
    g = reduce(kind, G)
    c = intended_coloring(kind, G, hidden)
    rep = verify_coloring(g, c)
    assert rep["monochromatic"] == 0 and rep["uncolored"] == 0
    assert rep["colors"] == (4 if kind == "col4" else 3)


def test_constant_coloring_counts_every_edge():
    g = reduce("almost3", single_edge("almost3", 1))
    rep = verify_coloring(g, ColoringAssignment(np.zeros(g.num_vertices), 3))
    assert rep["monochromatic"] == g.num_edges == 6


def test_partial_almost3_coloring():
    G = LabelCoverInstance(3, 2, (Edge(0, 1, OneToOne((1, 2))), Edge(1, 2, OneToOne((2, 1))),
                                  Edge(0, 2, OneToOne((1, 2)))))
    # labels 1,1,? satisfy (0,1); S = {0, 1} avoids the odd cycle
    c = intended_coloring("almost3", G, {0: 1, 1: 1}, S=[0, 1])
    rep = verify_coloring(reduce("almost3", G), c)
    assert rep["monochromatic"] == 0 and rep["uncolored"] == 9
    with pytest.raises(InvalidLabeling):
        intended_coloring("almost3", G, [1, 1, 1])


def test_col_kinds_need_full_labeling():
    G, hidden = gen_planted("alpha", 3, 3, 2, seed=0)
    with pytest.raises(InvalidLabeling):
        intended_coloring("col3", G, {0: hidden[0]})


# --- decoder ------------------------------------------------------------------


def test_decoder_rules():
    assert decoder_rule("almost3", 3, 0.05) == (3, 0.05, pytest.approx(60))
    assert decoder_rule("col4", 3, 0.05) == (6, 0.025, pytest.approx(240))


@pytest.mark.parametrize("kind,nv,R", [("almost3", 4, 2), ("col4", 3, 2), ("col3", 3, 2)])
@pytest.mark.parametrize("seed", range(3))
def test_decoder_recovers_planted_labels(kind, nv, R, seed):
    G, hidden = gen_planted(FAMILY[kind], nv, 4, R, seed)
    g = reduce(kind, G)
    S = intended_coloring(kind, G, hidden).color_classes()[0]
    J, L, rep = decode_tlabeling(kind, g, S, k=3, delta=0.05, epsilon=0.1)
    assert J == list(range(nv))
    for v in J:
        assert hidden[v] in L[v]
        assert len(L[v]) <= decoder_rule(kind, 3, 0.05)[2]
    assert rep["satisfied_fraction"] == 1.0
    for row in rep["edges"]:
        assert row["satisfied"]
        assert row["inner"] == 0.0


def test_decoder_empty_set():
    G, _ = gen_planted("one-to-one", 3, 2, 2, seed=0)
    J, L, rep = decode_tlabeling("almost3", reduce("almost3", G), [])
    assert J == [] and L.assignment == {} and rep["edges"] == []


def test_decoder_sparse_set():
    G, _ = gen_planted("one-to-one", 3, 2, 2, seed=0)
    J, _, _ = decode_tlabeling("almost3", reduce("almost3", G), [0], epsilon=0.2)
    assert J == []


def test_decoder_rejects_dependent_set():
    g = reduce("almost3", single_edge("almost3", 1))
    a, b = g.edge_array()[0]
    with pytest.raises(InvalidInput):
        decode_tlabeling("almost3", g, [int(a), int(b)])


def test_read_set():
    assert read_set("[3, 1, 2]") == [3, 1, 2]
    assert read_set('{"vertices": [4]}') == [4]
