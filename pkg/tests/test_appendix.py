import itertools
from fractions import Fraction

import pytest

from hcs.appendix import (BEdge, BipartiteLC, collapse_relation, disjoint_family_prob,
                          disjointness_bound, gen_bipartite, is_d_to_d, is_projection,
                          pairwise_intersecting, popular_element, transform_collapse,
                          transform_normalize, transform_power, transform_unweight,
                          verify_collapse, verify_normalize, verify_power, verify_unweight)
from hcs.errors import InvalidInstance, InvalidParameter, SizeLimitError
from hcs.labelcover import eval_sat

IDENT2 = frozenset({(1, 1), (2, 2)})


def proj(*images):
    """Relation a -> images[a-1]."""
    return frozenset((a, b) for a, b in enumerate(images, start=1))


def test_projection_checks():
    assert is_projection(proj(1, 1, 2, 2), 4, 2)
    assert not is_projection(proj(1, 1, 1, 2), 4, 2)
    assert is_d_to_d(frozenset({(1, 1), (1, 2), (2, 1), (2, 2)}), 2, 2)
    with pytest.raises(InvalidInstance):
        BipartiteLC(1, 1, 4, 2, (BEdge(0, 0, proj(1, 1, 1, 2), Fraction(1)),))


def test_json_round_trip():
    phi, _ = gen_bipartite(3, 2, 4, 2, seed=5)
    assert BipartiteLC.from_dict(phi.to_dict()) == phi
    psi, _ = gen_bipartite(2, 2, 2, 1, seed=5, weighted=False)
    assert BipartiteLC.from_dict(psi.to_dict()) == psi


# --- normalize ----------------------------------------------------------------


def test_normalize_uniform_two_vertices():
    edges = (BEdge(0, 0, IDENT2, Fraction(1, 2)), BEdge(1, 0, IDENT2, Fraction(1, 2)))
    phi = BipartiteLC(2, 1, 2, 1, edges)
    res = transform_normalize(phi, 3)
    assert res.origin == [0, 0, 0, 1, 1, 1]
    assert all(res.instance.x_weight(x) == 1 for x in range(6))
    assert verify_normalize(phi, res, 3) == {"unit_weights": True, "size_bounds": True,
                                             "perfect_preserved": True, "soundness": True}


def test_normalize_skips_zero_weight():
    edges = (BEdge(0, 0, IDENT2, Fraction(1)), BEdge(1, 0, IDENT2, Fraction(0)))
    res = transform_normalize(BipartiteLC(2, 1, 2, 1, edges), 2)
    assert res.report["skipped"] == [1]
    assert res.origin == [0, 0, 0, 0]


def test_normalize_preconditions():
    edges = (BEdge(0, 0, IDENT2, Fraction(1, 2)),)
    with pytest.raises(InvalidParameter):
        transform_normalize(BipartiteLC(1, 1, 2, 1, edges), 2)
    with pytest.raises(InvalidParameter):
        transform_normalize(BipartiteLC(1, 1, 2, 1, (BEdge(0, 0, IDENT2, Fraction(1)),)), 1)


# --- unweight -----------------------------------------------------------------


def test_unweight_single_edge():
    phi = BipartiteLC(1, 1, 2, 1, (BEdge(0, 0, IDENT2, Fraction(1)),))
    res = transform_unweight(phi, 2)
    assert len(res.instance.edges) == 2
    assert all((e.x, e.y) == (0, 0) for e in res.instance.edges)


def test_unweight_remainder_goes_to_smallest_positive_y():
    edges = (BEdge(0, 0, IDENT2, Fraction(0)), BEdge(0, 1, IDENT2, Fraction(1, 3)),
             BEdge(0, 2, IDENT2, Fraction(2, 3)))
    phi = BipartiteLC(1, 3, 2, 1, edges)
    res = transform_unweight(phi, 2)
    assert res.report["y0"] == [1]
    ys = [e.y for e in res.instance.edges]
    # alpha = 6: floor(6 * 2/3) = 4 to y = 2, the remaining 2 to y0 = 1
    assert ys.count(2) == 4 and ys.count(1) == 2 and ys.count(0) == 0
    assert verify_unweight(phi, res, 2)["left_regular"]


def test_unweight_needs_positive_neighbour():
    edges = (BEdge(0, 0, IDENT2, Fraction(1)), BEdge(1, 0, IDENT2, Fraction(0)))
    phi = BipartiteLC(2, 1, 2, 1, edges)
    with pytest.raises(InvalidParameter):
        transform_unweight(phi, 2)


# --- power --------------------------------------------------------------------


def test_power_counts():
    phi = BipartiteLC(1, 2, 2, 1, (BEdge(0, 0, IDENT2), BEdge(0, 1, IDENT2)), weighted=False)
    res = transform_power(phi, 2)
    assert res.instance.nx == 4
    assert res.instance.left_degrees() == [2, 2, 2, 2]
    checks = verify_power(phi, res, 2)
    assert all(checks.values())


def test_power_needs_regular():
    phi = BipartiteLC(2, 1, 2, 1, (BEdge(0, 0, IDENT2), BEdge(0, 0, IDENT2), BEdge(1, 0, IDENT2)),
                      weighted=False)
    with pytest.raises(InvalidParameter):
        transform_power(phi, 2)


def test_power_size_cap():
    phi = BipartiteLC(1, 1, 2, 1, tuple(BEdge(0, 0, IDENT2) for _ in range(40)), weighted=False)
    with pytest.raises(SizeLimitError):
        transform_power(phi, 4)


# --- collapse -----------------------------------------------------------------


def test_collapse_identity_gives_equality():
    phi = BipartiteLC(2, 1, 3, 1, (BEdge(0, 0, proj(1, 2, 3)), BEdge(1, 0, proj(1, 2, 3))),
                      weighted=False)
    out = transform_collapse(phi).instance
    assert len(out.edges) == 1
    assert out.edges[0].constraint.relation == frozenset({(1, 1), (2, 2), (3, 3)})


def test_collapse_relation_composition():
    r = collapse_relation(proj(1, 1, 2, 2), proj(2, 1, 1, 2))
    assert r == frozenset({(1, 2), (1, 3), (2, 2), (2, 3), (3, 1), (3, 4), (4, 1), (4, 4)})


def test_collapse_two_to_two():
    phi, _ = gen_bipartite(3, 2, 4, 2, seed=9, weighted=False)
    res = transform_collapse(phi)
    assert res.instance.edges
    for e in res.instance.edges:
        for a in range(1, 5):
            assert sum((a, b) in e.constraint.relation for b in range(1, 5)) == 2
    assert all(verify_collapse(phi, res).values())


# --- pipeline on planted instances ----------------------------------------------


@pytest.mark.parametrize("seed", range(4))
def test_pipeline_preserves_perfect_satisfiability(seed):
    phi, (hx, hy) = gen_bipartite(2, 2, 4, 2, seed=seed, planted=True)
    assert phi.satisfied_weight(hx, hy) == 1
    ell = 2
    n1 = transform_normalize(phi, ell)
    assert all(verify_normalize(phi, n1, ell).values())
    u = transform_unweight(n1.instance, ell)
    assert all(verify_unweight(n1.instance, u, ell).values())
    p = transform_power(u.instance, ell)
    assert all(verify_power(u.instance, p, ell, exhaustive=False).values())
    c = transform_collapse(p.instance)
    # the composed origin map carries the hidden labeling through
    lx = [hx[n1.origin[u.origin[o]]] for o in p.origin]
    assert eval_sat(c.instance, lx) == 1


# --- set families ----------------------------------------------------------------


def test_disjoint_singletons():
    assert disjoint_family_prob([{1}, {2}, {3}], 2) == Fraction(2, 3)


def test_disjoint_single_draw():
    assert disjoint_family_prob([{1, 2}, {2}], 1) == 1


def test_shared_element():
    fam = [{1, 2}, {1, 3}, {1, 4}]
    assert disjoint_family_prob(fam, 2) == 0
    assert pairwise_intersecting(fam)
    el, count = popular_element(fam)
    assert el == 1 and count == 3
    # some element lies in at least N / max_set_size sets
    assert count * 2 >= len(fam)


def test_disjointness_bound_brute_force():
    fam = [{i} for i in range(1, 9)]
    p, bound, applies = disjointness_bound(fam, 2)
    # gamma = 1/8, ell^2 d = 4: condition 1/8 < 1/4 applies
    assert applies and p == Fraction(7, 8) and p >= bound == Fraction(1, 2)
    ref = Fraction(sum(not (a & b) for a, b in itertools.product(map(set, fam), repeat=2)), 64)
    assert p == ref


def test_family_cap():
    with pytest.raises(SizeLimitError):
        disjoint_family_prob([{i} for i in range(100)], 4)
