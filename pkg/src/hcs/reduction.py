"""Block graphs built from label-cover instances, intended colorings and the
influence-based list decoder.

Every label-cover vertex v becomes a block of q^n graph vertices, one per
point of [q]^n (n = number of labels). Graph vertex ids are
``v * q**n + point_index(x)``. For an edge (u, v) with permutations
(p1, p2) a cross edge joins x in [u] and y in [v] iff every coordinate pair
of (x^{p1}, y^{p2}) lies in the support of the gadget operator, with pairs
of consecutive coordinates taken as one symbol for col4 and col3.
Adjacency is decided by support membership only, never by multiplying
transition probabilities.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from hcs.errors import InvalidInput, InvalidLabeling, InvalidParameter, SizeLimitError
from hcs.gaussian import mo_bound_report
from hcs.labelcover import LabelCoverInstance, TLabeling
from hcs.operators import GadgetKind, gadget_operator
from hcs.qcube import (QFunction, all_points, bunch_fn, low_level_influences, permute_coords,
                       point_index)

#: Cap on the number of graph vertices a reduction may produce.
MAX_GRAPH_VERTICES = 200_000
#: Cap on the side of the dense per-edge adjacency matrix.
MAX_BLOCK_SIZE = 4096

KINDS = ("almost3", "col4", "col3")
FAMILY_OF = {"almost3": "one-to-one", "col4": "two-to-two", "col3": "alpha"}
PALETTE = {"almost3": 3, "col4": 4, "col3": 3}


def _check_kind(kind: str) -> str:
    if kind == "alpha":
        kind = "col3"
    if kind not in KINDS:
        raise InvalidParameter(f"unknown reduction kind {kind!r}; expected one of {KINDS}")
    return kind


def gadget_of(kind: str):
    kind = _check_kind(kind)
    return gadget_operator({"almost3": GadgetKind.ALMOST3, "col4": GadgetKind.COL4,
                            "col3": GadgetKind.ALPHA}[kind])


def _place_values(q: int, n: int) -> np.ndarray:
    return q ** np.arange(n - 1, -1, -1, dtype=np.int64)


def _perm_indices(q: int, n: int, perm: Sequence[int]) -> np.ndarray:
    """idx(x^perm) for every x, in point order."""
    pts = all_points(q, n)
    return pts[:, [p - 1 for p in perm]] @ _place_values(q, n)


def _edge_perms(kind: str, c) -> tuple:
    n = c.num_labels
    if kind == "almost3":
        return tuple(range(1, n + 1)), c.perm
    return c.perm1, c.perm2


@dataclass(frozen=True, eq=False)
class BlockGraph:
    """Graph produced by one of the reductions.

    Edges are stored implicitly through the label-cover constraints;
    :meth:`edge_array` enumerates them on demand.
    """

    kind: str
    instance: LabelCoverInstance
    q: int
    n: int

    @property
    def block_size(self) -> int:
        return self.q ** self.n

    @property
    def num_blocks(self) -> int:
        return self.instance.num_vertices

    @property
    def num_vertices(self) -> int:
        return self.block_size * self.num_blocks

    @cached_property
    def kernel(self) -> np.ndarray:
        """Boolean q^n x q^n matrix: K[a, b] iff all coordinate pairs are supported."""
        s = gadget_of(self.kind).support_matrix
        reps = self.n if self.kind == "almost3" else self.n // 2
        k = np.ones((1, 1), dtype=bool)
        for _ in range(reps):
            k = np.kron(k, s).astype(bool)
        return k

    def block_adjacency(self, edge) -> np.ndarray:
        """A[x, y] for x in [u], y in [v] on one label-cover edge."""
        p1, p2 = _edge_perms(self.kind, edge.constraint)
        i1 = _perm_indices(self.q, self.n, p1)
        i2 = _perm_indices(self.q, self.n, p2)
        return self.kernel[np.ix_(i1, i2)]

    def cross_pairs(self, edge) -> np.ndarray:
        """(m, 2) array of graph vertex ids joined on one label-cover edge."""
        xs, ys = np.nonzero(self.block_adjacency(edge))
        a = edge.u * self.block_size + xs
        b = edge.v * self.block_size + ys
        keep = a != b
        return np.stack([a[keep], b[keep]], axis=1)

    @cached_property
    def _edges(self) -> np.ndarray:
        parts = [self.cross_pairs(e) for e in self.instance.edges]
        if not parts:
            return np.zeros((0, 2), dtype=np.int64)
        pairs = np.sort(np.concatenate(parts), axis=1)
        return np.unique(pairs, axis=0).astype(np.int64)

    def edge_array(self) -> np.ndarray:
        """Distinct undirected edges (a, b), a < b, in lexicographic order."""
        return self._edges

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def vertex(self, block: int, x: Sequence[int]) -> int:
        return block * self.block_size + point_index(self.q, x)

    def locate(self, vid: int) -> tuple:
        """(block, x) for a graph vertex id."""
        block, idx = divmod(int(vid), self.block_size)
        return block, tuple(int(s) for s in all_points(self.q, self.n)[idx])

    def block_points(self) -> np.ndarray:
        return all_points(self.q, self.n)

    def header(self) -> dict:
        return {"kind": self.kind, "q": self.q, "n": self.n, "blocks": self.num_blocks,
                "block_size": self.block_size,
                "vertex_id": "block * q**n + row-major index of x (0-based)"}

    def to_dimacs(self) -> str:
        """DIMACS edge list (1-based ids) with a JSON header in a comment line."""
        lines = ["c " + json.dumps(self.header(), sort_keys=True)]
        lines.append(f"p edge {self.num_vertices} {self.num_edges}")
        lines.extend(f"e {a + 1} {b + 1}" for a, b in self._edges)
        return "\n".join(lines) + "\n"


def reduce(kind: str, G: LabelCoverInstance) -> BlockGraph:
    """Build the block graph of the given reduction kind."""
    kind = _check_kind(kind)
    fam = G.family
    if G.edges and fam != FAMILY_OF[kind]:
        raise InvalidParameter(
            f"{kind} needs {FAMILY_OF[kind]} constraints, instance has {fam or 'mixed'}")
    q = 4 if kind == "col4" else 3
    n = G.num_labels
    if kind != "almost3" and n % 2:
        raise InvalidParameter(f"{kind} needs an even label range")
    if q ** n > MAX_BLOCK_SIZE or q ** n * G.num_vertices > MAX_GRAPH_VERTICES:
        raise SizeLimitError(
            f"{kind} graph would have {q ** n * G.num_vertices} vertices "
            f"(caps {MAX_BLOCK_SIZE} per block, {MAX_GRAPH_VERTICES} total)")
    return BlockGraph(kind, G, q, n)


# ---------------------------------------------------------------------------
# Colorings


@dataclass(frozen=True, eq=False)
class ColoringAssignment:
    """Colors 0..Q-1 per graph vertex; -1 marks an uncolored vertex."""

    color: np.ndarray
    Q: int

    def __post_init__(self):
        c = np.asarray(self.color, dtype=np.int64)
        if c.ndim != 1 or np.any(c >= self.Q) or np.any(c < -1):
            raise InvalidParameter(f"colors must lie in -1..{self.Q - 1}")
        object.__setattr__(self, "color", c)

    def color_classes(self) -> list:
        return [np.flatnonzero(self.color == a) for a in range(self.Q)]


def _labels_map(labels) -> dict:
    if isinstance(labels, TLabeling):
        out = {}
        for v, s in labels.assignment.items():
            if len(s) != 1:
                raise InvalidLabeling(f"vertex {v} needs exactly one label")
            out[v] = next(iter(s))
        return out
    if isinstance(labels, Mapping):
        return {int(v): int(a) for v, a in labels.items()}
    return {v: int(a) for v, a in enumerate(labels)}


def intended_coloring(kind: str, G: LabelCoverInstance, labels, S: Optional[Iterable[int]] = None
                      ) -> ColoringAssignment:
    """Color x in block v by x_{l(v)}.

    For col4 and col3 ``labels`` must label every vertex and satisfy every
    constraint. For almost3 only the blocks of S (default: the labeled
    vertices) are colored, and the constraints induced by S must hold.
    """
    kind = _check_kind(kind)
    lab = _labels_map(labels)
    for v, a in lab.items():
        if not (0 <= v < G.num_vertices and 1 <= a <= G.num_labels):
            raise InvalidLabeling(f"label {a} on vertex {v} is out of range")
    if kind == "almost3":
        S = sorted(set(lab) if S is None else {int(v) for v in S})
        missing = [v for v in S if v not in lab]
        if missing:
            raise InvalidLabeling(f"vertices {missing} of S are unlabeled")
        required = G.induced_edges(S)
    else:
        S = list(range(G.num_vertices))
        if set(lab) != set(S):
            raise InvalidLabeling(f"{kind} needs a label on every vertex")
        required = G.edges
    for e in required:
        if not e.constraint.holds(lab[e.u], lab[e.v]):
            raise InvalidLabeling(f"labeling violates the constraint on ({e.u}, {e.v})")
    q = 4 if kind == "col4" else 3
    n = G.num_labels
    size = q ** n
    pts = all_points(q, n)
    color = np.full(size * G.num_vertices, -1, dtype=np.int64)
    for v in S:
        color[v * size:(v + 1) * size] = pts[:, lab[v] - 1]
    return ColoringAssignment(color, PALETTE[kind])


def verify_coloring(graph, c: ColoringAssignment) -> dict:
    """Exact counts of monochromatic edges (both ends colored) and uncolored vertices."""
    edges = graph.edge_array()
    col = c.color
    if len(col) != graph.num_vertices:
        raise InvalidParameter("coloring and graph have different vertex counts")
    a, b = col[edges[:, 0]], col[edges[:, 1]]
    mono = int(np.count_nonzero((a == b) & (a >= 0)))
    return {"monochromatic": mono, "uncolored": int(np.count_nonzero(col < 0)),
            "edges": int(len(edges)), "colors": c.Q}


# ---------------------------------------------------------------------------
# Soundness decoder


def check_independent(graph, S) -> np.ndarray:
    """Sorted vertex array of S; raises InvalidInput if S spans an edge."""
    s = np.unique(np.asarray(list(S), dtype=np.int64))
    if len(s) and (s[0] < 0 or s[-1] >= graph.num_vertices):
        raise InvalidInput("set contains unknown vertex ids")
    mask = np.zeros(graph.num_vertices, dtype=bool)
    mask[s] = True
    edges = graph.edge_array()
    bad = mask[edges[:, 0]] & mask[edges[:, 1]]
    if bad.any():
        a, b = edges[np.argmax(bad)]
        raise InvalidInput(f"set is not independent: edge ({a}, {b})")
    return s


def decoder_rule(kind: str, k: int, delta: float) -> tuple:
    """(influence level, threshold, list-size bound) used for one kind."""
    kind = _check_kind(kind)
    if kind == "col4":
        return 2 * k, delta / 2, 4 * k / delta
    return k, delta, k / delta


def block_function(graph: BlockGraph, mask: np.ndarray, v: int) -> QFunction:
    size = graph.block_size
    return QFunction(graph.q, graph.n, mask[v * size:(v + 1) * size].astype(float))


def _linkage(graph: BlockGraph, fu: QFunction, fv: QFunction, edge, k, delta, epsilon):
    """Bound report on (f, g) with f(x^{p1}) = f_u(x) and g(y^{p2}) = f_v(y)."""
    p1, p2 = _edge_perms(graph.kind, edge.constraint)
    f, g = permute_coords(fu, p1), permute_coords(fv, p2)
    T = gadget_of(graph.kind)
    if graph.kind == "col4":
        return mo_bound_report(bunch_fn(f), bunch_fn(g), T, k, delta, epsilon)
    return mo_bound_report(f, g, T, k, delta, epsilon, fish=graph.kind == "col3")


def decode_tlabeling(kind: str, graph: BlockGraph, S, k: int = 3, delta: float = 0.05,
                     epsilon: float = 0.1, linkage: bool = True):
    """List-decode a t-labeling from an independent set S.

    Returns ``(J, L, report)``. J holds the blocks where S has density at
    least epsilon; L(v) is the set of coordinates whose low-level influence
    in the indicator of S on [v] reaches the threshold of the kind. The
    report records, per edge induced on J, whether L satisfies it and
    (with ``linkage``) the bound report of the permuted pair of indicators.
    """
    kind = _check_kind(kind)
    if kind != graph.kind:
        raise InvalidParameter(f"graph was built by {graph.kind}, not {kind}")
    if k < 1 or delta <= 0 or epsilon <= 0:
        raise InvalidParameter("need k >= 1, delta > 0, epsilon > 0")
    s = check_independent(graph, S)
    mask = np.zeros(graph.num_vertices, dtype=bool)
    mask[s] = True
    level, thr, bound = decoder_rule(kind, k, delta)
    t = int(np.floor(bound + 1e-9))
    J, lists, funcs, density = [], {}, {}, {}
    for v in range(graph.num_blocks):
        fv = block_function(graph, mask, v)
        density[v] = fv.mean()
        if density[v] < epsilon - 1e-12:
            continue
        J.append(v)
        infl = low_level_influences(fv, level)
        lists[v] = frozenset(int(i) + 1 for i in np.flatnonzero(infl >= thr - 1e-12))
        if len(lists[v]) > bound + 1e-9:
            raise AssertionError(f"list of block {v} has {len(lists[v])} > {bound} labels")
        funcs[v] = fv
    L = TLabeling(lists, max(t, 1))
    rows = []
    for e in graph.instance.induced_edges(J):
        row = {"u": e.u, "v": e.v, "satisfied": e.satisfied(lists[e.u], lists[e.v])}
        if linkage:
            rep = _linkage(graph, funcs[e.u], funcs[e.v], e, k, delta, epsilon)
            row.update(inner=rep.inner, verdict=rep.verdict,
                       common_influential=bool(rep.violating_coords),
                       violating_coords=rep.violating_coords)
        rows.append(row)
    sat = sum(r["satisfied"] for r in rows)
    report = {
        "J": J,
        "t": t,
        "density": {v: density[v] for v in J},
        "list_sizes": {v: len(lists[v]) for v in J},
        "edges": rows,
        "satisfied_fraction": sat / len(rows) if rows else 1.0,
        "isat_t_lower": len(J) / graph.num_blocks,
    }
    return J, L, report


def read_set(text: str) -> list:
    """Vertex ids from JSON: a list, or an object with a "vertices" list."""
    data = json.loads(text)
    if isinstance(data, Mapping):
        data = data.get("vertices", data.get("set"))
    if not isinstance(data, list):
        raise InvalidInput("set file must hold a list of vertex ids")
    return [int(v) for v in data]
