"""Exact brute-force solvers used as ground truth.

Graphs are anything with ``num_vertices`` and ``edge_array()`` (a
:class:`SimpleGraph` or a reduction's block graph). Vertex sets are kept as
Python int bitsets. All searches branch in a fixed order, so values and
witnesses are reproducible.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from hcs.errors import InvalidParameter, SizeLimitError
from hcs.labelcover import LabelCoverInstance, TLabeling, eval_sat, label_sets

#: Cap on labelings enumerated by :func:`best_labeling`.
MAX_LABELINGS = 2_000_000


@dataclass(frozen=True)
class SearchBudget:
    max_vertices: int = 5000
    max_edges: int = 2_000_000
    time_limit_seconds: float = 60.0

    def __post_init__(self):
        if min(self.max_vertices, self.max_edges, self.time_limit_seconds) <= 0:
            raise InvalidParameter("budget values must be positive")

    def check(self, graph) -> None:
        if graph.num_vertices > self.max_vertices:
            raise SizeLimitError(
                f"graph has {graph.num_vertices} vertices, budget is {self.max_vertices}")
        if len(graph.edge_array()) > self.max_edges:
            raise SizeLimitError(
                f"graph has {len(graph.edge_array())} edges, budget is {self.max_edges}")

    def clock(self) -> "_Clock":
        return _Clock(self.time_limit_seconds)


class _Clock:
    def __init__(self, limit: float):
        self.deadline = time.monotonic() + limit
        self.limit = limit
        self.ticks = 0

    def tick(self) -> None:
        self.ticks += 1
        if self.ticks % 1024 == 0 and time.monotonic() > self.deadline:
            raise SizeLimitError(f"search exceeded the {self.limit} s time budget")


@dataclass(frozen=True, eq=False)
class SimpleGraph:
    num_vertices: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(e) and (e.min() < 0 or e.max() >= self.num_vertices):
            raise InvalidParameter("edge endpoint out of range")
        e = e[e[:, 0] != e[:, 1]]
        e = np.unique(np.sort(e, axis=1), axis=0) if len(e) else e
        object.__setattr__(self, "edges", e)

    def edge_array(self) -> np.ndarray:
        return self.edges

    @classmethod
    def complete(cls, n: int) -> "SimpleGraph":
        return cls(n, list(itertools.combinations(range(n), 2)))

    @classmethod
    def complete_bipartite(cls, a: int, b: int) -> "SimpleGraph":
        return cls(a + b, [(i, a + j) for i in range(a) for j in range(b)])

    @classmethod
    def from_dimacs(cls, text: str) -> "SimpleGraph":
        n, edges = None, []
        for line in text.splitlines():
            parts = line.split()
            if not parts or parts[0] == "c":
                continue
            if parts[0] == "p":
                n = int(parts[2])
            elif parts[0] == "e":
                edges.append((int(parts[1]) - 1, int(parts[2]) - 1))
        if n is None:
            raise InvalidParameter("DIMACS input has no 'p' line")
        return cls(n, edges)


def neighbour_masks(graph) -> list:
    nbr = [0] * graph.num_vertices
    for a, b in graph.edge_array():
        nbr[a] |= 1 << int(b)
        nbr[b] |= 1 << int(a)
    return nbr


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _components(nbr: list) -> list:
    seen, comps = 0, []
    for v in range(len(nbr)):
        if seen >> v & 1:
            continue
        comp = frontier = 1 << v
        while frontier:
            new = 0
            for u in _bits(frontier):
                new |= nbr[u]
            frontier = new & ~comp
            comp |= frontier
        seen |= comp
        comps.append(comp)
    return comps


# ---------------------------------------------------------------------------
# Coloring


def is_proper_coloring(graph, colors) -> bool:
    c = np.asarray(colors)
    e = graph.edge_array()
    return bool(np.all(c >= 0)) and not np.any(c[e[:, 0]] == c[e[:, 1]])


def _color_component(nbr: list, verts: list, q: int, clock: _Clock) -> Optional[dict]:
    """Backtracking q-coloring of one component; first vertex fixed to color 0."""
    # highest degree first, ties by id: low-degree vertices are branched last
    order = sorted(verts, key=lambda v: (-bin(nbr[v]).count("1"), v))
    color = {}

    def extend(i: int, used: int) -> bool:
        if i == len(order):
            return True
        clock.tick()
        v = order[i]
        banned = {color[u] for u in _bits(nbr[v]) if u in color}
        # symmetry breaking: at most one fresh color per step
        for c in range(min(used + 1, q)):
            if c in banned:
                continue
            color[v] = c
            if extend(i + 1, max(used, c + 1)):
                return True
            del color[v]
        return False

    return dict(color) if extend(0, 0) else None


def chromatic_number(graph, qmax: int, budget: Optional[SearchBudget] = None):
    """Smallest q <= qmax admitting a proper coloring, or None if none does.

    Returns ``(q, colors)`` with a verified witness, or ``(None, None)``.
    """
    if qmax < 1:
        raise InvalidParameter("qmax must be >= 1")
    budget = budget or SearchBudget()
    budget.check(graph)
    clock = budget.clock()
    nbr = neighbour_masks(graph)
    if graph.num_vertices == 0:
        return 0, np.zeros(0, dtype=np.int64)
    colors = np.zeros(graph.num_vertices, dtype=np.int64)
    best = 1
    for comp in _components(nbr):
        verts = list(_bits(comp))
        for q in range(best, qmax + 1):
            found = _color_component(nbr, verts, q, clock)
            if found is not None:
                best = q
                for v, c in found.items():
                    colors[v] = c
                break
        else:
            return None, None
    if not is_proper_coloring(graph, colors) or colors.max() >= best:
        raise AssertionError("coloring witness failed to verify")
    return best, colors


# ---------------------------------------------------------------------------
# Independent sets


def is_independent(graph, verts) -> bool:
    mask = np.zeros(graph.num_vertices, dtype=bool)
    mask[np.asarray(list(verts), dtype=np.int64)] = True
    e = graph.edge_array()
    return not np.any(mask[e[:, 0]] & mask[e[:, 1]])


def _max_clique(adj: list, cand: int, clock: _Clock) -> int:
    """Maximum clique inside ``cand`` with greedy-coloring bounds."""
    best = [0, 0]

    def color_order(p: int):
        # greedy color classes; returns vertices with their color bound
        order, bounds = [], []
        k = 0
        while p:
            k += 1
            q = p
            while q:
                low = q & -q
                v = low.bit_length() - 1
                p &= ~low
                q &= ~low & ~adj[v]
                order.append(v)
                bounds.append(k)
        return order, bounds

    def expand(r: int, size: int, p: int) -> None:
        clock.tick()
        order, bounds = color_order(p)
        for v, bound in zip(reversed(order), reversed(bounds)):
            if size + bound <= best[0]:
                return
            nr = r | (1 << v)
            np_ = p & adj[v]
            if np_:
                expand(nr, size + 1, np_)
            elif size + 1 > best[0]:
                best[0], best[1] = size + 1, nr
            p &= ~(1 << v)

    if cand:
        expand(0, 0, cand)
    return best[1]


def max_independent_set(graph, budget: Optional[SearchBudget] = None):
    """Exact maximum independent set as ``(size, sorted witness)``.

    Solved per connected component as a maximum clique of the complement.
    """
    budget = budget or SearchBudget()
    budget.check(graph)
    clock = budget.clock()
    nbr = neighbour_masks(graph)
    witness = []
    for comp in _components(nbr):
        comp_adj = [0] * len(nbr)
        for v in _bits(comp):
            comp_adj[v] = comp & ~nbr[v] & ~(1 << v)
        witness.extend(_bits(_max_clique(comp_adj, comp, clock)))
    witness.sort()
    if not is_independent(graph, witness):
        raise AssertionError("independent set witness failed to verify")
    return len(witness), witness


# ---------------------------------------------------------------------------
# Label cover


def best_labeling(G: LabelCoverInstance, t: int = 1, cap: int = MAX_LABELINGS):
    """Exact maximum of eval_sat over all t-labelings, with a witness.

    Enlarging a label set never unsatisfies an edge, so only sets of size
    exactly min(t, R) are enumerated; the maximum is the same.
    """
    if t < 1:
        raise InvalidParameter("t must be >= 1")
    size = min(t, G.num_labels)
    choices = [s for s in label_sets(G.num_labels, size) if len(s) == size]
    total = len(choices) ** G.num_vertices
    if total > cap:
        raise SizeLimitError(f"{total} labelings exceed the enumeration cap {cap}")
    if not G.edges:
        return Fraction(1), TLabeling({v: choices[0] for v in range(G.num_vertices)}, t)
    # table[e][i, j]: does edge e hold for choice i at u and choice j at v?
    tables = np.array([[[e.satisfied(a, b) for b in choices] for a in choices]
                       for e in G.edges], dtype=np.int64)
    us = np.array([e.u for e in G.edges])
    vs = np.array([e.v for e in G.edges])
    best_val, best_idx = -1, None
    m = len(choices)
    chunk = 100_000
    for start in range(0, total, chunk):
        ids = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.empty((len(ids), G.num_vertices), dtype=np.int64)
        rest = ids.copy()
        for v in range(G.num_vertices - 1, -1, -1):
            rest, digits[:, v] = np.divmod(rest, m)
        score = tables[np.arange(len(G.edges))[None, :], digits[:, us], digits[:, vs]].sum(axis=1)
        j = int(np.argmax(score))
        if score[j] > best_val:
            best_val, best_idx = int(score[j]), digits[j]
            if best_val == len(G.edges):
                break
    witness = TLabeling({v: choices[int(best_idx[v])] for v in range(G.num_vertices)}, t)
    value = Fraction(best_val, len(G.edges))
    if eval_sat(G, witness) != value:
        raise AssertionError("labeling witness failed to verify")
    return value, witness
