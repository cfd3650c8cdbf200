"""Label-cover instances, constraint families and exhaustive evaluators.

Labels are 1-based (1..R); vertices are 0-based integers. Permutations are
tuples with ``perm[i - 1] == pi(i)``. Every edge is stored with u <= v and
its constraint relates (label of u, label of v) in that order.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from hcs.errors import InvalidLabeling, InvalidParameter, SizeLimitError

MAX_EXHAUSTIVE_VERTICES = 10
MAX_EXHAUSTIVE_LABELS = 8


def _check_perm(perm: Sequence[int], size: int) -> tuple:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(1, size + 1)):
        raise InvalidParameter(f"{perm} is not a permutation of 1..{size}")
    return perm


def _inverse(perm: tuple) -> tuple:
    inv = [0] * len(perm)
    for i, p in enumerate(perm, start=1):
        inv[p - 1] = i
    return tuple(inv)


def _same_block(a: int, b: int) -> bool:
    return (a + 1) // 2 == (b + 1) // 2


# ---------------------------------------------------------------------------
# Constraints


@dataclass(frozen=True)
class OneToOne:
    """(a, b) is allowed iff b = pi(a)."""

    perm: tuple
    kind = "one-to-one"

    def __post_init__(self):
        object.__setattr__(self, "perm", _check_perm(self.perm, len(self.perm)))

    @property
    def num_labels(self) -> int:
        return len(self.perm)

    def holds(self, a: int, b: int) -> bool:
        _check_labels(self.num_labels, a, b)
        return self.perm[a - 1] == b

    def reversed(self) -> "OneToOne":
        return OneToOne(_inverse(self.perm))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "perm": list(self.perm)}


@dataclass(frozen=True)
class _PairConstraint:
    perm1: tuple
    perm2: tuple

    def __post_init__(self):
        size = len(self.perm1)
        if size % 2 or len(self.perm2) != size:
            raise InvalidParameter("pair constraints need two permutations of an even range")
        object.__setattr__(self, "perm1", _check_perm(self.perm1, size))
        object.__setattr__(self, "perm2", _check_perm(self.perm2, size))
        object.__setattr__(self, "_inv1", _inverse(self.perm1))
        object.__setattr__(self, "_inv2", _inverse(self.perm2))

    @property
    def num_labels(self) -> int:
        return len(self.perm1)

    def holds(self, a: int, b: int) -> bool:
        _check_labels(self.num_labels, a, b)
        return self.base_holds(self._inv1[a - 1], self._inv2[b - 1])

    def reversed(self):
        # Both base relations are symmetric, so reversing swaps the permutations.
        return type(self)(self.perm2, self.perm1)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "perm1": list(self.perm1), "perm2": list(self.perm2)}


@dataclass(frozen=True)
class TwoToTwo(_PairConstraint):
    kind = "two-to-two"

    @staticmethod
    def base_holds(i: int, j: int) -> bool:
        return _same_block(i, j)


@dataclass(frozen=True)
class Alpha(_PairConstraint):
    """The base relation {(2i-1, 2i-1), (2i, 2i-1), (2i-1, 2i)}."""

    kind = "alpha"

    @staticmethod
    def base_holds(i: int, j: int) -> bool:
        return _same_block(i, j) and not (i % 2 == 0 and j % 2 == 0)


@dataclass(frozen=True)
class Explicit:
    """An arbitrary relation given as a set of allowed (a, b) pairs."""

    relation: frozenset
    labels: int
    kind = "explicit"

    def __post_init__(self):
        rel = frozenset((int(a), int(b)) for a, b in self.relation)
        for a, b in rel:
            _check_labels(self.labels, a, b)
        object.__setattr__(self, "relation", rel)

    @property
    def num_labels(self) -> int:
        return self.labels

    def holds(self, a: int, b: int) -> bool:
        _check_labels(self.labels, a, b)
        return (a, b) in self.relation

    def reversed(self) -> "Explicit":
        return Explicit(frozenset((b, a) for a, b in self.relation), self.labels)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "relation": sorted(list(p) for p in self.relation)}


Constraint = OneToOne | TwoToTwo | Alpha | Explicit
FAMILIES = {"one-to-one": OneToOne, "two-to-two": TwoToTwo, "alpha": Alpha,
            "explicit": Explicit}


def _check_labels(r: int, a: int, b: int) -> None:
    if not (1 <= a <= r and 1 <= b <= r):
        raise InvalidParameter(f"labels ({a}, {b}) outside 1..{r}")


def constraint_holds(c: Constraint, a: int, b: int) -> bool:
    return c.holds(a, b)


def relation_of(c: Constraint) -> frozenset:
    r = c.num_labels
    return frozenset((a, b) for a in range(1, r + 1) for b in range(1, r + 1)
                     if c.holds(a, b))


def constraint_from_dict(d: Mapping, num_labels: int) -> Constraint:
    kind = d.get("kind")
    if kind == "one-to-one":
        c = OneToOne(tuple(d["perm"]))
    elif kind in ("two-to-two", "alpha"):
        c = FAMILIES[kind](tuple(d["perm1"]), tuple(d["perm2"]))
    elif kind == "explicit":
        c = Explicit(frozenset(tuple(p) for p in d["relation"]), num_labels)
    else:
        raise InvalidParameter(f"unknown constraint kind {kind!r}")
    if c.num_labels != num_labels:
        raise InvalidParameter(f"constraint uses {c.num_labels} labels, instance has {num_labels}")
    return c


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    constraint: Constraint

    def satisfied(self, lu: Iterable[int], lv: Iterable[int]) -> bool:
        lv = tuple(lv)
        return any(self.constraint.holds(a, b) for a in lu for b in lv)


@dataclass(frozen=True)
class LabelCoverInstance:
    """Graph on vertices 0..num_vertices-1 with one constraint per edge.

    Parallel edges are kept; every edge counts once towards sat.
    """

    num_vertices: int
    num_labels: int
    edges: tuple = field(default=())

    def __post_init__(self):
        if self.num_vertices < 1 or self.num_labels < 1:
            raise InvalidParameter("need at least one vertex and one label")
        norm = []
        for e in self.edges:
            if not (0 <= e.u < self.num_vertices and 0 <= e.v < self.num_vertices):
                raise InvalidParameter(f"edge ({e.u}, {e.v}) has an unknown endpoint")
            if e.constraint.num_labels != self.num_labels:
                raise InvalidParameter("constraint label range differs from the instance")
            if e.u > e.v:
                e = Edge(e.v, e.u, e.constraint.reversed())
            norm.append(e)
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def family(self) -> Optional[str]:
        kinds = {e.constraint.kind for e in self.edges}
        return kinds.pop() if len(kinds) == 1 else None

    def induced_edges(self, subset) -> list:
        s = set(subset)
        return [e for e in self.edges if e.u in s and e.v in s]

    def to_dict(self) -> dict:
        return {"vertices": self.num_vertices, "R": self.num_labels,
                "edges": [{"u": e.u, "v": e.v, **e.constraint.to_dict()}
                          for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "LabelCoverInstance":
        try:
            r = int(d["R"])
            edges = tuple(Edge(int(e["u"]), int(e["v"]), constraint_from_dict(e, r))
                          for e in d["edges"])
            return cls(int(d["vertices"]), r, edges)
        except KeyError as exc:
            raise InvalidParameter(f"missing field {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "LabelCoverInstance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TLabeling:
    """Vertex -> set of at most t labels."""

    assignment: Mapping
    t: int = 1

    def __post_init__(self):
        a = {int(v): frozenset(int(x) for x in labels) for v, labels in self.assignment.items()}
        for v, labels in a.items():
            if len(labels) > self.t:
                raise InvalidLabeling(f"vertex {v} has {len(labels)} labels, t = {self.t}")
        object.__setattr__(self, "assignment", a)

    @classmethod
    def from_labels(cls, labels: Mapping | Sequence) -> "TLabeling":
        items = labels.items() if isinstance(labels, Mapping) else enumerate(labels)
        return cls({v: {int(a)} for v, a in items}, 1)

    def __getitem__(self, v: int) -> frozenset:
        return self.assignment[v]

    def __contains__(self, v: int) -> bool:
        return v in self.assignment

    def max_size(self) -> int:
        return max((len(s) for s in self.assignment.values()), default=0)


def _labeling_sets(G: LabelCoverInstance, L) -> dict:
    if isinstance(L, TLabeling):
        return L.assignment
    if isinstance(L, Mapping):
        return {v: frozenset(x) if isinstance(x, (set, frozenset, tuple, list))
                else frozenset((x,)) for v, x in L.items()}
    return {v: frozenset((a,)) for v, a in enumerate(L)}


def eval_sat(G: LabelCoverInstance, L) -> Fraction:
    """Fraction of edges satisfied by a (t-)labeling of every vertex."""
    sets = _labeling_sets(G, L)
    missing = [v for v in range(G.num_vertices) if v not in sets]
    if missing:
        raise InvalidParameter(f"vertices {missing} are unlabeled")
    if not G.edges:
        return Fraction(1)
    good = sum(e.satisfied(sets[e.u], sets[e.v]) for e in G.edges)
    return Fraction(good, len(G.edges))


def satisfies_induced(G: LabelCoverInstance, L, subset=None) -> bool:
    sets = _labeling_sets(G, L)
    subset = set(sets) if subset is None else set(subset)
    return all(e.satisfied(sets[e.u], sets[e.v]) for e in G.induced_edges(subset))


def label_sets(num_labels: int, t: int) -> list:
    """All nonempty label subsets of size <= t, in a fixed order."""
    out = []
    for size in range(1, t + 1):
        out.extend(frozenset(c) for c in itertools.combinations(range(1, num_labels + 1), size))
    return out


def _check_exhaustive(G: LabelCoverInstance) -> None:
    if G.num_vertices > MAX_EXHAUSTIVE_VERTICES or G.num_labels > MAX_EXHAUSTIVE_LABELS:
        raise SizeLimitError(
            f"exhaustive search capped at |V| <= {MAX_EXHAUSTIVE_VERTICES}, "
            f"R <= {MAX_EXHAUSTIVE_LABELS}")


def _find_labeling(G: LabelCoverInstance, subset: list, choices: list):
    """Backtracking search for a labeling of ``subset`` satisfying all induced edges."""
    order = list(subset)
    pos = {v: i for i, v in enumerate(order)}
    checks = [[] for _ in order]
    for e in G.induced_edges(order):
        checks[max(pos[e.u], pos[e.v])].append(e)
    current = {}

    def extend(i):
        if i == len(order):
            return True
        v = order[i]
        for s in choices:
            current[v] = s
            if all(e.satisfied(current[e.u], current[e.v]) for e in checks[i]):
                if extend(i + 1):
                    return True
        del current[v]
        return False

    return dict(current) if extend(0) else None


def isat_t(G: LabelCoverInstance, t: int = 1):
    """Largest |S|/|V| such that some t-labeling of S satisfies every induced edge.

    Returns ``(value, S, labeling)``. Without self-loops the value is at
    least 1/|V|. Exact; cost is up to
    2^|V| * (sum_{s<=t} C(R, s))^|S|, so instances are capped at
    |V| <= 10 and R <= 8.
    """
    if t < 1:
        raise InvalidParameter("t must be >= 1")
    _check_exhaustive(G)
    choices = label_sets(G.num_labels, t)
    verts = range(G.num_vertices)
    for size in range(G.num_vertices, 0, -1):
        for subset in itertools.combinations(verts, size):
            found = _find_labeling(G, list(subset), choices)
            if found is not None:
                return Fraction(size, G.num_vertices), subset, TLabeling(found, t)
    # only self-loops can rule out every singleton
    return Fraction(0), (), TLabeling({}, t)


# ---------------------------------------------------------------------------
# Planted instances


BASE_PAIRS = {
    "two-to-two": lambda r2: [(i, j) for i in range(1, r2 + 1) for j in range(1, r2 + 1)
                              if TwoToTwo.base_holds(i, j)],
    "alpha": lambda r2: [(i, j) for i in range(1, r2 + 1) for j in range(1, r2 + 1)
                         if Alpha.base_holds(i, j)],
}


def _perm_with(rng: np.random.Generator, size: int, src: int, dst: int) -> tuple:
    """Uniform permutation pi of 1..size conditioned on pi(src) = dst."""
    perm = [int(p) + 1 for p in rng.permutation(size)]
    j = perm.index(dst)
    perm[src - 1], perm[j] = perm[j], perm[src - 1]
    return tuple(perm)


def gen_planted(kind: str, nvertices: int, nedges: int, num_labels: int, seed: int):
    """Random instance of one constraint family satisfied by a hidden labeling.

    Returns ``(instance, hidden)`` where ``hidden[v]`` is the label of v.
    Endpoints are distinct uniform vertex pairs; each constraint is uniform
    among those of the family that the hidden labeling satisfies.
    """
    if kind not in ("one-to-one", "two-to-two", "alpha"):
        raise InvalidParameter(f"unknown constraint family {kind!r}")
    if nvertices < 1 or nedges < 0 or num_labels < 1:
        raise InvalidParameter("sizes must be positive")
    if nedges and nvertices < 2:
        raise InvalidParameter("edges need at least two vertices")
    if kind != "one-to-one" and num_labels % 2:
        raise InvalidParameter(f"{kind} constraints need an even label range")
    rng = np.random.default_rng(seed)
    hidden = [int(a) + 1 for a in rng.integers(0, num_labels, size=nvertices)]
    edges = []
    for _ in range(nedges):
        u, v = (int(x) for x in rng.choice(nvertices, size=2, replace=False))
        a, b = hidden[u], hidden[v]
        if kind == "one-to-one":
            c = OneToOne(_perm_with(rng, num_labels, a, b))
        else:
            pairs = BASE_PAIRS[kind](num_labels)
            i, j = pairs[int(rng.integers(len(pairs)))]
            c = FAMILIES[kind](_perm_with(rng, num_labels, i, a),
                               _perm_with(rng, num_labels, j, b))
        edges.append(Edge(u, v, c))
    return LabelCoverInstance(nvertices, num_labels, tuple(edges)), hidden
