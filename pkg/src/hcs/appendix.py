"""Bipartite d-to-1 label cover and the transformations between its variants.

An instance has left vertices 0..nx-1 labeled from 1..R and right vertices
0..ny-1 labeled from 1..R/d. Each edge carries a d-to-1 projection relation
psi_xy (every left label has exactly one partner, every right label exactly
d). Weighted instances hold at most one edge per (x, y) with a rational
weight; unweighted instances hold a multiset of edges.

The four transformations, applied in order, take a weighted instance with
total weight 1 to a non-bipartite d-to-d instance:

    normalize  -> every left vertex has weight 1
    unweight   -> left-regular multigraph of degree ell*|Y|
    power      -> left degree ell, one vertex per sequence of ell neighbours
    collapse   -> constraints between left vertices sharing a right vertex
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from hcs.errors import InvalidInstance, InvalidParameter, SizeLimitError
from hcs.labelcover import Edge, Explicit, LabelCoverInstance

MAX_CONSTRAINTS = 10 ** 6


@dataclass(frozen=True)
class BEdge:
    x: int
    y: int
    relation: frozenset
    weight: Optional[Fraction] = None

    def holds(self, a: int, b: int) -> bool:
        return (a, b) in self.relation


def is_projection(relation, num_left: int, d: int) -> bool:
    """d-to-1: each left label has one partner and each right label d."""
    left = Counter(a for a, _ in relation)
    right = Counter(b for _, b in relation)
    return (set(left) == set(range(1, num_left + 1)) and all(c == 1 for c in left.values())
            and set(right) == set(range(1, num_left // d + 1))
            and all(c == d for c in right.values()))


def is_d_to_d(relation, num_labels: int, d: int) -> bool:
    left = Counter(a for a, _ in relation)
    right = Counter(b for _, b in relation)
    labels = set(range(1, num_labels + 1))
    return (set(left) == labels and set(right) == labels
            and all(c == d for c in left.values()) and all(c == d for c in right.values()))


@dataclass(frozen=True)
class BipartiteLC:
    nx: int
    ny: int
    R: int
    d: int
    edges: tuple = field(default=())
    weighted: bool = True

    def __post_init__(self):
        if self.d < 1 or self.R % self.d:
            raise InvalidParameter(f"R = {self.R} is not a multiple of d = {self.d}")
        seen = set()
        for e in self.edges:
            if not (0 <= e.x < self.nx and 0 <= e.y < self.ny):
                raise InvalidParameter(f"edge ({e.x}, {e.y}) has an unknown endpoint")
            if not is_projection(e.relation, self.R, self.d):
                raise InvalidInstance(f"relation on ({e.x}, {e.y}) is not {self.d}-to-1")
            if self.weighted:
                if e.weight is None or e.weight < 0:
                    raise InvalidParameter("weighted instances need nonnegative weights")
                if (e.x, e.y) in seen:
                    raise InvalidParameter(f"duplicate weighted pair ({e.x}, {e.y})")
                seen.add((e.x, e.y))

    def to_dict(self) -> dict:
        d = {"X": self.nx, "Y": self.ny, "R": self.R, "d": self.d, "weighted": self.weighted,
             "edges": [{"x": e.x, "y": e.y, "relation": sorted(list(p) for p in e.relation)}
                       for e in self.edges]}
        if self.weighted:
            d["weights"] = [str(e.weight) for e in self.edges]
        return d

    @classmethod
    def from_dict(cls, d) -> "BipartiteLC":
        try:
            weighted = bool(d.get("weighted", "weights" in d))
            weights = d.get("weights") if weighted else None
            if weighted and (weights is None or len(weights) != len(d["edges"])):
                raise InvalidParameter("weighted instances need one weight per edge")
            edges = tuple(
                BEdge(int(e["x"]), int(e["y"]),
                      frozenset((int(a), int(b)) for a, b in e["relation"]),
                      Fraction(weights[i]) if weighted else None)
                for i, e in enumerate(d["edges"]))
            return cls(int(d["X"]), int(d["Y"]), int(d["R"]), int(d["d"]), edges, weighted)
        except KeyError as exc:
            raise InvalidParameter(f"missing field {exc}") from None

    @property
    def right_labels(self) -> int:
        return self.R // self.d

    @cached_property
    def _incidence(self) -> dict:
        inc = {}
        for e in self.edges:
            inc.setdefault(e.x, []).append(e)
        return inc

    def incident(self, x: int) -> list:
        return self._incidence.get(x, [])

    @cached_property
    def arrays(self):
        """(left ends, right ends, image table) with image[e, a] = b for (a, b) in psi_e."""
        ex = np.array([e.x for e in self.edges], dtype=np.int64)
        ey = np.array([e.y for e in self.edges], dtype=np.int64)
        image = np.zeros((len(self.edges), self.R + 1), dtype=np.int64)
        for i, e in enumerate(self.edges):
            for a, b in e.relation:
                image[i, a] = b
        return ex, ey, image

    def edge_sat(self, lx, ly) -> np.ndarray:
        """Boolean vector: is edge i satisfied by (lx, ly)?"""
        ex, ey, image = self.arrays
        lx, ly = np.asarray(lx), np.asarray(ly)
        return image[np.arange(len(ex)), lx[ex]] == ly[ey]

    def score_matrix(self, ly, weighted: bool = False) -> np.ndarray:
        """counts[x, a]: edges (or, with ``weighted``, weight) at x satisfied
        when x gets label a."""
        ex, ey, image = self.arrays
        hits = image[:, 1:] == np.asarray(ly)[ey][:, None]
        if weighted:
            w = np.array([e.weight for e in self.edges] + [Fraction(0)], dtype=object)[:-1]
            counts = np.full((self.nx, self.R), Fraction(0), dtype=object)
            np.add.at(counts, ex, np.where(hits, w[:, None], Fraction(0)))
            return counts
        counts = np.zeros((self.nx, self.R), dtype=np.int64)
        np.add.at(counts, ex, hits.astype(np.int64))
        return counts

    def total_weight(self) -> Fraction:
        return sum((e.weight for e in self.edges), Fraction(0))

    @cached_property
    def _x_weights(self) -> list:
        out = [Fraction(0)] * self.nx
        for e in self.edges:
            out[e.x] += e.weight
        return out

    def x_weight(self, x: int) -> Fraction:
        return self._x_weights[x]

    def left_degrees(self) -> list:
        deg = Counter(e.x for e in self.edges)
        return [deg.get(x, 0) for x in range(self.nx)]

    # --- labelings ------------------------------------------------------

    def satisfied_weight(self, lx: Sequence[int], ly: Sequence[int], x: Optional[int] = None):
        """w_L(Phi) or, with ``x``, w_L(Phi, x)."""
        return sum((e.weight for e in self.edges
                    if (x is None or e.x == x) and e.holds(lx[e.x], ly[e.y])), Fraction(0))

    def satisfied_fraction(self, lx, ly, x: int) -> Fraction:
        """Fraction of the edges at left vertex x that L satisfies."""
        inc = self.incident(x)
        if not inc:
            return Fraction(1)
        return Fraction(sum(e.holds(lx[x], ly[e.y]) for e in inc), len(inc))

    def sat_fraction(self, lx, ly) -> Fraction:
        if not self.edges:
            return Fraction(1)
        return Fraction(sum(e.holds(lx[e.x], ly[e.y]) for e in self.edges), len(self.edges))

    def right_labelings(self):
        return itertools.product(range(1, self.right_labels + 1), repeat=self.ny)

    def _best_left(self, ly, score):
        """Per left vertex, the label maximising ``score(x, a)`` given ly."""
        best = []
        for x in range(self.nx):
            best.append(max(range(1, self.R + 1), key=lambda a: (score(x, a, ly), -a)))
        return best

    def label_score(self, x: int, a: int, ly) -> Fraction:
        """Satisfied weight (or count, if unweighted) at x when x gets label a."""
        if self.weighted:
            return sum((e.weight for e in self.incident(x) if e.holds(a, ly[e.y])), Fraction(0))
        return Fraction(sum(e.holds(a, ly[e.y]) for e in self.incident(x)))

    def best_labeling(self):
        """Exact optimum of w_L(Phi) (weighted) or sat count (unweighted).

        Right labels are enumerated; for a fixed right labeling the left
        vertices decouple, so this covers every labeling.
        """
        if self.right_labels ** self.ny > 10 ** 6:
            raise SizeLimitError("too many right labelings to enumerate")
        best = (Fraction(-1), None, None)
        for ly in self.right_labelings():
            lx = self._best_left(ly, self.label_score)
            val = sum((self.label_score(x, lx[x], ly) for x in range(self.nx)), Fraction(0))
            if val > best[0]:
                best = (val, lx, ly)
        return best


def random_projection(rng: np.random.Generator, R: int, d: int) -> frozenset:
    images = np.repeat(np.arange(1, R // d + 1), d)
    rng.shuffle(images)
    return frozenset((a, int(b)) for a, b in zip(range(1, R + 1), images))


def planted_projection(rng, R: int, d: int, a: int, b: int) -> frozenset:
    """Random d-to-1 projection containing (a, b)."""
    rel = dict(random_projection(rng, R, d))
    if rel[a] != b:
        # swap a's image with some label currently mapped to b
        other = next(c for c in range(1, R + 1) if rel[c] == b)
        rel[a], rel[other] = b, rel[a]
    return frozenset(rel.items())


def gen_bipartite(nx: int, ny: int, R: int, d: int, seed: int, weighted: bool = True,
                  planted: bool = False, density: float = 1.0):
    """Random bipartite d-to-1 instance; weights are rationals summing to 1.

    With ``planted`` every relation contains the pair given by a hidden
    labeling, which is returned alongside (else ``None``).
    """
    rng = np.random.default_rng(seed)
    hx = [int(v) for v in rng.integers(1, R + 1, size=nx)]
    hy = [int(v) for v in rng.integers(1, R // d + 1, size=ny)]
    raw = []
    for x in range(nx):
        ys = [y for y in range(ny) if rng.random() < density] or [int(rng.integers(ny))]
        for y in ys:
            rel = (planted_projection(rng, R, d, hx[x], hy[y]) if planted
                   else random_projection(rng, R, d))
            raw.append((x, y, rel, int(rng.integers(0, 5))))
    if weighted:
        if all(w == 0 for *_, w in raw):
            raw[0] = raw[0][:3] + (1,)
        tot = sum(w for *_, w in raw)
        edges = tuple(BEdge(x, y, rel, Fraction(w, tot)) for x, y, rel, w in raw)
    else:
        edges = tuple(BEdge(x, y, rel) for x, y, rel, _ in raw)
    inst = BipartiteLC(nx, ny, R, d, edges, weighted)
    return inst, ((hx, hy) if planted else None)


# ---------------------------------------------------------------------------
# Transformations


@dataclass
class TransformResult:
    instance: object
    origin: list  # new left vertex -> source left vertex
    report: dict = field(default_factory=dict)


def transform_normalize(phi: BipartiteLC, ell: int) -> TransformResult:
    """Copy each x floor(ell*|X|*w(Phi,x)) times with weights w_xy / w(Phi,x)."""
    if not phi.weighted:
        raise InvalidParameter("normalize needs a weighted instance")
    if phi.total_weight() != 1:
        raise InvalidParameter(f"total weight must be 1, got {phi.total_weight()}")
    if ell < 2:
        raise InvalidParameter("ell must be >= 2")
    edges, origin, skipped = [], [], []
    for x in range(phi.nx):
        wx = phi.x_weight(x)
        copies = math.floor(ell * phi.nx * wx)
        if wx == 0 or copies == 0:
            skipped.append(x)
            continue
        inc = phi.incident(x)
        for _ in range(copies):
            nid = len(origin)
            origin.append(x)
            edges.extend(BEdge(nid, e.y, e.relation, e.weight / wx) for e in inc)
    if len(edges) > MAX_CONSTRAINTS:
        raise SizeLimitError("normalize output exceeds the constraint cap")
    out = BipartiteLC(len(origin), phi.ny, phi.R, phi.d, tuple(edges), True)
    return TransformResult(out, origin, {"skipped": skipped})


def transform_unweight(phi: BipartiteLC, ell: int) -> TransformResult:
    """Replace weights by floor(alpha*w_xy) parallel edges, alpha = ell*|Y|.

    The remainder of each left degree goes to y0(x), the smallest y with
    w_xy > 0, so every left degree is exactly alpha.
    """
    if not phi.weighted:
        raise InvalidParameter("unweight needs a weighted instance")
    if ell < 1:
        raise InvalidParameter("ell must be >= 1")
    alpha = ell * phi.ny
    edges, y0s = [], []
    for x in range(phi.nx):
        if phi.x_weight(x) != 1:
            raise InvalidParameter(f"left vertex {x} has weight {phi.x_weight(x)}, not 1")
        inc = sorted(phi.incident(x), key=lambda e: e.y)
        positive = [e for e in inc if e.weight > 0]
        if not positive:
            raise InvalidInstance(f"left vertex {x} has no positive-weight neighbour")
        e0 = positive[0]
        y0s.append(e0.y)
        used = 0
        for e in inc:
            if e is e0:
                continue
            c = math.floor(alpha * e.weight)
            used += c
            edges.extend(BEdge(x, e.y, e.relation) for _ in range(c))
        edges.extend(BEdge(x, e0.y, e0.relation) for _ in range(alpha - used))
    if len(edges) > MAX_CONSTRAINTS:
        raise SizeLimitError("unweight output exceeds the constraint cap")
    out = BipartiteLC(phi.nx, phi.ny, phi.R, phi.d, tuple(edges), False)
    return TransformResult(out, list(range(phi.nx)), {"alpha": alpha, "y0": y0s})


def transform_power(phi: BipartiteLC, ell: int) -> TransformResult:
    """One new left vertex per sequence of ell neighbours (with repetition)."""
    if phi.weighted:
        raise InvalidParameter("power needs an unweighted instance")
    degs = set(phi.left_degrees())
    if len(degs) != 1:
        raise InvalidParameter("power needs a left-regular instance")
    alpha = degs.pop()
    if ell < 1:
        raise InvalidParameter("ell must be >= 1")
    if alpha ** ell * phi.nx * ell > MAX_CONSTRAINTS:
        raise SizeLimitError(f"power output would have {alpha ** ell * phi.nx * ell} constraints")
    edges, origin, seqs = [], [], []
    for x in range(phi.nx):
        inc = phi.incident(x)
        for seq in itertools.product(range(alpha), repeat=ell):
            nid = len(origin)
            origin.append(x)
            seqs.append(seq)
            edges.extend(BEdge(nid, inc[i].y, inc[i].relation) for i in seq)
    out = BipartiteLC(len(origin), phi.ny, phi.R, phi.d, tuple(edges), False)
    return TransformResult(out, origin, {"alpha": alpha, "sequences": seqs})


def collapse_relation(r1, r2) -> frozenset:
    """{(a1, a2) : exists b with (a1, b) in r1 and (a2, b) in r2}."""
    by_b = {}
    for a, b in r2:
        by_b.setdefault(b, []).append(a)
    return frozenset((a1, a2) for a1, b in r1 for a2 in by_b.get(b, ()))


def transform_collapse(phi: BipartiteLC) -> TransformResult:
    """Non-bipartite d-to-d instance on X: one constraint per pair of edges
    sharing a right vertex (pairs from the same left vertex become loops)."""
    if phi.weighted:
        raise InvalidParameter("collapse needs an unweighted instance")
    by_y = {}
    for e in phi.edges:
        by_y.setdefault(e.y, []).append(e)
    count = sum(len(v) * (len(v) - 1) // 2 for v in by_y.values())
    if count > MAX_CONSTRAINTS:
        raise SizeLimitError(f"collapse would produce {count} constraints")
    edges = []
    for y in sorted(by_y):
        for e1, e2 in itertools.combinations(by_y[y], 2):
            rel = collapse_relation(e1.relation, e2.relation)
            edges.append(Edge(e1.x, e2.x, Explicit(rel, phi.R)))
    out = LabelCoverInstance(phi.nx, phi.R, tuple(edges))
    for e in out.edges:
        if not is_d_to_d(e.constraint.relation, phi.R, phi.d):
            raise AssertionError("collapse produced a relation that is not d-to-d")
    return TransformResult(out, list(range(phi.nx)), {"constraints": len(edges)})


# ---------------------------------------------------------------------------
# Set-family claims


def _family_stats(family):
    family = [frozenset(s) for s in family]
    if not family:
        raise InvalidParameter("family must be nonempty")
    d = max(len(s) for s in family)
    freq = Counter(el for s in family for el in s)
    gamma = Fraction(max(freq.values(), default=0), len(family))
    return family, d, gamma


def disjoint_family_prob(family, ell: int, cap: int = 10 ** 6) -> Fraction:
    """Exact P[F_1..F_ell drawn uniformly with repetition are pairwise disjoint]."""
    if ell < 1:
        raise InvalidParameter("ell must be >= 1")
    family = [frozenset(s) for s in family]
    if not family:
        raise InvalidParameter("family must be nonempty")
    if len(family) ** ell > cap:
        raise SizeLimitError(f"{len(family)}^{ell} draws exceed the enumeration cap")
    good = 0
    for draw in itertools.product(family, repeat=ell):
        if all(not (a & b) for a, b in itertools.combinations(draw, 2)):
            good += 1
    return Fraction(good, len(family) ** ell)


def disjointness_bound(family, ell: int):
    """(probability, 1 - ell^2 d gamma, whether gamma < 1/(ell^2 d) applies)."""
    family, d, gamma = _family_stats(family)
    p = disjoint_family_prob(family, ell)
    applies = d > 0 and gamma < Fraction(1, ell * ell * d)
    return p, 1 - ell * ell * d * gamma, applies


def popular_element(family):
    """An element lying in the most sets, with its count (smallest on ties)."""
    freq = Counter(el for s in family for el in s)
    if not freq:
        return None, 0
    el = min(freq, key=lambda e: (-freq[e], e))
    return el, freq[el]


def pairwise_intersecting(family) -> bool:
    family = [frozenset(s) for s in family]
    return all(a & b for a, b in itertools.combinations(family, 2))


# ---------------------------------------------------------------------------
# Checks of the completeness and soundness properties


def copy_labeling(lx, origin):
    return [lx[o] for o in origin]


def verify_normalize(phi: BipartiteLC, res: TransformResult, ell: int) -> dict:
    out = res.instance
    nx = phi.nx
    checks = {
        "unit_weights": all(out.x_weight(x) == 1 for x in range(out.nx)),
        "size_bounds": (ell - 1) * nx <= out.nx <= ell * nx,
    }
    best, blx, bly = phi.best_labeling()
    if best == 1:
        lx2 = copy_labeling(blx, res.origin)
        checks["perfect_preserved"] = all(out.satisfied_weight(lx2, bly, x) == 1
                                          for x in range(out.nx))
    # Soundness: for every right labeling the copies decouple, and a copy of x
    # reaches weight >= gamma iff its best label does.
    ok = True
    for ly in phi.right_labelings():
        tops = [max(phi.label_score(x, a, ly) for a in range(1, phi.R + 1)) /
                phi.x_weight(x) if phi.x_weight(x) else Fraction(0) for x in range(nx)]
        counts = Counter(res.origin)
        for gamma in sorted(set(tops)):
            if gamma <= 0:
                continue
            beta2 = Fraction(sum(counts[x] for x in range(nx) if tops[x] >= gamma), out.nx)
            if best < (1 - Fraction(1, ell)) * beta2 * gamma:
                ok = False
    checks["soundness"] = ok
    return checks


def verify_unweight(phi: BipartiteLC, res: TransformResult, ell: int) -> dict:
    out = res.instance
    alpha = ell * phi.ny
    checks = {"left_regular": all(deg == alpha for deg in out.left_degrees())}
    ok_sound = ok_complete = True
    perfect = True
    # both sides decouple over x: only lx[x] and ly matter at x
    for ly in phi.right_labelings():
        wmat = phi.score_matrix(ly, weighted=True)
        cmat = out.score_matrix(ly)
        for x in range(phi.nx):
            for a in range(phi.R):
                w = wmat[x, a]
                frac = Fraction(int(cmat[x, a]), alpha)
                if not frac < w + Fraction(1, ell):
                    ok_sound = False
                if frac < w - Fraction(1, ell):
                    ok_complete = False
                if w == 1 and frac != 1:
                    perfect = False
    checks.update(soundness=ok_sound, completeness=ok_complete, perfect_preserved=perfect)
    return checks


def verify_power(phi: BipartiteLC, res: TransformResult, ell: int,
                 exhaustive: bool = True) -> dict:
    """Structure checks always; with ``exhaustive``, the completeness count and
    the soundness bound over every labeling of the source instance."""
    out = res.instance
    alpha = res.report["alpha"]
    counts = Counter(res.origin)
    checks = {
        "left_degree": all(deg == ell for deg in out.left_degrees()),
        "sequence_count": all(counts[x] == alpha ** ell for x in range(phi.nx)),
    }
    origin = np.array(res.origin)
    best, blx, bly = phi.best_labeling()
    if best == len(phi.edges):
        lx2 = np.asarray(blx)[origin]
        checks["perfect_preserved"] = bool(out.edge_sat(lx2, bly).all())
    if not exhaustive:
        return checks
    complete = sound = True
    limit = Fraction(1, ell * ell * phi.d)
    for ly in phi.right_labelings():
        # a new vertex with label a is fully satisfied iff all ell of its
        # edges hold; this decouples over source vertices and labels
        src = phi.score_matrix(ly)
        full = (out.score_matrix(ly) == ell).astype(np.int64)
        per_source = np.zeros((phi.nx, phi.R), dtype=np.int64)
        np.add.at(per_source, origin, full)
        if not np.array_equal(per_source, src ** ell):
            complete = False
        frac_out = Fraction(int(out.score_matrix(ly).max(axis=1).sum()), len(out.edges))
        tops = [Fraction(int(v), alpha) for v in phi.score_matrix(ly).max(axis=1)]
        for gamma in [limit * k / 4 for k in range(1, 4)]:
            beta = Fraction(sum(t > gamma for t in tops), phi.nx)
            if frac_out > beta + Fraction(1, ell) + (1 - beta) * ell * ell * phi.d * gamma:
                sound = False
    checks.update(completeness=complete, soundness=sound)
    return checks


def verify_collapse(phi: BipartiteLC, res: TransformResult, t_values=(1, 2)) -> dict:
    from hcs.labelcover import isat_t
    out = res.instance
    checks = {"d_to_d": all(is_d_to_d(e.constraint.relation, phi.R, phi.d)
                            for e in out.edges)}
    complete = True
    for lx in itertools.product(range(1, phi.R + 1), repeat=phi.nx):
        for ly in phi.right_labelings():
            good = [x for x in range(phi.nx) if phi.satisfied_fraction(lx, ly, x) == 1]
            sets = {x: {lx[x]} for x in range(phi.nx)}
            if not all(e.satisfied(sets[e.u], sets[e.v]) for e in out.induced_edges(good)):
                complete = False
    checks["completeness"] = complete
    best, _, _ = phi.best_labeling()
    best_frac = best / len(phi.edges)
    sound = True
    for t in t_values:
        if t > phi.R:
            continue
        beta, _, _ = isat_t(out, t)
        if best_frac < beta / (t * t):
            sound = False
    checks["soundness"] = sound
    return checks
