"""Symmetric Markov operators on [m] and their tensor powers.

Matrices are held twice: exactly, as :class:`fractions.Fraction` entries used
for every support and row-sum check, and as a float array used for spectral
data and for applying the operator to functions.
"""
from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional

import numpy as np

from hcs.errors import InvalidParameter
from hcs.qcube import (FourierTable, OrthonormalBasis, QFunction, build_basis,
                       inverse_transform, transform, _apply_per_axis)

EIGEN_TOL = 1e-12


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v)  # exact binary value
    return Fraction(v)


@dataclass(frozen=True, eq=False)
class MarkovOp:
    """A symmetric stochastic m x m transition matrix.

    Entry (x, y) is the probability of moving from x to y. Construction fails
    unless the exact matrix is symmetric with every row summing to 1.
    """

    m: int
    exact: tuple = field(repr=False)
    name: str = ""

    def __post_init__(self):
        rows = tuple(tuple(_as_fraction(v) for v in row) for row in self.exact)
        if len(rows) != self.m or any(len(r) != self.m for r in rows):
            raise InvalidParameter(f"matrix must be {self.m}x{self.m}")
        for x in range(self.m):
            if any(v < 0 for v in rows[x]):
                raise InvalidParameter("transition probabilities must be nonnegative")
            if sum(rows[x]) != 1:
                raise InvalidParameter(f"row {x} sums to {sum(rows[x])}, not 1")
            for y in range(x):
                if rows[x][y] != rows[y][x]:
                    raise InvalidParameter(f"matrix is not symmetric at ({x}, {y})")
        object.__setattr__(self, "exact", rows)

    @classmethod
    def from_matrix(cls, matrix, name: str = "") -> "MarkovOp":
        rows = [list(r) for r in matrix]
        return cls(len(rows), tuple(tuple(r) for r in rows), name)

    @cached_property
    def matrix(self) -> np.ndarray:
        mat = np.array([[float(v) for v in row] for row in self.exact])
        mat.setflags(write=False)
        return mat

    @cached_property
    def support(self) -> frozenset:
        return frozenset((x, y) for x in range(self.m) for y in range(self.m)
                         if self.exact[x][y] > 0)

    @cached_property
    def support_matrix(self) -> np.ndarray:
        s = np.array([[v > 0 for v in row] for row in self.exact], dtype=bool)
        s.setflags(write=False)
        return s

    @cached_property
    def _spectral(self):
        # Diagonalise on the complement of the constants so that alpha_0 = 1
        # is always the eigenvector reported for lambda_0 = 1.
        comp = build_basis(self.m).vectors[1:].T / math.sqrt(self.m)
        small = comp.T @ self.matrix @ comp
        vals, vecs = np.linalg.eigh((small + small.T) / 2)
        order = np.argsort(vals)[::-1]
        vals = vals[order]
        vecs = comp @ vecs[:, order] * math.sqrt(self.m)
        eigvals = np.concatenate([[1.0], vals])
        basis = OrthonormalBasis(self.m, np.vstack([np.ones(self.m), vecs.T]))
        return eigvals, basis

    @property
    def eigenvalues(self) -> np.ndarray:
        """lambda_0 = 1 >= lambda_1 >= ... >= lambda_{m-1}."""
        return self._spectral[0]

    @property
    def eigenbasis(self) -> OrthonormalBasis:
        return self._spectral[1]

    def to_json(self) -> str:
        return json.dumps({"m": self.m,
                           "matrix": [[str(v) for v in row] for row in self.exact]})

    @classmethod
    def from_json(cls, text: str) -> "MarkovOp":
        obj = json.loads(text)
        try:
            return cls(int(obj["m"]), tuple(tuple(Fraction(v) for v in row)
                                           for row in obj["matrix"]))
        except KeyError as exc:
            raise InvalidParameter(f"missing field {exc}") from None
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidParameter(str(exc)) from None


def spectral_radius(T: MarkovOp) -> float:
    """r(T) = max(|lambda_1|, |lambda_{m-1}|)."""
    if not isinstance(T, MarkovOp):
        T = MarkovOp.from_matrix(T)
    lam = T.eigenvalues
    if T.m == 1:
        return 0.0
    return float(max(abs(lam[1]), abs(lam[-1])))


def identity_op(m: int) -> MarkovOp:
    return MarkovOp.from_matrix(
        [[Fraction(int(x == y)) for y in range(m)] for x in range(m)], "identity")


def beckner(q: int, rho) -> MarkovOp:
    """T_rho: stay with probability 1/q + (1 - 1/q) rho, else move uniformly."""
    if q < 2:
        raise InvalidParameter(f"alphabet size must be >= 2, got {q}")
    r = _as_fraction(rho)
    if abs(r) > 1:
        raise InvalidParameter(f"|rho| must be <= 1, got {rho}")
    stay = Fraction(1, q) + (1 - Fraction(1, q)) * r
    move = Fraction(1, q) * (1 - r)
    return MarkovOp.from_matrix(
        [[stay if x == y else move for y in range(q)] for x in range(q)],
        f"beckner(q={q}, rho={float(r):g})")


def tensor_matrix(T: MarkovOp, n: int) -> np.ndarray:
    """Dense matrix of T^{(x)n}; only for small m^n."""
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(out, T.matrix)
    return out


# ---------------------------------------------------------------------------
# Gadget operators


class GadgetKind(enum.Enum):
    """The three noise operators behind the coloring reductions.

    ALMOST3 acts on [3]; COL4 on [4]^2 (as [16]); ALPHA on [3]^2 (as [9]).
    """

    ALMOST3 = "almost3"
    COL4 = "col4"
    ALPHA = "alpha"

    @property
    def symbols(self) -> int:
        return {"almost3": 3, "col4": 4, "alpha": 3}[self.value]

    @property
    def paired(self) -> bool:
        return self is not GadgetKind.ALMOST3

    @property
    def weights(self) -> tuple:
        if self is GadgetKind.COL4:
            return (Fraction(1, 12), Fraction(1, 8), Fraction(3, 8))
        if self is GadgetKind.ALPHA:
            return (Fraction(0), Fraction(1, 2), Fraction(1, 2))
        return ()

    def weight_equations(self) -> list[bool]:
        """The linear constraints the transition weights must satisfy."""
        if self is GadgetKind.COL4:
            b1, b2, b3 = self.weights
            return [3 * b1 + 6 * b2 == 1, 2 * b2 + 2 * b3 == 1, min(self.weights) >= 0]
        if self is GadgetKind.ALPHA:
            b1, b2, b3 = self.weights
            return [2 * b1 + 2 * b2 == 1, b2 + b3 == 1,
                    b1 / 3 + 2 * b2 / 3 == 2 * b3 / 3, min(self.weights) >= 0]
        return []

    @classmethod
    def parse(cls, kind) -> "GadgetKind":
        if isinstance(kind, cls):
            return kind
        aliases = {"col3": "alpha", "almost-3-coloring": "almost3"}
        try:
            return cls(aliases.get(kind, kind))
        except ValueError:
            raise InvalidParameter(f"unknown gadget kind {kind!r}") from None


def _pair_pattern(kind: GadgetKind, x: tuple, y: tuple) -> Optional[int]:
    """Index (0, 1, 2) of the transition pattern joining pair states x and y."""
    (x1, x2), (y1, y2) = x, y
    xs_eq, ys_eq = x1 == x2, y1 == y2
    if xs_eq and ys_eq:
        return 0 if x1 != y1 else None
    if xs_eq or ys_eq:
        (a, _), (b, c) = (x, y) if xs_eq else (y, x)
        return 1 if len({a, b, c}) == 3 else None
    if kind is GadgetKind.COL4:
        return 2 if len({x1, x2, y1, y2}) == 4 else None
    # alpha: (x, y) <-> (z, y) with x, y, z distinct
    return 2 if x2 == y2 and len({x1, y1, x2}) == 3 else None


# Number of targets of each pattern reachable from a state of each shape,
# (from a diagonal state (x,x), from an off-diagonal state (x,y)).
_PATTERN_COUNTS = {
    GadgetKind.COL4: ((3, 6, 0), (0, 2, 2)),
    GadgetKind.ALPHA: ((2, 2, 0), (0, 1, 1)),
}


def gadget_operator(kind) -> MarkovOp:
    """Exact matrix of the gadget noise operator of the given kind."""
    kind = GadgetKind.parse(kind)
    if kind is GadgetKind.ALMOST3:
        half = Fraction(1, 2)
        return MarkovOp.from_matrix(
            [[0 if x == y else half for y in range(3)] for x in range(3)], "almost3")
    if not all(kind.weight_equations()):
        raise AssertionError(f"weights of {kind.value} violate their equations")
    q = kind.symbols
    states = list(itertools.product(range(q), repeat=2))
    weights = kind.weights
    rows = []
    for x in states:
        counts = [0, 0, 0]
        row = []
        for y in states:
            p = _pair_pattern(kind, x, y)
            if p is None:
                row.append(Fraction(0))
            else:
                counts[p] += 1
                row.append(weights[p])
        expected = _PATTERN_COUNTS[kind][0 if x[0] == x[1] else 1]
        if tuple(counts) != expected:
            raise AssertionError(
                f"{kind.value}: state {x} has pattern counts {counts}, expected {expected}")
        rows.append(row)
    return MarkovOp.from_matrix(rows, kind.value)


def gadget_support_condition(kind, x: int, y: int) -> bool:
    """The combinatorial condition each lemma places on the support."""
    kind = GadgetKind.parse(kind)
    if kind is GadgetKind.ALMOST3:
        return x != y
    q = kind.symbols
    (x1, x2), (y1, y2) = divmod(x, q), divmod(y, q)
    if kind is GadgetKind.COL4:
        return not ({x1, x2} & {y1, y2})
    return x1 not in (y1, y2) and y1 not in (x1, x2)


# ---------------------------------------------------------------------------
# Acting on functions


def _check_alphabet(T: MarkovOp, f: QFunction) -> None:
    if T.m != f.q:
        raise InvalidParameter(f"operator acts on [{T.m}], function is on [{f.q}]^{f.n}")


def apply_tensor(T: MarkovOp, f: QFunction) -> QFunction:
    """(T^{(x)n} f)(x) = E_{y ~ T(x, .)} f(y), one coordinate at a time."""
    _check_alphabet(T, f)
    return QFunction(f.q, f.n, _apply_per_axis(f.tensor(), T.matrix).reshape(-1))


def eigen_multipliers(T: MarkovOp, n: int) -> np.ndarray:
    """prod_a lambda_a^{|x|_a} for each x, in index order."""
    out = np.ones(1)
    for _ in range(n):
        out = np.multiply.outer(out, T.eigenvalues).reshape(-1)
    return out


def apply_tensor_spectral(T: MarkovOp, f: QFunction) -> QFunction:
    """T^{(x)n} f via its expansion in the eigenbasis of T."""
    _check_alphabet(T, f)
    ft = transform(f, T.eigenbasis)
    scaled = FourierTable(f.q, f.n, ft.coeffs * eigen_multipliers(T, f.n), ft.basis)
    return inverse_transform(scaled)


def noisy_inner(f: QFunction, T: MarkovOp, g: QFunction) -> float:
    """<f, T^{(x)n} g> under the uniform measure."""
    if (f.q, f.n) != (g.q, g.n):
        raise InvalidParameter("f and g live on different cubes")
    return f.inner(apply_tensor(T, g))


def pair_marginal_distribution(T: MarkovOp) -> list[list[Fraction]]:
    """Exact law of (x_2, y_2) for uniform (x_1, x_2) and (y_1, y_2) ~ T.

    Returned as a q x q table of fractions, rows indexed by x_2.
    """
    q = math.isqrt(T.m)
    if q * q != T.m:
        raise InvalidParameter(f"operator acts on [{T.m}], which is not [q^2]")
    table = [[Fraction(0)] * q for _ in range(q)]
    start = Fraction(1, T.m)
    for x in range(T.m):
        x2 = x % q
        for y, p in enumerate(T.exact[x]):
            if p:
                table[x2][y % q] += start * p
    return table


def is_pair_uniform(T: MarkovOp) -> bool:
    table = pair_marginal_distribution(T)
    cell = Fraction(1, len(table) ** 2)
    return all(v == cell for row in table for v in row)
