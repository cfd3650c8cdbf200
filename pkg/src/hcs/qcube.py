"""Real-valued functions on the q-ary hypercube [q]^n.

A function is stored as a dense table of q^n values. Points x in [q]^n are
indexed in row-major order with coordinate 1 most significant, which is also
numpy's C order when the table is viewed as a tensor of shape (q,)*n with
axis 0 holding coordinate 1. Coordinates are numbered from 1 in every public
function, symbols from 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from hcs.errors import InvalidParameter

#: Upper bound on n * log2(q) for dense tables.
MAX_LOG2_SIZE = 24


def _check_size(q: int, n: int) -> None:
    if q < 2:
        raise InvalidParameter(f"alphabet size must be >= 2, got {q}")
    if n < 0:
        raise InvalidParameter(f"dimension must be >= 0, got {n}")
    if n * math.log2(q) > MAX_LOG2_SIZE + 1e-9:
        raise InvalidParameter(
            f"[{q}]^{n} exceeds the dense-table cap of 2^{MAX_LOG2_SIZE} points")


@dataclass(frozen=True, eq=False)
class QFunction:
    """A function [q]^n -> R given by its value table."""

    q: int
    n: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_size(self.q, self.n)
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size != self.q ** self.n:
            raise InvalidParameter(
                f"table has {vals.size} entries, expected {self.q ** self.n}")
        if not np.all(np.isfinite(vals)):
            raise InvalidParameter("function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_tensor(cls, tensor: np.ndarray) -> "QFunction":
        tensor = np.asarray(tensor, dtype=float)
        n = tensor.ndim
        q = tensor.shape[0] if n else 2
        if any(s != q for s in tensor.shape):
            raise InvalidParameter(f"tensor shape {tensor.shape} is not (q,)*n")
        return cls(q, n, tensor.reshape(-1))

    @classmethod
    def constant(cls, q: int, n: int, c: float) -> "QFunction":
        return cls(q, n, np.full(q ** n, float(c)))

    @property
    def size(self) -> int:
        return self.values.size

    def tensor(self) -> np.ndarray:
        return self.values.reshape((self.q,) * self.n)

    def __call__(self, x: Iterable[int]) -> float:
        return float(self.values[point_index(self.q, x)])

    def mean(self) -> float:
        return float(self.values.mean())

    def inner(self, other: "QFunction") -> float:
        """<f, g> under the uniform measure."""
        _check_same_domain(self, other)
        return float(np.dot(self.values, other.values) / self.size)

    def in_unit_interval(self) -> bool:
        return bool(np.all(self.values >= 0.0) and np.all(self.values <= 1.0))

    def to_json(self) -> str:
        return json.dumps({"q": self.q, "n": self.n, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "QFunction":
        obj = json.loads(text)
        try:
            return cls(int(obj["q"]), int(obj["n"]), obj["values"])
        except KeyError as exc:
            raise InvalidParameter(f"missing field {exc}") from None


def _check_same_domain(f: QFunction, g: QFunction) -> None:
    if f.q != g.q or f.n != g.n:
        raise InvalidParameter(
            f"domain mismatch: [{f.q}]^{f.n} versus [{g.q}]^{g.n}")


def point_index(q: int, x: Iterable[int]) -> int:
    idx = 0
    for s in x:
        if not 0 <= s < q:
            raise InvalidParameter(f"symbol {s} outside [{q}]")
        idx = idx * q + int(s)
    return idx


def index_point(q: int, n: int, idx: int) -> tuple[int, ...]:
    digits = []
    for _ in range(n):
        idx, r = divmod(idx, q)
        digits.append(r)
    return tuple(reversed(digits))


def all_points(q: int, n: int) -> np.ndarray:
    """Array of shape (q^n, n) listing every point in index order."""
    grids = np.indices((q,) * n).reshape(n, -1)
    return grids.T.copy()


def weight_table(q: int, n: int) -> np.ndarray:
    """|x| (number of nonzero coordinates) for every index x."""
    return np.count_nonzero(all_points(q, n), axis=1) if n else np.zeros(1, dtype=int)


# ---------------------------------------------------------------------------
# Orthonormal bases


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Vectors alpha_0 = 1, alpha_1, ..., alpha_{q-1} on [q].

    Row ``a`` of ``vectors`` is alpha_a; orthonormality is with respect to the
    uniform measure, <u, v> = (1/q) sum_s u(s) v(s).
    """

    q: int
    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        vecs = np.array(self.vectors, dtype=float)
        if vecs.shape != (self.q, self.q):
            raise InvalidParameter(f"basis must be {self.q}x{self.q}, got {vecs.shape}")
        if not np.allclose(vecs[0], 1.0, atol=1e-12, rtol=0):
            raise InvalidParameter("alpha_0 must be the all-ones vector")
        gram = vecs @ vecs.T / self.q
        if not np.allclose(gram, np.eye(self.q), atol=1e-10, rtol=0):
            raise InvalidParameter("vectors are not orthonormal under the uniform measure")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T / self.q


def build_basis(q: int) -> OrthonormalBasis:
    """Deterministic orthonormal basis with alpha_0 = 1.

    Gram-Schmidt (uniform measure) on the all-ones vector followed by the
    indicators of the symbols 0, 1, ..., q-2. For q = 2 this yields the
    character basis (1, 1), (1, -1).
    """
    if q < 2:
        raise InvalidParameter(f"alphabet size must be >= 2, got {q}")
    basis = [np.ones(q)]
    for s in range(q - 1):
        v = np.zeros(q)
        v[s] = 1.0
        for u in basis:
            v = v - (v @ u / q) * u
        v = v / math.sqrt(v @ v / q)
        basis.append(v)
    return OrthonormalBasis(q, np.vstack(basis))


def random_basis(q: int, seed: int) -> OrthonormalBasis:
    """A random orthonormal completion of alpha_0 = 1 (for invariance checks)."""
    rng = np.random.default_rng(seed)
    ones = np.ones((q, 1)) / math.sqrt(q)
    m = np.hstack([ones, rng.standard_normal((q, q - 1))])
    qmat, _ = np.linalg.qr(m)
    qmat[:, 0] = np.sign(qmat[0, 0]) * qmat[:, 0]
    return OrthonormalBasis(q, qmat.T * math.sqrt(q))


# ---------------------------------------------------------------------------
# Fourier transform


@dataclass(frozen=True, eq=False)
class FourierTable:
    """Coefficients f^(alpha_x) for every x in [q]^n, in index order."""

    q: int
    n: int
    coeffs: np.ndarray = field(repr=False)
    basis: OrthonormalBasis = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size != self.q ** self.n:
            raise InvalidParameter("coefficient table has the wrong length")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def tensor(self) -> np.ndarray:
        return self.coeffs.reshape((self.q,) * self.n)

    def __getitem__(self, x) -> float:
        return float(self.coeffs[point_index(self.q, x)])

    def weights(self) -> np.ndarray:
        return weight_table(self.q, self.n)


def _apply_per_axis(tensor: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """Apply ``mat`` (acting on the q-dim index) along every axis of ``tensor``.

    Output axis order is preserved: out[..., a, ...] = sum_s mat[a, s] t[..., s, ...].
    """
    out = tensor
    for axis in range(tensor.ndim):
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [axis])), 0, axis)
    return out


def transform(f: QFunction, basis: Optional[OrthonormalBasis] = None) -> FourierTable:
    """Fourier coefficients of ``f`` in the product basis alpha_x.

    Runs one q-point transform per coordinate, O(n q^{n+1}) in total.
    """
    basis = basis or build_basis(f.q)
    if basis.q != f.q:
        raise InvalidParameter(f"basis is for q={basis.q}, function has q={f.q}")
    coeffs = _apply_per_axis(f.tensor(), basis.vectors / f.q)
    return FourierTable(f.q, f.n, coeffs.reshape(-1), basis)


def inverse_transform(ft: FourierTable) -> QFunction:
    values = _apply_per_axis(ft.tensor(), ft.basis.vectors.T)
    return QFunction(ft.q, ft.n, values.reshape(-1))


# ---------------------------------------------------------------------------
# Influences


def _check_coord(n: int, i: int) -> None:
    if not 1 <= i <= n:
        raise InvalidParameter(f"coordinate {i} outside 1..{n}")


def influence(f: QFunction, i: int) -> float:
    """I_i(f): expected variance of f along coordinate i, from the value table."""
    _check_coord(f.n, i)
    return float(np.var(f.tensor(), axis=i - 1).mean())


def fourier_influence(ft: FourierTable, i: int) -> float:
    """I_i(f) as the Fourier mass on characters with x_i != 0."""
    _check_coord(ft.n, i)
    t = ft.tensor()
    sq = np.take(t, range(1, ft.q), axis=i - 1) ** 2
    return float(sq.sum())


def low_level_influence(f: QFunction | FourierTable, i: int, k: int,
                        basis: Optional[OrthonormalBasis] = None) -> float:
    """I_i^{<=k}(f) = sum of f^(alpha_x)^2 over x with x_i != 0 and |x| <= k."""
    ft = f if isinstance(f, FourierTable) else transform(f, basis)
    _check_coord(ft.n, i)
    if k < 0:
        raise InvalidParameter(f"degree bound must be >= 0, got {k}")
    mask = (all_points(ft.q, ft.n)[:, i - 1] != 0) & (ft.weights() <= k)
    return float(np.sum(ft.coeffs[mask] ** 2))


def low_level_influences(f: QFunction | FourierTable, k: int,
                         basis: Optional[OrthonormalBasis] = None) -> np.ndarray:
    """Vector (I_1^{<=k}(f), ..., I_n^{<=k}(f))."""
    ft = f if isinstance(f, FourierTable) else transform(f, basis)
    if k < 0:
        raise InvalidParameter(f"degree bound must be >= 0, got {k}")
    pts = all_points(ft.q, ft.n)
    low = np.where(ft.weights() <= k, ft.coeffs ** 2, 0.0)
    return np.array([low[pts[:, j] != 0].sum() for j in range(ft.n)])


def influences(f: QFunction) -> np.ndarray:
    return np.array([influence(f, i) for i in range(1, f.n + 1)])


# ---------------------------------------------------------------------------
# Re-indexing


def bunch_fn(f: QFunction) -> QFunction:
    """[q]^{2m} -> [q^2]^m, pairing coordinates (1,2), (3,4), ...

    The pair (x_{2j-1}, x_{2j}) becomes the symbol q*x_{2j-1} + x_{2j}; with
    the row-major layout this leaves the value table untouched.
    """
    if f.n % 2:
        raise InvalidParameter(f"bunching needs an even dimension, got n={f.n}")
    return QFunction(f.q * f.q, f.n // 2, f.values)


def unbunch_fn(f: QFunction) -> QFunction:
    r = math.isqrt(f.q)
    if r * r != f.q:
        raise InvalidParameter(f"alphabet {f.q} is not a perfect square")
    return QFunction(r, 2 * f.n, f.values)


def permute_coords(f: QFunction, perm) -> QFunction:
    """The function h with h(x^perm) = f(x), where x^perm_i = x_{perm(i)}.

    ``perm`` is a 1-based sequence, perm[i-1] = perm(i). Coordinate i of the
    result is coordinate perm(i) of ``f``.
    """
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(1, f.n + 1)):
        raise InvalidParameter(f"{perm} is not a permutation of 1..{f.n}")
    if f.n == 0:
        return f
    return QFunction.from_tensor(np.transpose(f.tensor(), [p - 1 for p in perm]))


def average_over(f: QFunction, coords: Iterable[int]) -> QFunction:
    """A_S f: average over the coordinates in S, broadcast back to [q]^n."""
    coords = sorted(set(coords))
    for i in coords:
        _check_coord(f.n, i)
    if not coords:
        return f
    axes = tuple(i - 1 for i in coords)
    t = f.tensor()
    avg = np.broadcast_to(t.mean(axis=axes, keepdims=True), t.shape)
    return QFunction(f.q, f.n, avg.reshape(-1))


# ---------------------------------------------------------------------------
# Test functions


def dictator(q: int, n: int, i: int, a: int) -> QFunction:
    _check_coord(n, i)
    if not 0 <= a < q:
        raise InvalidParameter(f"symbol {a} outside [{q}]")
    return QFunction(q, n, (all_points(q, n)[:, i - 1] == a).astype(float))


def plurality(q: int, n: int) -> QFunction:
    """Most frequent symbol; ties go to the smallest symbol."""
    pts = all_points(q, n)
    counts = np.stack([(pts == a).sum(axis=1) for a in range(q)], axis=1)
    return QFunction(q, n, counts.argmax(axis=1).astype(float))


def threshold_indicator(q: int, n: int, a: int = 0,
                        threshold: Optional[int] = None) -> QFunction:
    """1{ #coordinates equal to ``a`` >= threshold }, default threshold ceil(n/q)."""
    if not 0 <= a < q:
        raise InvalidParameter(f"symbol {a} outside [{q}]")
    if threshold is None:
        threshold = -(-n // q)
    counts = (all_points(q, n) == a).sum(axis=1)
    return QFunction(q, n, (counts >= threshold).astype(float))


def coordinate_average(q: int, tables) -> QFunction:
    """(1/n) sum_j h_j(x_j) for per-coordinate tables h_j: [q] -> R.

    Every coordinate has influence Var(h_j)/n^2, so for bounded h_j these are
    low-influence functions with all Fourier mass on levels 0 and 1.
    """
    tables = [np.asarray(h, dtype=float) for h in tables]
    n = len(tables)
    if any(h.shape != (q,) for h in tables):
        raise InvalidParameter("each coordinate table must have length q")
    pts = all_points(q, n)
    vals = sum(h[pts[:, j]] for j, h in enumerate(tables)) / max(n, 1)
    return QFunction(q, n, vals)


def named_function(kind: str, q: int, n: int, i: Optional[int] = None,
                   a: Optional[int] = None, threshold: Optional[int] = None) -> QFunction:
    if kind == "dictator":
        if i is None or a is None:
            raise InvalidParameter("dictator needs a coordinate i and a symbol a")
        return dictator(q, n, i, a)
    if kind == "plurality":
        return plurality(q, n)
    if kind in ("threshold", "threshold-indicator"):
        return threshold_indicator(q, n, 0 if a is None else a, threshold)
    raise InvalidParameter(f"unknown function kind {kind!r}")


def random_function(q: int, n: int, rng: np.random.Generator,
                    unit: bool = True) -> QFunction:
    vals = rng.random(q ** n) if unit else rng.standard_normal(q ** n)
    return QFunction(q, n, vals)
