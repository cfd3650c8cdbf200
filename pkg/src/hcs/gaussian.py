"""Gaussian noise-stability quantities and the low-influence bound checkers.

``lambda_gauss(rho, mu, nu)`` is the bivariate normal quadrant probability
P[X < t_mu, Y < t_nu] for standard normals with correlation ``rho``, where
t_mu is the mu-quantile. It bounds <f, T^{(x)n} g> for low-influence f, g.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import ndtr, ndtri

from hcs.errors import InvalidParameter
from hcs.operators import (MarkovOp, eigen_multipliers, is_pair_uniform, noisy_inner,
                           spectral_radius)
from hcs.qcube import QFunction, build_basis, bunch_fn, low_level_influences, transform


class MCEstimate(NamedTuple):
    value: float
    stderr: float
    samples: int

    def within(self, target: float, sigmas: float = 4.0) -> bool:
        return abs(self.value - target) <= sigmas * self.stderr + 1e-12


@dataclass(frozen=True)
class StabilityQuery:
    rho: float
    mu: float
    nu: float

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidParameter(f"|rho| must be <= 1, got {self.rho}")
        for name in ("mu", "nu"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise InvalidParameter(f"{name} must lie in (0, 1), got {v}")


def threshold_for(mu: float) -> float:
    """t with Phi(t) = mu, so that E_gamma[1_{x < t}] = mu."""
    if not 0.0 < mu < 1.0:
        raise InvalidParameter(f"mu must lie in (0, 1), got {mu}")
    return float(ndtri(mu))


@lru_cache(maxsize=None)
def _legendre(n: int):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


def bvn_upper(h: float, k: float, r: float) -> float:
    """P[X > h, Y > k] for a standard bivariate normal with correlation r.

    Genz's refinement of the Drezner-Wesolowsky method: Gauss-Legendre
    quadrature of Plackett's identity for |r| < 0.925, and an asymptotic
    expansion plus quadrature of the remainder otherwise. Absolute error is
    near machine precision.
    """
    if math.isinf(h) or math.isinf(k):
        if h == math.inf or k == math.inf:
            return 0.0
        if h == -math.inf:
            return 1.0 if k == -math.inf else float(ndtr(-k))
        return float(ndtr(-h))
    if r == 0:
        return float(ndtr(-h) * ndtr(-k))
    if abs(r) >= 1:
        if r > 0:
            return float(ndtr(-max(h, k)))
        return float(max(0.0, ndtr(-h) - ndtr(k)))
    two_pi = 2 * math.pi
    npts = 6 if abs(r) < 0.3 else 12 if abs(r) < 0.75 else 20
    nodes, w = _legendre(npts)
    x = 1.0 + nodes  # maps [-1, 1] onto [0, 2]
    hk = h * k
    if abs(r) < 0.925:
        hs = (h * h + k * k) / 2
        asr = math.asin(r) / 2
        sn = np.sin(asr * x)
        bvn = float(np.exp((sn * hk - hs) / (1 - sn * sn)) @ w)
        bvn = bvn * asr / (2 * math.pi) + float(ndtr(-h) * ndtr(-k))
        return min(1.0, max(0.0, bvn))
    if r < 0:
        k, hk = -k, -hk
    a2 = (1 - r) * (1 + r)
    a = math.sqrt(a2)
    bs = (h - k) ** 2
    c = (4 - hk) / 8
    d = (12 - hk) / 80
    asr = -(bs / a2 + hk) / 2
    bvn = 0.0
    if asr > -100:
        bvn = a * math.exp(asr) * (1 - c * (bs - a2) * (1 - d * bs) / 3 + c * d * a2 * a2)
    if hk > -100:
        b = math.sqrt(bs)
        sp = math.sqrt(two_pi) * float(ndtr(-b / a))
        bvn -= math.exp(-hk / 2) * sp * b * (1 - c * bs * (1 - d * bs) / 3)
    a /= 2
    xs = (a * x) ** 2
    asr_v = -(bs / xs + hk) / 2
    keep = asr_v > -100
    xs, asr_v, wk = xs[keep], asr_v[keep], w[keep]
    sp = 1 + c * xs * (1 + 5 * d * xs)
    rs = np.sqrt(1 - xs)
    ep = np.exp(-(hk / 2) * xs / (1 + rs) ** 2) / rs
    bvn = (a * float((np.exp(asr_v) * (sp - ep)) @ wk) - bvn) / two_pi
    if r > 0:
        bvn += float(ndtr(-max(h, k)))
    elif h >= k:
        bvn = -bvn
    else:
        gap = float(ndtr(k) - ndtr(h)) if h < 0 else float(ndtr(-h) - ndtr(-k))
        bvn = gap - bvn
    return min(1.0, max(0.0, bvn))


def bvn_cdf(a: float, b: float, r: float) -> float:
    """P[X < a, Y < b]."""
    return bvn_upper(-a, -b, r)


def _lambda_closed(rho: float, mu: float, nu: float) -> float:
    """lambda_gauss extended to masses in [0, 1] (degenerate half-spaces)."""
    if mu <= 0.0 or nu <= 0.0:
        return 0.0
    if mu >= 1.0:
        return nu
    if nu >= 1.0:
        return mu
    if rho >= 1.0:
        return min(mu, nu)
    if rho <= -1.0:
        return max(0.0, mu + nu - 1.0)
    return bvn_cdf(float(ndtri(mu)), float(ndtri(nu)), rho)


def lambda_gauss(rho: float, mu: float, nu: float) -> float:
    """<F_mu, U_rho F_nu>_gamma."""
    q = StabilityQuery(rho, mu, nu)
    return _lambda_closed(q.rho, q.mu, q.nu)


def lambda_lower(rho: float, mu: float, nu: float) -> float:
    """<F_mu, U_rho (1 - F_{1-nu})>_gamma, computed as mu - Lambda(rho, mu, 1-nu)."""
    return mu - _lambda_closed(rho, mu, 1.0 - nu)


def lambda_asymptotic(tau: float, rho: float) -> float:
    """Rinott-Rotar small-tau approximation of <F_tau, U_rho F_tau>."""
    if not 0.0 < tau < 1.0:
        raise InvalidParameter(f"tau must lie in (0, 1), got {tau}")
    if not -1.0 < rho < 1.0:
        raise InvalidParameter(f"rho must lie in (-1, 1), got {rho}")
    return (tau ** (2 / (1 + rho))
            * (4 * math.pi * math.log(1 / tau)) ** (-rho / (1 + rho))
            * (1 + rho) ** 1.5 / (1 - rho) ** 0.5)


# ---------------------------------------------------------------------------
# Real analogues


def _real_analogue_values(coeffs: np.ndarray, q: int, n: int, z: np.ndarray) -> np.ndarray:
    """Evaluate sum_x c_x Gamma_x(z) for a batch z of shape (S, n, q-1)."""
    samples = z.shape[0]
    ones = np.ones((samples, n, 1))
    v = np.concatenate([ones, z], axis=2)  # v[s, i, a] = z^i_a, with z^i_0 = 1
    out = np.broadcast_to(coeffs.reshape((q,) * n), (samples,) + (q,) * n)
    for i in range(n):
        out = np.einsum("sa...,sa->s...", out, v[:, i, :])
    return out.reshape(samples)


def real_analogue_inner_mc(f: QFunction, g: QFunction, T: Optional[MarkovOp] = None,
                           samples: int = 10 ** 6, seed: int = 0,
                           chunk: int = 200_000) -> MCEstimate:
    """Monte Carlo estimate of <f~, g~>_gamma or <f~, T~^{(x)n} g~>_gamma.

    With an operator, f and g are expanded in T's eigenbasis and the Gaussian
    variables z^i_a for g are drawn with correlation lambda_a to those for f.
    """
    if (f.q, f.n) != (g.q, g.n):
        raise InvalidParameter("f and g live on different cubes")
    if samples < 1:
        raise InvalidParameter("need at least one sample")
    q, n = f.q, f.n
    if T is not None:
        if T.m != q:
            raise InvalidParameter(f"operator acts on [{T.m}], functions on [{q}]^{n}")
        basis, lam = T.eigenbasis, T.eigenvalues[1:]
    else:
        basis, lam = build_basis(q), np.ones(q - 1)
    cf = transform(f, basis).coeffs
    cg = transform(g, basis).coeffs
    noise = np.sqrt(np.clip(1 - lam ** 2, 0.0, None))
    rng = np.random.default_rng(seed)
    done = 0
    prods = []
    while done < samples:
        s = min(chunk, samples - done)
        z = rng.standard_normal((s, n, q - 1))
        w = rng.standard_normal((s, n, q - 1))
        z2 = lam * z + noise * w
        p = _real_analogue_values(cf, q, n, z) * _real_analogue_values(cg, q, n, z2)
        prods.append(p)
        done += s
    p = np.concatenate(prods)
    mean = float(p.mean())
    if np.ptp(p) <= 1e-12 * max(1.0, abs(mean)):
        return MCEstimate(float(p[0]), 0.0, samples)
    return MCEstimate(mean, float(p.std(ddof=1) / math.sqrt(samples)), samples)


def exact_gaussian_inner(f: QFunction, g: QFunction, T: Optional[MarkovOp] = None) -> float:
    """sum_x (prod_a lambda_a^{|x|_a}) f^(alpha_x) g^(alpha_x)."""
    if T is None:
        return float(transform(f).coeffs @ transform(g).coeffs)
    cf = transform(f, T.eigenbasis).coeffs
    cg = transform(g, T.eigenbasis).coeffs
    return float(np.sum(eigen_multipliers(T, f.n) * cf * cg))


def chop(v):
    """Clamp values to [0, 1]."""
    return np.clip(v, 0.0, 1.0)


def chop_defect(f: QFunction, samples: int = 10 ** 6, seed: int = 0,
                chunk: int = 200_000) -> MCEstimate:
    """Monte Carlo estimate of ||f~ - chop(f~)||_2 under gamma."""
    if not f.in_unit_interval():
        raise InvalidParameter("chop_defect needs a [0, 1]-valued function")
    if samples < 1:
        raise InvalidParameter("need at least one sample")
    coeffs = transform(f).coeffs
    rng = np.random.default_rng(seed)
    sq = []
    done = 0
    while done < samples:
        s = min(chunk, samples - done)
        z = rng.standard_normal((s, f.n, f.q - 1))
        vals = _real_analogue_values(coeffs, f.q, f.n, z)
        sq.append((vals - chop(vals)) ** 2)
        done += s
    sq = np.concatenate(sq)
    m = float(sq.mean())
    value = math.sqrt(m)
    if m == 0.0:
        return MCEstimate(0.0, 0.0, samples)
    se_sq = float(sq.std(ddof=1) / math.sqrt(samples))
    return MCEstimate(value, se_sq / (2 * value), samples)


def real_analogue_norm(f: QFunction) -> float:
    """||f~||_2, equal to ||f||_2 by orthonormality."""
    return float(np.sqrt(np.sum(transform(f).coeffs ** 2)))


# ---------------------------------------------------------------------------
# Bound reports


HOLD = "bounds-hold"
VIOLATED_HYPOTHESIS = "hypothesis-violated"
VIOLATED_BOUNDS = "bounds-violated"


@dataclass
class BoundReport:
    """Outcome of checking one (f, g, T) against the low-influence bounds."""

    inner: float
    lower: float
    upper: float
    k: int
    delta: float
    epsilon: float
    rho: float
    mu: float
    nu: float
    violating_coords: list = field(default_factory=list)
    verdict: str = HOLD
    fish: bool = False

    @property
    def gaussian_upper(self) -> float:
        return self.upper - self.epsilon

    @property
    def gaussian_lower(self) -> float:
        return self.lower + self.epsilon

    @property
    def margin(self) -> float:
        """Lambda(rho, mu, nu) - inner: slack below the Gaussian upper bound."""
        return self.gaussian_upper - self.inner

    @property
    def lower_margin(self) -> float:
        return self.inner - self.gaussian_lower

    def to_dict(self) -> dict:
        d = asdict(self)
        d["violating_coords"] = [list(c) if isinstance(c, tuple) else c
                                 for c in self.violating_coords]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    CSV_FIELDS = ("inner", "lower", "upper", "k", "delta", "epsilon", "rho", "mu",
                  "nu", "violating_coords", "verdict", "fish")

    def csv_row(self) -> list:
        d = self.to_dict()
        d["violating_coords"] = json.dumps(d["violating_coords"], separators=(",", ":"))
        return [_fmt(d[k]) for k in self.CSV_FIELDS]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(round(v, 12))
    return str(v)


def _check_bound_args(f, g, k, delta, epsilon):
    if (f.q, f.n) != (g.q, g.n):
        raise InvalidParameter("f and g live on different cubes")
    if not (f.in_unit_interval() and g.in_unit_interval()):
        raise InvalidParameter("f and g must take values in [0, 1]")
    if k < 0 or delta <= 0 or epsilon < 0:
        raise InvalidParameter("need k >= 0, delta > 0, epsilon >= 0")


def mo_bound_report(f: QFunction, g: QFunction, T: MarkovOp, k: int, delta: float,
                    epsilon: float, fish: bool = False) -> BoundReport:
    """Compare <f, T^{(x)n} g> with the Gaussian bounds at rho = r(T).

    Plain mode flags coordinates i with min(I_i^{<=k}(f), I_i^{<=k}(g)) >= delta.
    Fish mode takes f, g on [q]^{2n} and T on [q^2], uses <[f], T^{(x)n} [g]>
    for the bunched functions, and flags (i, (a, b)) whenever
    min(I_a^{<=k}(f), I_b^{<=k}(g)) >= delta for one of the coordinate pairs
    (2i-1, 2i-1), (2i-1, 2i), (2i, 2i-1).
    """
    _check_bound_args(f, g, k, delta, epsilon)
    if fish:
        if T.m != f.q * f.q or f.n % 2:
            raise InvalidParameter("fish mode needs T on [q^2] and functions on [q]^{2n}")
        if not is_pair_uniform(T):
            raise InvalidParameter("fish mode needs (x_2, y_2) to be uniform under T")
        inner = noisy_inner(bunch_fn(f), T, bunch_fn(g))
    else:
        if T.m != f.q:
            raise InvalidParameter(f"operator acts on [{T.m}], functions on [{f.q}]^{f.n}")
        inner = noisy_inner(f, T, g)
    rho = spectral_radius(T)
    mu, nu = f.mean(), g.mean()
    inf_f = low_level_influences(f, k)
    inf_g = low_level_influences(g, k)
    if fish:
        violating = []
        for i in range(1, f.n // 2 + 1):
            for a, b in ((2 * i - 1, 2 * i - 1), (2 * i - 1, 2 * i), (2 * i, 2 * i - 1)):
                if min(inf_f[a - 1], inf_g[b - 1]) >= delta:
                    violating.append((i, a, b))
    else:
        violating = [i + 1 for i in range(f.n) if min(inf_f[i], inf_g[i]) >= delta]
    upper = _lambda_closed(rho, mu, nu)
    lower = lambda_lower(rho, mu, nu)
    # The lower bound is the upper bound applied to 1 - g; it must agree with
    # the direct quadrant form Lambda(-rho, mu, nu).
    direct = _lambda_closed(-rho, mu, nu)
    if abs(direct - lower) > 1e-9:
        raise AssertionError(f"lower bound mismatch: {lower} vs {direct}")
    if violating:
        verdict = VIOLATED_HYPOTHESIS
    elif lower - epsilon - 1e-12 <= inner <= upper + epsilon + 1e-12:
        verdict = HOLD
    else:
        verdict = VIOLATED_BOUNDS
    return BoundReport(inner=inner, lower=lower - epsilon, upper=upper + epsilon, k=k,
                       delta=delta, epsilon=epsilon, rho=rho, mu=mu, nu=nu,
                       violating_coords=violating, verdict=verdict, fish=fish)


def reports_to_csv(reports, extra_columns=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    extra_columns = extra_columns or []
    writer.writerow([c for c, _ in extra_columns] + list(BoundReport.CSV_FIELDS))
    for i, rep in enumerate(reports):
        writer.writerow([vals[i] for _, vals in extra_columns] + rep.csv_row())
    return buf.getvalue()
