import math

import numpy as np
import pytest
from scipy.stats import norm

from hcs.errors import InvalidParameter
from hcs.gaussian import (HOLD, VIOLATED_HYPOTHESIS, BoundReport, StabilityQuery, bvn_cdf,
                          chop, chop_defect, exact_gaussian_inner, lambda_asymptotic,
                          lambda_gauss, lambda_lower, mo_bound_report, real_analogue_inner_mc,
                          real_analogue_norm, reports_to_csv, threshold_for)
from hcs.operators import beckner, gadget_operator
from hcs.qcube import QFunction, dictator, random_function

from reference import lambda_by_double_integral

GRID = [0.1, 0.5, 0.9]


def test_threshold_for():
    assert threshold_for(0.5) == 0.0
    assert threshold_for(norm.cdf(1.0)) == pytest.approx(1.0, abs=1e-9)
    t = threshold_for(1e-12)
    assert abs(norm.cdf(t) - 1e-12) <= 1e-12
    with pytest.raises(InvalidParameter):
        threshold_for(1.0)


def test_query_validation():
    with pytest.raises(InvalidParameter):
        StabilityQuery(1.2, 0.5, 0.5)
    with pytest.raises(InvalidParameter):
        lambda_gauss(0.5, 0.0, 0.5)


@pytest.mark.parametrize("mu", GRID)
@pytest.mark.parametrize("nu", GRID)
def test_independent_case(mu, nu):
    assert lambda_gauss(0.0, mu, nu) == pytest.approx(mu * nu, abs=1e-9)


@pytest.mark.parametrize("mu", GRID)
@pytest.mark.parametrize("nu", GRID)
def test_extreme_correlations(mu, nu):
    assert lambda_gauss(1.0, mu, nu) == pytest.approx(min(mu, nu), abs=1e-9)
    assert lambda_gauss(-1.0, mu, nu) == pytest.approx(max(0.0, mu + nu - 1), abs=1e-9)
    # approach is continuous
    assert lambda_gauss(1 - 1e-9, mu, nu) == pytest.approx(min(mu, nu), abs=1e-4)


def test_sheppard_value():
    assert lambda_gauss(0.5, 0.5, 0.5) == pytest.approx(1 / 3, abs=1e-12)
    assert lambda_by_double_integral(0.5, 0.5, 0.5) == pytest.approx(1 / 3, abs=1e-9)
    assert 0.25 + math.asin(0.5) / (2 * math.pi) == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("rho,mu,nu", [(0.3, 0.2, 0.7), (-0.6, 0.4, 0.45), (0.95, 0.1, 0.05),
                                       (-0.9, 0.8, 0.6), (0.5, 1 / 3, 1 / 3)])
def test_against_double_integral(rho, mu, nu):
    assert lambda_gauss(rho, mu, nu) == pytest.approx(lambda_by_double_integral(rho, mu, nu),
                                                      abs=1e-9)


def test_bvn_symmetries():
    for h, k, r in [(0.3, -1.2, 0.4), (-2.0, 0.5, -0.7), (1.5, 1.5, 0.99)]:
        assert bvn_cdf(h, k, r) == pytest.approx(bvn_cdf(k, h, r), abs=1e-15)
        assert bvn_cdf(h, k, r) + bvn_cdf(h, -k, -r) == pytest.approx(norm.cdf(h), abs=1e-13)


@pytest.mark.parametrize("mu", GRID)
@pytest.mark.parametrize("nu", GRID)
def test_complement_identity(mu, nu):
    # P[X < a, Y < b] + P[X < a, Y > b] = mu, and Y > b is a quadrant of -Y
    for rho in (-0.7, 0.0, 0.4, 0.8):
        total = lambda_gauss(rho, mu, nu) + lambda_gauss(-rho, mu, 1 - nu)
        assert total == pytest.approx(mu, abs=1e-8)
        assert lambda_lower(rho, mu, nu) + lambda_gauss(rho, mu, 1 - nu) == pytest.approx(mu)


def test_same_rho_complement_only_at_zero():
    assert lambda_gauss(0.0, 0.3, 0.6) + lambda_gauss(0.0, 0.3, 0.4) == pytest.approx(0.3)
    # with rho != 0 the same-sign sum is not mu: 1/3 + 1/3 at the Sheppard point
    assert lambda_gauss(0.5, 0.5, 0.5) + lambda_gauss(0.5, 0.5, 0.5) == pytest.approx(2 / 3)


def test_lower_bound_two_forms():
    for rho, mu, nu in [(0.5, 0.3, 0.6), (0.9, 0.5, 0.5)]:
        assert lambda_lower(rho, mu, nu) == pytest.approx(lambda_gauss(-rho, mu, nu), abs=1e-9)


@pytest.mark.parametrize("mu", GRID)
@pytest.mark.parametrize("nu", GRID)
def test_monotone_in_rho(mu, nu):
    vals = [lambda_gauss(r, mu, nu) for r in np.linspace(-1, 1, 21)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_asymptotic():
    # at rho = 0 the formula is tau^2, the independent value
    assert lambda_asymptotic(0.3, 0.0) == pytest.approx(0.09)
    assert lambda_asymptotic(0.3, 0.0) == pytest.approx(lambda_gauss(0.0, 0.3, 0.3))
    r4 = lambda_gauss(0.5, 1e-4, 1e-4) / lambda_asymptotic(1e-4, 0.5)
    r6 = lambda_gauss(0.5, 1e-6, 1e-6) / lambda_asymptotic(1e-6, 0.5)
    assert 0.5 <= r4 <= 2
    assert abs(r6 - 1) < abs(r4 - 1)


# --- real analogues -----------------------------------------------------------


def test_mc_constant_exact():
    c = QFunction.constant(3, 2, 0.6)
    est = real_analogue_inner_mc(c, c, samples=1000, seed=1)
    assert est.value == pytest.approx(0.36, abs=1e-15)
    assert est.stderr == 0.0


@pytest.mark.parametrize("with_T", [False, True])
def test_mc_matches_fourier_sum(with_T):
    rng = np.random.default_rng(11)
    f, g = random_function(3, 2, rng), random_function(3, 2, rng)
    T = beckner(3, 0.5) if with_T else None
    exact = exact_gaussian_inner(f, g, T)
    if with_T:
        from hcs.qcube import transform
        from hcs.qcube import weight_table
        ref = float(np.sum(0.5 ** weight_table(3, 2) * transform(f).coeffs * transform(g).coeffs))
        assert exact == pytest.approx(ref, abs=1e-12)
    else:
        assert exact == pytest.approx(f.inner(g), abs=1e-12)
    est = real_analogue_inner_mc(f, g, T, samples=400_000, seed=3)
    assert est.within(exact, 4)


def test_mc_seeded():
    f = random_function(3, 1, np.random.default_rng(0))
    a = real_analogue_inner_mc(f, f, samples=5000, seed=9)
    b = real_analogue_inner_mc(f, f, samples=5000, seed=9)
    assert a == b


def test_chop():
    assert chop(2.5) == 1 and chop(-0.1) == 0 and chop(0.3) == 0.3


def test_chop_defect():
    assert chop_defect(QFunction.constant(3, 2, 0.5), samples=10_000).value == 0.0
    d = dictator(3, 1, 1, 0)
    est = chop_defect(d, samples=10 ** 6, seed=2)
    assert est.value > 4 * est.stderr > 0
    assert est.value <= real_analogue_norm(d)


# --- bound reports --------------------------------------------------------------


def test_constants_under_almost3():
    c = QFunction.constant(3, 3, 1 / 3)
    T = gadget_operator("almost3")
    lam = lambda_by_double_integral(0.5, 1 / 3, 1 / 3)
    rep = mo_bound_report(c, c, T, k=3, delta=0.05, epsilon=0.0)
    assert rep.inner == pytest.approx(1 / 9)
    assert rep.violating_coords == []
    assert rep.verdict == HOLD
    assert rep.upper == pytest.approx(lam, abs=1e-9)
    assert rep.margin == pytest.approx(lam - 1 / 9, abs=1e-9)


def test_dictators_flagged():
    d = dictator(3, 3, 1, 0)
    rep = mo_bound_report(d, d, gadget_operator("almost3"), k=3, delta=0.1, epsilon=0.05)
    assert rep.violating_coords == [1]
    assert rep.verdict == VIOLATED_HYPOTHESIS


def test_fish_constants():
    c = QFunction.constant(3, 4, 0.5)
    rep = mo_bound_report(c, c, gadget_operator("alpha"), k=2, delta=0.05, epsilon=0.01,
                          fish=True)
    assert rep.inner == pytest.approx(0.25)
    assert rep.verdict == HOLD


def test_fish_flags_pairs():
    T = gadget_operator("alpha")
    d1, d2 = dictator(3, 4, 1, 0), dictator(3, 4, 2, 0)
    assert mo_bound_report(d1, d1, T, 2, 0.1, 0.05, fish=True).violating_coords == [(1, 1, 1)]
    assert mo_bound_report(d1, d2, T, 2, 0.1, 0.05, fish=True).violating_coords == [(1, 1, 2)]
    assert mo_bound_report(d2, d1, T, 2, 0.1, 0.05, fish=True).violating_coords == [(1, 2, 1)]
    # (2i, 2i) is not among the checked pairs
    rep = mo_bound_report(d2, d2, T, 2, 0.1, 0.05, fish=True)
    assert rep.violating_coords == []


def test_fish_needs_uniform_pairs():
    from hcs.operators import identity_op
    c = QFunction.constant(3, 2, 0.5)
    with pytest.raises(InvalidParameter):
        mo_bound_report(c, c, identity_op(9), 1, 0.1, 0.1, fish=True)


def test_bound_report_rejects_out_of_range():
    f = QFunction.constant(3, 1, 1.5)
    with pytest.raises(InvalidParameter):
        mo_bound_report(f, f, gadget_operator("almost3"), 1, 0.1, 0.1)


def test_report_serialisation():
    c = QFunction.constant(3, 2, 0.5)
    rep = mo_bound_report(c, c, gadget_operator("almost3"), 2, 0.1, 0.05)
    assert set(rep.to_dict()) >= set(BoundReport.CSV_FIELDS)
    text = reports_to_csv([rep], [("name", ["const"])])
    assert text.splitlines()[0].startswith("name,inner")
    assert len(text.splitlines()) == 2
