import math

import numpy as np
import pytest
from scipy import stats

from hnspread.copula import IndependenceCopula, PlackettCopula, fundamental_copulas
from hnspread.errors import DomainError, UnsupportedOperation
from hnspread.fourier import marginal_from_garch
from hnspread.garch import GarchParams, MarketContext, long_run_variance, risk_neutralize
from hnspread.pricing import (SpreadOption, d1, d2, d3, price_double_integral,
                              price_monte_carlo, price_single_integral)

R_STEP = 1e-4
BRENT = GarchParams(9.124e-33, 7.081e-6, 0.914, 96.505, -0.418)
WTI = GarchParams(2.845e-4, 7.155e-6, 0.175, 0.161, -0.522)
LADDER = (0.0, 2.5, 5.0, 7.5, 10.0)


def law_for(p, s0, n=90, h=None):
    h = long_run_variance(p) if h is None else h
    return marginal_from_garch(risk_neutralize(p), MarketContext(s0, R_STEP, h), n)


def gaussian_law(var, s0, n=90):
    """Risk-neutral law of a constant-variance asset."""
    p = GarchParams(var, 0.0, 0.0, 0.0, -0.5, "risk-neutral")
    return marginal_from_garch(p, MarketContext(s0, R_STEP, var), n)


@pytest.fixture(scope="module")
def laws():
    return law_for(BRENT, 60.0), law_for(WTI, 55.0)


@pytest.fixture(scope="module")
def same_law():
    return law_for(GarchParams(1e-6, 5e-6, 0.8, 100.0, 0.0), 60.0, h=1e-4)


def opt(k, s1=60.0, s2=55.0, n=90):
    return SpreadOption(s1, s2, k, n, R_STEP)


# --- contract --------------------------------------------------------------------------

def test_option_validation():
    for bad in [(0, 1, 0, 1), (1, -1, 0, 1), (1, 1, -0.1, 1), (1, 1, 0, 0)]:
        with pytest.raises(DomainError):
            SpreadOption(*bad)
    assert opt(0).discount == pytest.approx(math.exp(-90 * R_STEP))


# --- integration limits ---------------------------------------------------------------

def test_limits_symmetric_reduction(same_law):
    o = opt(0.0, 60.0, 60.0)
    v = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(d1(v, same_law, same_law, o), v, atol=1e-9)
    np.testing.assert_allclose(d2(v, same_law, same_law, o), v, atol=1e-9)
    assert d3(same_law, o) == 0.0
    assert d1(1 - 1e-12, same_law, same_law, o) == pytest.approx(1.0, abs=1e-9)


def test_d1_compositional(laws):
    law1, law2 = laws
    o = opt(5.0)
    for v in (0.2, 0.5, 0.8):
        x2 = law2.quantile(v)
        ref = law1.cdf(math.log((o.s2_0 * math.exp(x2) + o.strike) / o.s1_0))
        assert d1(v, law1, law2, o) == pytest.approx(ref, abs=1e-10)


def test_d2_domain(laws):
    law1, law2 = laws
    o = opt(60.0)
    lo = d3(law1, o)
    assert 0 < lo < 1
    with pytest.raises(DomainError):
        d2(lo / 2, law1, law2, o)
    assert 0 <= d2(0.5 * (1 + lo), law1, law2, o) <= 1


def test_d3_hopeless_strike(laws):
    law1, _ = laws
    o = opt(60.0 * math.exp(law1.x_hi) + 1)
    assert d3(law1, o) == pytest.approx(1.0)


# --- prices ------------------------------------------------------------------------------

def test_hopeless_strike_prices_zero(laws):
    law1, law2 = laws
    o = opt(1e4)
    c = PlackettCopula(50.52)
    assert price_single_integral(law1, law2, c, o).price == 0.0
    assert price_double_integral(law1, law2, c, o, N=500).price == 0.0
    mc = price_monte_carlo(law1, law2, c, o, M=1000)
    assert (mc.price, mc.ci_low, mc.ci_high) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("theta", [0.1, 1.0, 50.52])
def test_single_equals_double(laws, theta):
    law1, law2 = laws
    c = PlackettCopula(theta)
    for k in LADDER:
        s = price_single_integral(law1, law2, c, opt(k), N=5000).price
        d = price_double_integral(law1, law2, c, opt(k), N=5000).price
        assert abs(s - d) < 1e-3


def test_single_inside_mc_interval(laws):
    law1, law2 = laws
    c = PlackettCopula(50.52)
    o = opt(5.0)
    s = price_single_integral(law1, law2, c, o).price
    mc = price_monte_carlo(law1, law2, c, o, M=100_000, seed=17)
    assert mc.ci_low <= s <= mc.ci_high
    assert mc.ci_low <= mc.price <= mc.ci_high


def test_price_decreasing_in_strike(laws):
    law1, law2 = laws
    c = PlackettCopula(5.0)
    prices = [price_single_integral(law1, law2, c, opt(k)).price for k in np.linspace(0, 20, 21)]
    assert np.all(np.diff(prices) <= 1e-12)
    assert all(p >= 0 for p in prices)


def test_convergence_in_n(laws):
    law1, law2 = laws
    c = PlackettCopula(50.52)
    for k in LADDER:
        p5 = price_single_integral(law1, law2, c, opt(k), N=5000).price
        p10 = price_single_integral(law1, law2, c, opt(k), N=10_000).price
        assert abs(p5 - p10) < 1e-3


def test_comonotone_limit(same_law):
    o = opt(0.0, 60.0, 60.0)
    price = price_single_integral(same_law, same_law, PlackettCopula(1e6), o).price
    assert 0 <= price < 0.01 * 60.0


def test_degenerate_second_asset_gives_black_scholes():
    var1, n = 2e-4, 90
    law1 = gaussian_law(var1, 60.0, n)
    law2 = gaussian_law(1e-14, 40.0, n)
    k = 15.0
    o = opt(k, 60.0, 40.0, n)
    # d2(u) is a step function when asset 2 is degenerate, so the midpoint error in I1 is O(1/N)
    price = price_single_integral(law1, law2, IndependenceCopula(), o, N=100_000).price
    double = price_double_integral(law1, law2, IndependenceCopula(), o, N=5000).price
    # asset 2 finishes at its forward, so the spread call is a vanilla call on asset 1
    strike = k + 40.0 * math.exp(R_STEP * n)
    sd = math.sqrt(var1 * n)
    d_plus = (math.log(60.0 / strike) + R_STEP * n + sd * sd / 2) / sd
    bs = 60.0 * stats.norm.cdf(d_plus) - strike * o.discount * stats.norm.cdf(d_plus - sd)
    assert price == pytest.approx(bs, abs=1e-3)
    assert double == pytest.approx(bs, abs=1e-3)


def test_independent_gaussian_marginals_vs_bivariate_normal_mc():
    var1, var2, n = 2e-4, 3e-4, 60
    law1, law2 = gaussian_law(var1, 50.0, n), gaussian_law(var2, 45.0, n)
    o = opt(3.0, 50.0, 45.0, n)
    price = price_double_integral(law1, law2, PlackettCopula(1.0), o, N=2000).price
    rng = np.random.default_rng(99)
    z = rng.standard_normal((1_000_000, 2))
    x1 = n * (R_STEP - var1 / 2) + math.sqrt(n * var1) * z[:, 0]
    x2 = n * (R_STEP - var2 / 2) + math.sqrt(n * var2) * z[:, 1]
    pay = o.discount * np.maximum(50.0 * np.exp(x1) - 45.0 * np.exp(x2) - 3.0, 0.0)
    half = 1.96 * pay.std(ddof=1) / math.sqrt(pay.size)
    assert abs(price - pay.mean()) <= half


def test_mc_deterministic_and_batch_keyed(laws):
    law1, law2 = laws
    c = PlackettCopula(3.0)
    a = price_monte_carlo(law1, law2, c, opt(2.5), M=5000, seed=4)
    b = price_monte_carlo(law1, law2, c, opt(2.5), M=5000, seed=4)
    assert (a.price, a.ci_low, a.ci_high, a.seed) == (b.price, b.ci_low, b.ci_high, b.seed)
    other = price_monte_carlo(law1, law2, c, opt(2.5), M=5000, seed=5)
    assert other.price != a.price


def test_non_smooth_copula_rejected(laws):
    law1, law2 = laws
    for name in ("M", "W"):
        c = fundamental_copulas()[name]
        with pytest.raises(UnsupportedOperation):
            price_single_integral(law1, law2, c, opt(0))
        with pytest.raises(UnsupportedOperation):
            price_double_integral(law1, law2, c, opt(0), N=100)
        with pytest.raises(UnsupportedOperation):
            price_monte_carlo(law1, law2, c, opt(0), M=100)


def test_resolution_bounds(laws):
    law1, law2 = laws
    c = PlackettCopula(2.0)
    with pytest.raises(DomainError):
        price_single_integral(law1, law2, c, opt(0), N=5)
    with pytest.raises(DomainError):
        price_double_integral(law1, law2, c, opt(0), N=5)
    with pytest.raises(DomainError):
        price_monte_carlo(law1, law2, c, opt(0), M=50)


def test_forward_mismatch_detected(laws):
    law1, law2 = laws
    wrong_rate = SpreadOption(60.0, 55.0, 0.0, 90, 5e-4)
    with pytest.raises(DomainError):
        price_single_integral(law1, law2, PlackettCopula(2.0), wrong_rate)


def test_report_record(laws):
    law1, law2 = laws
    rep = price_monte_carlo(law1, law2, PlackettCopula(2.0), opt(0), M=1000, seed=3)
    d = rep.to_dict()
    assert set(d) == {"price", "method", "N_or_M", "elapsed_seconds", "ci_low", "ci_high", "seed"}
    assert d["method"] == "monte_carlo" and d["N_or_M"] == 1000 and d["seed"] == 3
    s = price_single_integral(law1, law2, PlackettCopula(2.0), opt(0), N=100).to_dict()
    assert s["ci_low"] is None and s["N_or_M"] == 100
