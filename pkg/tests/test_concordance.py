import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from hnspread.concordance import (empirical_kendall, empirical_spearman,
                                  estimate_theta_median_quadrant, kendall_sign_sum,
                                  median_quadrant_frequency, theta_from_quadrant_frequency)
from hnspread.copula import PlackettCopula, sample
from hnspread.errors import DegenerateEstimateError, DomainError


def brute_force_tau(xy):
    n = len(xy)
    total = sum(np.sign((xy[j, 0] - xy[i, 0]) * (xy[j, 1] - xy[i, 1]))
                for i, j in itertools.combinations(range(n), 2))
    return total / (n * (n - 1) / 2)


def test_kendall_trivial():
    assert empirical_kendall([(1, 1), (2, 2), (3, 3)]) == 1.0
    assert empirical_kendall([(1, 3), (2, 2), (3, 1)]) == -1.0


def test_kendall_equals_pair_enumeration():
    xy = np.random.default_rng(8).normal(size=(50, 2))
    assert empirical_kendall(xy) == brute_force_tau(xy)


def test_kendall_ties_count_zero():
    xy = np.array([(1, 1), (1, 2), (2, 2), (3, 1)], dtype=float)
    assert empirical_kendall(xy) == brute_force_tau(xy)


def test_kendall_large_sample_path_matches_sign_sum():
    rng = np.random.default_rng(3)
    xy = np.round(rng.normal(size=(2500, 2)), 1)   # rounding forces ties
    n = len(xy)
    expected = kendall_sign_sum(xy[:, 0], xy[:, 1]) / (n * (n - 1) / 2)
    assert empirical_kendall(xy) == pytest.approx(expected, abs=1e-12)


def test_kendall_needs_two_points():
    with pytest.raises(DomainError):
        empirical_kendall([(1.0, 2.0)])


def test_spearman_trivial():
    x = np.arange(20.0)
    assert empirical_spearman(np.column_stack([x, x**3])) == pytest.approx(1.0)
    assert empirical_spearman(np.column_stack([x, -x])) == pytest.approx(-1.0)


def test_spearman_equals_rank_pearson():
    xy = np.random.default_rng(9).normal(size=(50, 2))
    rx, ry = stats.rankdata(xy[:, 0]), stats.rankdata(xy[:, 1])
    assert empirical_spearman(xy) == pytest.approx(np.corrcoef(rx, ry)[0, 1], abs=1e-12)


def test_spearman_zero_variance():
    with pytest.raises(DomainError):
        empirical_spearman([(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), min_size=3, max_size=40))
def test_rank_measures_bounded(pairs):
    xy = np.array(pairs, dtype=float)
    tau = empirical_kendall(xy)
    assert -1 <= tau <= 1
    assert tau == pytest.approx(brute_force_tau(xy), abs=1e-12)
    if np.ptp(xy[:, 0]) > 0 and np.ptp(xy[:, 1]) > 0:
        assert -1 - 1e-12 <= empirical_spearman(xy) <= 1 + 1e-12


def test_theta_from_quadrant_frequency():
    assert theta_from_quadrant_frequency(0.25) == pytest.approx(1.0)
    assert theta_from_quadrant_frequency(0.4) == pytest.approx(16.0)
    for a in (0.0, 0.5):
        with pytest.raises(DegenerateEstimateError):
            theta_from_quadrant_frequency(a)


def test_quadrant_frequency_tie_convention():
    # the median point itself counts as below in both coordinates
    xy = np.array([(1, 1), (2, 2), (3, 3), (4, 0), (0, 4)], dtype=float)
    assert median_quadrant_frequency(xy) == pytest.approx(2 / 5)


def test_median_quadrant_recovers_plackett_theta():
    uv = sample(PlackettCopula(50.52), 10_000, seed=505)
    assert estimate_theta_median_quadrant(uv) == pytest.approx(50.52, rel=0.2)


def test_median_quadrant_invariant_to_monotone_maps():
    uv = sample(PlackettCopula(5.0), 2000, seed=1)
    mapped = np.column_stack([stats.norm.ppf(uv[:, 0]), np.exp(uv[:, 1])])
    assert estimate_theta_median_quadrant(mapped) == estimate_theta_median_quadrant(uv)


def test_median_quadrant_comonotone_degenerate():
    x = np.arange(100.0)
    with pytest.raises(DegenerateEstimateError):
        estimate_theta_median_quadrant(np.column_stack([x, x]))


def test_median_quadrant_needs_four_points():
    with pytest.raises(DomainError):
        estimate_theta_median_quadrant([(0, 0), (1, 1), (2, 2)])
