"""Sample concordance measures and the median-quadrant Plackett estimator."""
from __future__ import annotations

import numpy as np
from scipy import stats

from .errors import DegenerateEstimateError, DomainError

# above this many observations Kendall's sum is recovered from an O(n log n) routine
_BRUTE_FORCE_MAX = 2000


def _pairs(sample):
    arr = np.asarray(sample, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("sample must have shape (n, 2)")
    return arr[:, 0], arr[:, 1]


def kendall_sign_sum(x, y) -> float:
    """sum_{i<j} sign((x_j - x_i) * (y_j - y_i)) by direct enumeration."""
    total = 0
    n = len(x)
    for i in range(n - 1):
        total += int(np.sum(np.sign((x[i + 1:] - x[i]) * (y[i + 1:] - y[i]))))
    return float(total)


def _tie_pairs(a):
    _, counts = np.unique(a, return_counts=True)
    return float(np.sum(counts * (counts - 1) / 2))


def empirical_kendall(sample) -> float:
    """Sample Kendall's tau: (concordant - discordant) / (n (n - 1) / 2); ties count zero."""
    x, y = _pairs(sample)
    n = x.size
    if n < 2:
        raise DomainError("Kendall's tau needs at least two observations")
    n0 = n * (n - 1) / 2
    if n <= _BRUTE_FORCE_MAX:
        return kendall_sign_sum(x, y) / n0
    # scipy returns tau-b; undo its tie normalisation to get the plain sign sum
    tau_b = stats.kendalltau(x, y).statistic
    denom = np.sqrt((n0 - _tie_pairs(x)) * (n0 - _tie_pairs(y)))
    return float(tau_b * denom / n0)


def empirical_spearman(sample) -> float:
    """Sample Spearman's rho from average ranks."""
    x, y = _pairs(sample)
    n = x.size
    if n < 2:
        raise DomainError("Spearman's rho needs at least two observations")
    mid = (n + 1) / 2
    rx = stats.rankdata(x) - mid
    ry = stats.rankdata(y) - mid
    denom = np.sqrt(np.sum(rx * rx)) * np.sqrt(np.sum(ry * ry))
    if denom == 0:
        raise DomainError("zero rank variance: Spearman's rho is undefined")
    return float(np.sum(rx * ry) / denom)


def median_quadrant_frequency(sample) -> float:
    """Share of points with both coordinates at or below their sample medians."""
    x, y = _pairs(sample)
    return float(np.mean((x <= np.median(x)) & (y <= np.median(y))))


def theta_from_quadrant_frequency(a: float) -> float:
    if not 0 < a < 0.5:
        raise DegenerateEstimateError(
            f"median-quadrant frequency {a:.4g} gives a degenerate cross-product ratio")
    return a * a / (0.5 - a) ** 2


def estimate_theta_median_quadrant(sample) -> float:
    """Plackett theta from the cross-product ratio of the median quadrants.

    With the quadrants cut at the sample medians the four cell frequencies
    are a, 0.5 - a, 0.5 - a, a, so theta* = a**2 / (0.5 - a)**2 where a is
    the share of points not exceeding either median (ties count as below).
    """
    x, _ = _pairs(sample)
    if x.size < 4:
        raise DomainError("median-quadrant estimator needs at least four observations")
    return theta_from_quadrant_frequency(median_quadrant_frequency(sample))
