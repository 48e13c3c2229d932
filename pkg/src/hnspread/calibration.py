"""Maximum-likelihood calibration of HN-GARCH(1,1) to daily log-returns."""
from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import optimize

from .errors import DataError, DomainError, InsufficientDataError
from .garch import GarchParams, long_run_variance

logger = logging.getLogger(__name__)

PARAM_NAMES = ("omega", "alpha", "beta", "gamma", "lambda")
MIN_FIT_LENGTH = 30
TRADING_DAYS = 252


@dataclass(frozen=True, eq=False)
class PriceSeries:
    dates: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        prices = np.asarray(self.prices, dtype=float)
        if dates.shape != prices.shape or dates.ndim != 1:
            raise DataError("dates and prices must be 1-D and of equal length")
        if prices.size == 0:
            raise DataError("empty price series")
        if np.any(~np.isfinite(prices)) or np.any(prices <= 0):
            raise DataError("prices must be finite and positive")
        if np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise DataError("dates must be strictly ascending")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)

    def __len__(self):
        return self.prices.size

    def log_returns(self, r_step: float = 0.0) -> "ReturnSeries":
        return ReturnSeries(self.dates[1:], np.diff(np.log(self.prices)), r_step)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Log-returns indexed by the date at the end of each step."""

    dates: np.ndarray | None
    returns: np.ndarray
    r_step: float = 0.0

    def __post_init__(self):
        returns = np.asarray(self.returns, dtype=float)
        if returns.ndim != 1:
            raise DataError("returns must be 1-D")
        if not np.all(np.isfinite(returns)):
            raise DataError("returns must be finite")
        object.__setattr__(self, "returns", returns)
        if self.dates is not None:
            dates = np.asarray(self.dates, dtype="datetime64[D]")
            if dates.shape != returns.shape:
                raise DataError("dates and returns differ in length")
            if np.any(np.diff(dates) <= np.timedelta64(0, "D")):
                raise DataError("dates must be strictly ascending")
            object.__setattr__(self, "dates", dates)

    def __len__(self):
        return self.returns.size


@dataclass
class MleResult:
    params: GarchParams
    h_init: float
    loglik: float
    converged: bool
    iterations: int
    n_obs: int
    std_errors: dict = field(default_factory=dict)
    starts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        """Record laid out like a parameter table: estimate and standard error per parameter."""
        est = self.params.as_dict()
        return {
            "estimates": {k: est[k] for k in PARAM_NAMES},
            "std_errors": {k: _json_float(self.std_errors.get(k)) for k in PARAM_NAMES},
            "persistence": self.params.persistence,
            "annualized_vol": _json_float(_safe_annualized(self.params)),
            "loglik": self.loglik,
            "h_init": self.h_init,
            "n_obs": self.n_obs,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _json_float(x):
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def _safe_annualized(p):
    try:
        return annualized_vol(p)
    except DomainError:
        return None


@numba.njit(cache=True)
def _loglik(omega, alpha, beta, gamma, lam, R, r, h0):
    h = h0
    total = 0.0
    log2pi = math.log(2.0 * math.pi)
    for t in range(R.size):
        if not (h > 0.0) or not math.isfinite(h):
            return -np.inf
        e = R[t] - r - lam * h
        total -= 0.5 * (log2pi + math.log(h) + e * e / h)
        z = e / math.sqrt(h)
        d = z - gamma * math.sqrt(h)
        h = omega + beta * h + alpha * d * d
    return total


def log_likelihood(p: GarchParams, series: ReturnSeries, h_init: float) -> float:
    """Gaussian conditional log-likelihood; ``-inf`` when the variance path leaves (0, inf)."""
    if not h_init > 0:
        raise DomainError("h_init must be positive")
    return float(_loglik(p.omega, p.alpha, p.beta, p.gamma, p.lam,
                         series.returns, series.r_step, h_init))


def _to_natural(x):
    return np.array([math.exp(x[0]), math.exp(x[1]), math.exp(x[2]), x[3], x[4]])


def _to_work(theta):
    tiny = 1e-300
    return np.array([math.log(max(theta[0], tiny)), math.log(max(theta[1], tiny)),
                     math.log(max(theta[2], tiny)), theta[3], theta[4]])


def _default_starts(var: float) -> list[np.ndarray]:
    """Starting points in natural units for sample variance ``var``."""
    starts = []
    # moderate persistence 0.9 split as beta 0.8 + alpha gamma^2 0.1
    a = 0.05 * var
    starts.append(np.array([0.05 * var, a, 0.8, math.sqrt(0.1 / a), 0.0]))
    # high persistence, near-zero omega, strong leverage
    scale = var / 3.5e-4
    a = 7e-6 * scale
    starts.append(np.array([1e-3 * var, a, 0.9, math.sqrt(0.07 / a), -0.4]))
    # weak persistence, variance carried by omega
    starts.append(np.array([0.8 * var, 0.02 * var, 0.2, 0.2 / math.sqrt(var), -0.5]))
    return starts


def mle_fit(series: ReturnSeries, r_step: float | None = None, init: GarchParams | None = None,
            max_restarts: int = 8, with_std_errors: bool = True) -> MleResult:
    """Maximize the log-likelihood over (omega, alpha, beta, gamma, lambda).

    omega, alpha and beta are optimized on a log scale so they stay
    positive.  Every start runs Nelder-Mead, restarted from its own optimum
    until the log-likelihood stops improving; the best start wins.
    """
    if len(series) < MIN_FIT_LENGTH:
        raise InsufficientDataError(f"need at least {MIN_FIT_LENGTH} returns, got {len(series)}")
    if r_step is not None:
        series = ReturnSeries(series.dates, series.returns, r_step)
    R = series.returns
    r = series.r_step
    h0 = float(np.var(R))
    if not h0 > 0:
        raise DataError("returns have zero variance")
    n = R.size

    def objective(x):
        if np.any(x[:3] > 700.0):
            return 1e10
        th = _to_natural(x)
        ll = _loglik(th[0], th[1], th[2], th[3], th[4], R, r, h0)
        return -ll / n if math.isfinite(ll) else 1e10

    starts = _default_starts(h0)
    if init is not None:
        starts.insert(0, np.array([init.omega, init.alpha, init.beta, init.gamma, init.lam]))

    best_x, best_f, total_iter = None, math.inf, 0
    start_lls = []
    any_success = False
    for s in starts:
        x = _to_work(s)
        f_start = objective(x)
        start_lls.append(-f_start * n if f_start < 1e10 else -math.inf)
        f = f_start
        for _ in range(max_restarts):
            res = optimize.minimize(objective, x, method="Nelder-Mead",
                                    options={"maxiter": 20000, "maxfev": 40000, "xatol": 1e-10,
                                             "fatol": 1e-14, "adaptive": True})
            total_iter += int(res.nit)
            improved = f - res.fun
            if res.fun <= f:
                x, f = res.x, res.fun
            any_success |= bool(res.success)
            if improved * n < 1e-9:
                break
        logger.debug("start %s -> loglik %.6f", s, -f * n)
        if f < best_f or (f == best_f and tuple(x) < tuple(best_x)):
            best_x, best_f = x, f

    theta = _to_natural(best_x)
    ll = -best_f * n
    converged = bool(any_success and math.isfinite(ll) and best_f < 1e10
                     and ll >= max(start_lls) - 1e-9)
    with _quiet():
        params = GarchParams(*map(float, theta))
    result = MleResult(params, h0, ll, converged, total_iter, n, starts=start_lls)
    if with_std_errors and converged:
        result.std_errors = std_errors(result, series)
    return result


class _quiet:
    def __enter__(self):
        import warnings
        self._cm = warnings.catch_warnings()
        self._cm.__enter__()
        warnings.simplefilter("ignore", RuntimeWarning)

    def __exit__(self, *exc):
        return self._cm.__exit__(*exc)


def _hessian(f, x, steps):
    k = x.size
    H = np.empty((k, k))
    f0 = f(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = steps[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / steps[i] ** 2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = steps[j]
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej)
                                 + f(x - ei - ej)) / (4 * steps[i] * steps[j])
    return H


def std_errors(result: MleResult, series: ReturnSeries, names=PARAM_NAMES,
               rel_step: float = 1e-4) -> dict:
    """Standard errors from the inverse numerical Hessian of the negative log-likelihood.

    Only the parameters in ``names`` are perturbed; the rest stay fixed at
    the estimate.  Parameters along a flat or non-convex direction of the
    Hessian are reported as ``nan``.
    """
    if not result.converged:
        raise DomainError("standard errors need a converged fit")
    full = np.array([result.params.omega, result.params.alpha, result.params.beta,
                     result.params.gamma, result.params.lam])
    idx = [PARAM_NAMES.index(nm) for nm in names]
    R, r, h0 = series.returns, series.r_step, result.h_init

    def negll(sub):
        th = full.copy()
        th[idx] = sub
        ll = _loglik(th[0], th[1], th[2], th[3], th[4], R, r, h0)
        return -ll

    x = full[idx]
    steps = rel_step * np.where(x != 0, np.abs(x), 1.0)
    H = _hessian(negll, x, steps)
    out = {nm: math.nan for nm in names}
    bad = ~np.all(np.isfinite(H), axis=1)
    H = np.where(np.isfinite(H), H, 0.0)
    scale = np.max(np.abs(H), axis=1)
    ref = np.max(scale) if scale.size else 0.0
    flat = bad | (scale <= 1e-12 * max(ref, 1e-300)) | (np.diag(H) <= 0)
    keep = np.flatnonzero(~flat)
    if keep.size == 0:
        return out
    sub = H[np.ix_(keep, keep)]
    # rescale before inverting; parameter magnitudes differ by many orders
    d = 1.0 / np.sqrt(np.diag(sub))
    scaled = sub * d[:, None] * d[None, :]
    eig = np.linalg.eigvalsh(scaled)
    if eig.min() <= 1e-12 * eig.max():
        logger.warning("Hessian is not positive definite; standard errors unavailable")
        return out
    cov = np.linalg.inv(scaled) * d[:, None] * d[None, :]
    for k, i in enumerate(keep):
        out[names[i]] = float(math.sqrt(cov[k, k]))
    return out


def annualized_vol(p: GarchParams, periods: int = TRADING_DAYS) -> float:
    """sqrt(periods * long-run variance)."""
    return math.sqrt(periods * long_run_variance(p))


def load_price_csv(path) -> PriceSeries:
    """Read a ``date,price`` CSV with ISO-8601 dates, one row per trading day."""
    dates, prices = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "price"]:
            raise DataError(f"{path}: line 1: expected header 'date,price', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                dates.append(dt.date.fromisoformat(row[0].strip()))
                prices.append(float(row[1]))
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from None
    if not dates:
        raise DataError(f"{path}: no data rows")
    try:
        return PriceSeries(np.array(dates, dtype="datetime64[D]"), np.array(prices))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def align_series(a: PriceSeries, b: PriceSeries, r_step: float = 0.0,
                 min_common: int = MIN_FIT_LENGTH) -> tuple[ReturnSeries, ReturnSeries]:
    """Inner-join two price series on date and take log-returns between joined dates."""
    common, ia, ib = np.intersect1d(a.dates, b.dates, return_indices=True)
    if common.size < min_common:
        raise InsufficientDataError(
            f"only {common.size} common dates; at least {min_common} required")
    ra = np.diff(np.log(a.prices[ia]))
    rb = np.diff(np.log(b.prices[ib]))
    return ReturnSeries(common[1:], ra, r_step), ReturnSeries(common[1:], rb, r_step)
