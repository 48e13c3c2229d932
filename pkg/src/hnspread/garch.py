"""Heston-Nandi affine GARCH dynamics.

Time is measured in steps of one trading day; every rate and variance here is
per step.  The log-price evolves as

    log S_t = log S_{t-1} + r + lam * h_t + sqrt(h_t) * z_t
    h_{t+1} = omega + beta * h_t + alpha * (z_t - gamma * sqrt(h_t))**2

and the moment generating function of log S_T is exponentially affine in the
next-step variance, ``S_t**u * exp(A + B * h_{t+1})``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .errors import DomainError, SingularRecursionError, UnsupportedOperation

PHYSICAL = "physical"
RISK_NEUTRAL = "risk-neutral"

Measure = Literal["physical", "risk-neutral"]

__all__ = [
    "GarchParams",
    "GarchPQParams",
    "MarketContext",
    "risk_neutralize",
    "variance_step",
    "h_from_return",
    "long_run_variance",
    "expected_next_variance",
    "spot_variance_covariance",
    "mgf_coefficients",
    "log_price_mgf",
    "log_price_cf",
    "log_return_cf",
    "log_return_cumulants",
    "simulate_paths",
    "simulate_path",
]


@dataclass(frozen=True)
class GarchParams:
    """HN-GARCH(1,1) parameters.

    Parameters
    ----------
    omega, alpha, beta : float
        Variance offset, ARCH and GARCH coefficients (all non-negative).
    gamma : float
        Asymmetry of the variance response to shocks.
    lam : float
        Risk premium per unit of variance.
    measure : {"physical", "risk-neutral"}
        Probability measure the parameters are expressed under.
    """

    omega: float
    alpha: float
    beta: float
    gamma: float
    lam: float
    measure: Measure = PHYSICAL

    def __post_init__(self):
        for name in ("omega", "alpha", "beta"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and non-negative, got {value!r}")
        if not (np.isfinite(self.gamma) and np.isfinite(self.lam)):
            raise DomainError("gamma and lam must be finite")
        if self.measure not in (PHYSICAL, RISK_NEUTRAL):
            raise DomainError(f"unknown measure {self.measure!r}")
        if self.measure == RISK_NEUTRAL and self.lam != -0.5:
            raise DomainError("risk-neutral parameters must have lam == -0.5")
        if not self.stationary:
            warnings.warn(
                f"non-stationary GARCH parameters (persistence {self.persistence:.4g} >= 1)",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def persistence(self) -> float:
        return self.beta + self.alpha * self.gamma**2

    @property
    def stationary(self) -> bool:
        return self.persistence < 1.0

    def as_dict(self) -> dict:
        return {
            "omega": self.omega,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "lambda": self.lam,
            "measure": self.measure,
        }


@dataclass(frozen=True)
class GarchPQParams:
    """General HN-GARCH(p,q) parameters; used for simulation only."""

    omega: float
    beta: tuple[float, ...]
    alpha: tuple[float, ...]
    gamma: float
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if not self.beta or not self.alpha:
            raise DomainError("beta and alpha lists must be non-empty")
        if self.omega < 0 or min(self.beta) < 0 or min(self.alpha) < 0:
            raise DomainError("omega, beta_j and alpha_j must be non-negative")

    @property
    def p(self) -> int:
        return len(self.beta)

    @property
    def q(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class MarketContext:
    """Spot, per-step risk-free rate and the already-known next-step variance."""

    s0: float
    r_step: float = 0.0
    h_next: float = field(default=1e-4)

    def __post_init__(self):
        if not self.s0 > 0:
            raise DomainError(f"s0 must be positive, got {self.s0!r}")
        if not self.h_next > 0:
            raise DomainError(f"h_next must be positive, got {self.h_next!r}")


def _as_11(p: GarchParams | GarchPQParams) -> GarchParams:
    if isinstance(p, GarchParams):
        return p
    if p.p == 1 and p.q == 1:
        return GarchParams(p.omega, p.alpha[0], p.beta[0], p.gamma, p.lam)
    raise UnsupportedOperation("the MGF recursion is only available for GARCH(1,1)")


def risk_neutralize(p: GarchParams) -> GarchParams:
    """Map physical parameters to the risk-neutral ones (gamma* = gamma + lam + 1/2, lam* = -1/2)."""
    if p.measure == RISK_NEUTRAL:
        raise DomainError("parameters are already risk-neutral")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return replace(p, gamma=p.gamma + p.lam + 0.5, lam=-0.5, measure=RISK_NEUTRAL)


def _check_h(h):
    if np.any(np.asarray(h) <= 0):
        raise DomainError("variance must be strictly positive")


def variance_step(p: GarchParams, h, z):
    """Next conditional variance given the current variance ``h`` and shock ``z``."""
    _check_h(h)
    return p.omega + p.beta * h + p.alpha * (z - p.gamma * np.sqrt(h)) ** 2


def h_from_return(p: GarchParams, h, R, r_step: float = 0.0):
    """Next conditional variance filtered from the observed log-return ``R``."""
    _check_h(h)
    return p.omega + p.beta * h + p.alpha * (R - r_step - p.lam * h - p.gamma * h) ** 2 / h


def long_run_variance(p: GarchParams) -> float:
    if not p.stationary:
        raise DomainError(f"persistence {p.persistence:.6g} >= 1: no stationary variance level")
    return (p.omega + p.alpha) / (1.0 - p.persistence)


def expected_next_variance(p: GarchParams, h):
    _check_h(h)
    return p.omega + p.alpha + p.persistence * h


def spot_variance_covariance(p: GarchParams, h):
    """Cov(h_{t+1}, log S_t) given h_t."""
    _check_h(h)
    return -2.0 * p.alpha * p.gamma * h


def mgf_coefficients(p: GarchParams | GarchPQParams, u, n_steps: int, r_step: float = 0.0,
                     tol: float = 1e-12):
    """Iterate the affine recursion backward from A_T = B_T = 0.

    Parameters
    ----------
    p : GarchParams
        Parameters under the measure of interest.
    u : complex or array_like
        MGF exponent(s); pass ``1j * w`` for characteristic-function frequencies.
    n_steps : int
        Number of steps between valuation and maturity.
    r_step : float
        Per-step risk-free rate.

    Returns
    -------
    A, B : ndarray
        Coefficients with the broadcast shape of ``u``.
    """
    p = _as_11(p)
    if n_steps < 0:
        raise DomainError("n_steps must be non-negative")
    u = np.asarray(u)
    dtype = np.result_type(u.dtype, np.float64)
    A = np.zeros(u.shape, dtype=dtype)
    B = np.zeros(u.shape, dtype=dtype)
    a, b, g, lam, w = p.alpha, p.beta, p.gamma, p.lam, p.omega
    # u(lam + g) - g^2/2 + (u - g)^2 / (2q) rearranged to avoid cancelling g^2 terms
    lin = u * lam + 0.5 * u * u
    sq = (u - g) ** 2
    for _ in range(n_steps):
        q = 1.0 - 2.0 * a * B
        if np.any((np.abs(q) < tol) | (np.real(q) <= 0)):
            raise SingularRecursionError(
                "1 - 2*alpha*B left the right half-plane; u is outside the analyticity strip"
            )
        A = A + u * r_step + B * w - 0.5 * np.log1p(-2.0 * a * B)
        B = lin + b * B + a * B * sq / q
    return A, B


def log_price_mgf(p: GarchParams, m: MarketContext, u, n_steps: int):
    """E[S_T**u] for real ``u`` (the MGF of log S_T)."""
    A, B = mgf_coefficients(p, u, n_steps, m.r_step)
    return m.s0 ** np.asarray(u) * np.exp(A + B * m.h_next)


def log_price_cf(p: GarchParams, m: MarketContext, u, n_steps: int):
    """Characteristic function of log S_T at real frequencies ``u``."""
    iu = 1j * np.asarray(u, dtype=float)
    A, B = mgf_coefficients(p, iu, n_steps, m.r_step)
    return np.exp(iu * np.log(m.s0) + A + B * m.h_next)


def log_return_cf(p: GarchParams, m: MarketContext, u, n_steps: int):
    """Characteristic function of the log-return log(S_T / S_0)."""
    iu = 1j * np.asarray(u, dtype=float)
    A, B = mgf_coefficients(p, iu, n_steps, m.r_step)
    return np.exp(A + B * m.h_next)


def log_return_cumulants(p: GarchParams, m: MarketContext, n_steps: int, eps: float = 1e-4):
    """Mean and variance of the log-return from central differences of the real log-MGF at 0."""
    u = np.array([-eps, 0.0, eps])
    A, B = mgf_coefficients(p, u, n_steps, m.r_step)
    k = np.real(A + B * m.h_next)
    mean = (k[2] - k[0]) / (2 * eps)
    var = (k[2] - 2 * k[1] + k[0]) / eps**2
    return float(mean), float(var)


def simulate_paths(p: GarchParams | GarchPQParams, m: MarketContext, n_steps: int,
                   n_paths: int = 1, seed=None):
    """Simulate log-price and variance paths.

    Returns
    -------
    log_prices : ndarray, shape (n_paths, n_steps + 1)
        ``log_prices[:, 0] == log(s0)``.
    variances : ndarray, shape (n_paths, n_steps)
        ``variances[:, 0] == m.h_next``; entry t drives the increment into column t + 1.

    Notes
    -----
    For GARCH(p,q) the lags before the first step are filled with
    ``h = m.h_next`` and ``z = 0``.
    """
    if n_steps < 1:
        raise DomainError("n_steps must be at least 1")
    if isinstance(p, GarchParams):
        betas, alphas = (p.beta,), (p.alpha,)
    else:
        betas, alphas = p.beta, p.alpha
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_paths, n_steps))

    lags = max(len(betas), len(alphas))
    h_hist = [np.full(n_paths, m.h_next) for _ in range(lags)]   # most recent first
    z_hist = [np.zeros(n_paths) for _ in range(lags)]

    log_s = np.empty((n_paths, n_steps + 1))
    log_s[:, 0] = np.log(m.s0)
    h = np.empty((n_paths, n_steps))
    h_t = np.full(n_paths, m.h_next)
    for t in range(n_steps):
        h[:, t] = h_t
        sd = np.sqrt(h_t)
        log_s[:, t + 1] = log_s[:, t] + m.r_step + p.lam * h_t + sd * z[:, t]
        h_hist.insert(0, h_t)
        z_hist.insert(0, z[:, t])
        h_hist.pop()
        z_hist.pop()
        h_t = p.omega + sum(b * h_hist[j] for j, b in enumerate(betas))
        h_t = h_t + sum(a * (z_hist[j] - p.gamma * np.sqrt(h_hist[j])) ** 2
                        for j, a in enumerate(alphas))
        # omega == 0 with a zero shock term can underflow; keep variance positive
        h_t = np.maximum(h_t, np.finfo(float).tiny)
    return log_s, h


def simulate_path(p: GarchParams | GarchPQParams, m: MarketContext, n_steps: int, seed=None):
    """Single-path convenience wrapper around :func:`simulate_paths`."""
    log_s, h = simulate_paths(p, m, n_steps, 1, seed)
    return log_s[0], h[0]
