"""European spread call pricing: single integral, double integral and Monte Carlo.

With F1, F2 the risk-neutral laws of the two log-returns over the option's
life and C the copula joining them, the discounted expectation of
(S1_T - S2_T - K)^+ reduces to three one-dimensional integrals over [0, 1]:

    I1 = int_{d3}^1 S1 exp(F1^-1(u)) dC/du(u, d2(u)) du
    I2 = E[S2_T] - int_0^1 S2 exp(F2^-1(v)) dC/dv(d1(v), v) dv
    I3 = K (1 - int_0^1 dC/dv(d1(v), v) dv)

    price = exp(-r n) (I1 - I2 - I3)

where d1(v) = F1(ln((S2 exp(F2^-1(v)) + K) / S1)),
d2(u) = F2(ln((S1 exp(F1^-1(u)) - K) / S2)) and d3 = F1(ln(K / S1)).
All integrals use the midpoint rule with N nodes.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .copula import Copula
from .errors import DomainError, UnsupportedOperation
from .fourier import MarginalLaw

logger = logging.getLogger(__name__)

METHODS = ("single", "double", "monte_carlo")

_P_LO = np.finfo(float).tiny
_P_HI = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class SpreadOption:
    """Contract terms; ``n_steps`` is the maturity in trading days."""

    s1_0: float
    s2_0: float
    strike: float
    n_steps: int
    r_step: float = 0.0

    def __post_init__(self):
        if not (self.s1_0 > 0 and self.s2_0 > 0):
            raise DomainError("spot prices must be positive")
        if not self.strike >= 0:
            raise DomainError("strike must be non-negative")
        if self.n_steps < 1:
            raise DomainError("n_steps must be at least 1")

    @property
    def discount(self) -> float:
        return math.exp(-self.r_step * self.n_steps)


@dataclass(frozen=True)
class PriceReport:
    price: float
    method: str
    resolution: int
    elapsed: float
    ci_low: float | None = None
    ci_high: float | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["N_or_M"] = d.pop("resolution")
        d["elapsed_seconds"] = d.pop("elapsed")
        return d


def _require_smooth(c: Copula):
    if not c.has_density:
        raise UnsupportedOperation(f"{c.name} copula is not twice differentiable")


def d1(v, law1: MarginalLaw, law2: MarginalLaw, opt: SpreadOption):
    """F1 at the log-return that puts asset 1 exactly at S2_T + K, given V = v."""
    x2 = law2.quantile(v)
    return law1.cdf(np.log((opt.s2_0 * np.exp(x2) + opt.strike) / opt.s1_0))


def d3(law1: MarginalLaw, opt: SpreadOption) -> float:
    """F1(ln(K / S1)); zero for a zero strike."""
    if opt.strike == 0:
        return 0.0
    return float(law1.cdf(math.log(opt.strike / opt.s1_0)))


def _d2_unchecked(x1, law2, opt):
    y = opt.s1_0 * np.exp(x1) - opt.strike
    with np.errstate(divide="ignore"):
        arg = np.log(np.where(y > 0, y, 0.0) / opt.s2_0)
    return np.where(y > 0, law2.cdf(np.where(y > 0, arg, 0.0)), 0.0)


def d2(u, law1: MarginalLaw, law2: MarginalLaw, opt: SpreadOption):
    """F2 at the log-return that puts asset 2 exactly at S1_T - K, given U = u > d3."""
    u_arr = np.asarray(u, dtype=float)
    x1 = law1.quantile(u_arr)
    if np.any(opt.s1_0 * np.exp(x1) - opt.strike <= 0):
        raise DomainError("d2 requires u > d3 (asset 1 must finish above the strike)")
    out = _d2_unchecked(x1, law2, opt)
    return float(out) if out.ndim == 0 else out


def _check_forward(law2: MarginalLaw, opt: SpreadOption) -> float:
    """E[S2_T] by the martingale identity, checked against the law's MGF at 1."""
    forward = opt.s2_0 * math.exp(opt.r_step * opt.n_steps)
    mgf_one = law2.metadata.get("mgf_one")
    if mgf_one is not None:
        from_mgf = opt.s2_0 * mgf_one
        if abs(from_mgf - forward) > 1e-6 * forward:
            raise DomainError(
                f"law of asset 2 is not a martingale at the option's rate: "
                f"MGF(1) gives {from_mgf:.8g}, s2*exp(r n) = {forward:.8g}")
    return forward


def _floor(price: float) -> float:
    if price < -1e-6:
        logger.warning("negative price %.3g from quadrature error floored at zero", price)
    return max(price, 0.0)


def price_single_integral(law1: MarginalLaw, law2: MarginalLaw, c: Copula,
                          opt: SpreadOption, N: int = 5000) -> PriceReport:
    """Spread call price from the one-dimensional integrals I1, I2, I3."""
    _require_smooth(c)
    if N < 10:
        raise DomainError("N must be at least 10")
    t0 = time.perf_counter()
    K, s1, s2 = opt.strike, opt.s1_0, opt.s2_0
    forward2 = _check_forward(law2, opt)
    lo = d3(law1, opt)
    mid = (np.arange(N) + 0.5) / N
    if lo >= 1.0 - 1.0 / N:
        return PriceReport(0.0, "single", N, time.perf_counter() - t0)

    # I1 on its own midpoint grid over (d3, 1)
    u = lo + (1.0 - lo) * mid
    x1 = law1.quantile(np.clip(u, _P_LO, _P_HI))
    i1 = (1.0 - lo) / N * np.sum(s1 * np.exp(x1) * c.du(u, _d2_unchecked(x1, law2, opt)))

    v = mid
    x2 = law2.quantile(v)
    d1v = law1.cdf(np.log((s2 * np.exp(x2) + K) / s1))
    dv = c.dv(d1v, v)
    i2 = forward2 - np.sum(s2 * np.exp(x2) * dv) / N
    i3 = K * (1.0 - np.sum(dv) / N)

    price = _floor(opt.discount * (i1 - i2 - i3))
    return PriceReport(price, "single", N, time.perf_counter() - t0)


def price_double_integral(law1: MarginalLaw, law2: MarginalLaw, c: Copula,
                          opt: SpreadOption, N: int = 5000,
                          block_elems: int = 1 << 22) -> PriceReport:
    """Spread call price by a midpoint double sum of payoff times copula density."""
    _require_smooth(c)
    if N < 10:
        raise DomainError("N must be at least 10")
    t0 = time.perf_counter()
    nodes = (np.arange(N) + 0.5) / N
    s1T = opt.s1_0 * np.exp(law1.quantile(nodes))
    s2T_plus_k = opt.s2_0 * np.exp(law2.quantile(nodes)) + opt.strike
    rows = max(1, block_elems // N)
    total = 0.0
    for start in range(0, N, rows):
        sl = slice(start, start + rows)
        payoff = s1T[sl, None] - s2T_plus_k[None, :]
        hit = payoff > 0
        if not hit.any():
            continue
        dens = c.density(nodes[sl, None], nodes[None, :])
        total += float(np.sum(np.where(hit, payoff * dens, 0.0)))
    price = _floor(opt.discount * total / (N * N))
    return PriceReport(price, "double", N, time.perf_counter() - t0)


def price_monte_carlo(law1: MarginalLaw, law2: MarginalLaw, c: Copula, opt: SpreadOption,
                      M: int = 100_000, seed: int = 0, batch_size: int = 1 << 14) -> PriceReport:
    """Monte Carlo price with a 95% confidence interval.

    Each batch ``b`` draws from a generator keyed by ``(seed, b)``, so the
    result depends only on ``(seed, M, batch_size)``.
    """
    if M < 100:
        raise DomainError("M must be at least 100")
    if not c.has_density:
        raise UnsupportedOperation(f"{c.name} copula does not support conditional sampling")
    t0 = time.perf_counter()
    payoffs = np.empty(M)
    for b, start in enumerate(range(0, M, batch_size)):
        size = min(batch_size, M - start)
        rng = np.random.default_rng([seed, b])
        us = np.clip(rng.random((size, 2)), _P_LO, _P_HI)
        u, s = us[:, 0], us[:, 1]
        x1 = law1.quantile(u)
        v = np.clip(c.conditional_inverse(u, s), _P_LO, _P_HI)
        x2 = law2.quantile(v)
        payoffs[start:start + size] = np.maximum(
            opt.s1_0 * np.exp(x1) - opt.s2_0 * np.exp(x2) - opt.strike, 0.0)
    payoffs *= opt.discount
    price = float(payoffs.mean())
    half = 1.96 * float(payoffs.std(ddof=1)) / math.sqrt(M)
    return PriceReport(price, "monte_carlo", M, time.perf_counter() - t0,
                       ci_low=price - half, ci_high=price + half, seed=seed)
