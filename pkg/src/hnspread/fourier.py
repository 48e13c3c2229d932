"""Marginal laws of the log-return recovered from a characteristic function.

Density and distribution function come from the Gil-Pelaez integrals

    f(x) = 1/pi * int_0^inf Re[exp(-iux) phi(u)] du
    F(x) = 1/2 - 1/pi * int_0^inf Re[exp(-iux) phi(u) / (iu)] du

truncated at ``u_max`` and evaluated with the midpoint rule.  With a
frequency step ``du`` the midpoint sums are exact for the law wrapped onto a
circle of circumference ``2*pi/du``, so the step is tied to the width of the
spatial grid rather than to a convergence heuristic.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from . import garch
from .errors import DomainError, InversionError, SingularRecursionError

logger = logging.getLogger(__name__)

CF = Callable[[np.ndarray], np.ndarray]

# elements per (x, u) block when evaluating the inversion sums
_BLOCK = 1 << 20


@dataclass(frozen=True)
class InversionConfig:
    u_max: float
    n_freq: int
    x_lo: float
    x_hi: float
    n_grid: int = 2048

    def __post_init__(self):
        if not self.u_max > 0:
            raise DomainError("u_max must be positive")
        if self.n_freq < 16:
            raise DomainError("n_freq must be at least 16")
        if not self.x_lo < self.x_hi:
            raise DomainError("x_lo must be below x_hi")
        if self.n_grid < 64:
            raise DomainError("n_grid must be at least 64")

    @property
    def du(self) -> float:
        return self.u_max / self.n_freq

    def nodes(self) -> np.ndarray:
        """Midpoint frequency nodes (j - 1/2) * du, j = 1..n_freq."""
        return (np.arange(self.n_freq) + 0.5) * self.du


def _eval_cf(cf: CF, u: np.ndarray) -> np.ndarray:
    phi = np.asarray(cf(u), dtype=complex)
    if not np.all(np.isfinite(phi)):
        raise InversionError("characteristic function is not finite on [0, u_max]")
    return phi


def _inversion_sums(x, u, phi, du, want_pdf=True):
    """Return (cdf, pdf) for the points ``x`` from pre-evaluated ``phi(u)``."""
    if u.size <= _HORNER_MAX:
        return _inversion_horner(x, u, phi, du, want_pdf)
    return _inversion_blocks(x, u, phi, du, want_pdf)


# nodes are equispaced, u_j = (j + 1/2) du, so exp(-i u_j x) = exp(-i du x / 2) * w**j with
# w = exp(-i du x); Horner in w avoids a cos/sin per (x, u) pair
_HORNER_MAX = 2048


def _inversion_horner(x, u, phi, du, want_pdf):
    x = np.asarray(x, dtype=float)
    w = np.exp(-1j * du * x)
    coef_cdf = phi / u
    acc_c = np.full(x.shape, coef_cdf[-1], dtype=complex)
    acc_p = np.full(x.shape, phi[-1], dtype=complex) if want_pdf else None
    for j in range(u.size - 2, -1, -1):
        acc_c *= w
        acc_c += coef_cdf[j]
        if want_pdf:
            acc_p *= w
            acc_p += phi[j]
    shift = np.exp(-0.5j * du * x)
    cdf = 0.5 - du / math.pi * (shift * acc_c).imag
    pdf = du / math.pi * (shift * acc_p).real if want_pdf else None
    return cdf, pdf


def _inversion_blocks(x, u, phi, du, want_pdf):
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    cdf = np.empty_like(flat)
    pdf = np.empty_like(flat) if want_pdf else None
    re, im = phi.real, phi.imag
    im_over_u = im / u
    re_over_u = re / u
    step = max(1, _BLOCK // u.size)
    for start in range(0, flat.size, step):
        xs = flat[start:start + step]
        ux = np.multiply.outer(xs, u)
        c, s = np.cos(ux), np.sin(ux)
        # Im[exp(-iux) phi] / u and Re[exp(-iux) phi]
        cdf[start:start + step] = 0.5 - du / math.pi * (c @ im_over_u - s @ re_over_u)
        if want_pdf:
            pdf[start:start + step] = du / math.pi * (c @ re + s @ im)
    cdf = cdf.reshape(x.shape)
    if want_pdf:
        pdf = pdf.reshape(x.shape)
    return cdf, pdf


def _clamp_pdf(pdf, scale=1.0):
    # tolerance is relative to the peak for very concentrated laws
    if np.any(pdf < -1e-8 * max(scale, 1.0)):
        raise InversionError(f"negative density {pdf.min():.3g} beyond quadrature tolerance")
    return np.maximum(pdf, 0.0)


def density_at(cf: CF, x, cfg: InversionConfig):
    """Density of the law with characteristic function ``cf`` at ``x``."""
    u = cfg.nodes()
    _, pdf = _inversion_sums(x, u, _eval_cf(cf, u), cfg.du)
    return _clamp_pdf(pdf)


def cdf_at(cf: CF, x, cfg: InversionConfig):
    """Distribution function of the law with characteristic function ``cf`` at ``x``."""
    u = cfg.nodes()
    cdf, _ = _inversion_sums(x, u, _eval_cf(cf, u), cfg.du, want_pdf=False)
    return np.clip(cdf, 0.0, 1.0)


def cumulants_from_cf(cf: CF, eps: float = 1e-4):
    """Mean and variance from central differences of log(cf) at the origin."""
    k_plus, k_minus = np.log(_eval_cf(cf, np.array([eps, -eps])))
    mean = (k_plus - k_minus).imag / (2 * eps)
    var = -(k_plus + k_minus).real / eps**2
    return float(mean), float(var)


def auto_config(cf: CF, mean: float | None = None, var: float | None = None, *,
                n_sd: float = 12.0, tol: float = 1e-12, n_freq_max: int = 1 << 16,
                n_grid: int = 2048) -> InversionConfig:
    """Choose grid bounds and frequency truncation for ``cf``.

    The spatial grid spans ``mean +/- n_sd`` standard deviations.  The
    frequency step is ``pi / (x_hi - x_lo)`` so the wrap-around period is
    twice the grid width, and ``u_max`` is the first node where
    ``|cf(u)| < tol`` (capped at ``n_freq_max`` nodes).
    """
    if mean is None or var is None:
        mean, var = cumulants_from_cf(cf)
    if not var > 0:
        raise InversionError(f"non-positive variance estimate {var!r}")
    sd = math.sqrt(var)
    x_lo, x_hi = mean - n_sd * sd, mean + n_sd * sd
    du = math.pi / (x_hi - x_lo)

    n_freq = None
    chunk = 512
    for start in range(0, n_freq_max, chunk):
        u = (np.arange(start, min(start + chunk, n_freq_max)) + 0.5) * du
        small = np.flatnonzero(np.abs(_eval_cf(cf, u)) < tol)
        if small.size:
            n_freq = start + int(small[0]) + 1
            break
    if n_freq is None:
        logger.warning("|cf| did not fall below %g within %d nodes", tol, n_freq_max)
        n_freq = n_freq_max
    n_freq = max(n_freq, 16)
    return InversionConfig(u_max=n_freq * du, n_freq=n_freq, x_lo=x_lo, x_hi=x_hi, n_grid=n_grid)


@dataclass(frozen=True, eq=False)
class MarginalLaw:
    """Tabulated conditional law of a log-return plus direct Fourier evaluators.

    ``cdf`` and ``pdf`` evaluate the inversion sums directly (not by
    interpolating the table); the table brackets the quantile search.
    """

    x_grid: np.ndarray
    cdf_values: np.ndarray
    pdf_values: np.ndarray
    freqs: np.ndarray
    phi: np.ndarray
    config: InversionConfig
    repair: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("x_grid", "cdf_values", "pdf_values", "freqs", "phi"):
            getattr(self, name).setflags(write=False)

    @property
    def x_lo(self) -> float:
        return float(self.x_grid[0])

    @property
    def x_hi(self) -> float:
        return float(self.x_grid[-1])

    def _direct(self, x, want_pdf=True):
        return _inversion_sums(x, self.freqs, self.phi, self.config.du, want_pdf)

    def cdf(self, x):
        """Distribution function; 0 below the grid, 1 above it."""
        x = np.asarray(x, dtype=float)
        out = np.where(x > self.x_hi, 1.0, 0.0)
        inside = (x >= self.x_lo) & (x <= self.x_hi)
        if np.any(inside):
            val, _ = self._direct(x[inside], want_pdf=False)
            out[inside] = np.clip(val, 0.0, 1.0)
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = (x >= self.x_lo) & (x <= self.x_hi)
        if np.any(inside):
            _, val = self._direct(x[inside])
            out[inside] = np.maximum(val, 0.0)
        return out if out.ndim else float(out)

    def quantile(self, p, tol: float = 1e-13, max_iter: int = 100):
        return quantile(self, p, tol=tol, max_iter=max_iter)

    def to_csv(self, path) -> None:
        """Write the ``(x, pdf, cdf)`` table."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "pdf", "cdf"])
            for row in zip(self.x_grid, self.pdf_values, self.cdf_values):
                writer.writerow([repr(float(v)) for v in row])


def build_marginal(cf: CF, cfg: InversionConfig, metadata: dict | None = None,
                   max_repair: float = 1e-4) -> MarginalLaw:
    """Tabulate the law of ``cf`` on the grid of ``cfg``."""
    u = cfg.nodes()
    phi = _eval_cf(cf, u)
    x = np.linspace(cfg.x_lo, cfg.x_hi, cfg.n_grid)
    raw_cdf, pdf = _inversion_sums(x, u, phi, cfg.du)
    pdf = _clamp_pdf(pdf, float(np.max(pdf)))
    cdf = np.maximum.accumulate(np.clip(raw_cdf, 0.0, 1.0))
    repair = float(np.max(np.abs(cdf - np.clip(raw_cdf, 0.0, 1.0))))
    if repair > max_repair:
        raise InversionError(f"monotone repair of {repair:.3g} exceeds {max_repair:g}")
    if repair > 0:
        logger.debug("monotone repair of %.3g applied to tabulated CDF", repair)
    if cdf[0] > 1e-3 or cdf[-1] < 0.999:
        raise InversionError("grid does not cover the mass of the distribution")
    mass = float(trapezoid(pdf, x))
    if not 0.995 <= mass <= 1.005:
        raise InversionError(f"tabulated density integrates to {mass:.6f}")
    return MarginalLaw(x, cdf, pdf, u, phi, cfg, repair, dict(metadata or {}))


def quantile(law: MarginalLaw, p, tol: float = 1e-13, max_iter: int = 100):
    """Inverse of the law's distribution function.

    The table gives a bracketing cell and a linear first guess, then a
    safeguarded Newton iteration on the directly evaluated CDF refines it.
    Probabilities outside the tabulated range clamp to the grid edges.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise DomainError("quantile probabilities must lie in (0, 1)")
    flat = p_arr.ravel()
    xg, cg = law.x_grid, law.cdf_values
    idx = np.searchsorted(cg, flat, side="left")
    out = np.empty_like(flat)
    low_clip = idx == 0
    high_clip = idx >= xg.size
    if np.any(low_clip | high_clip):
        logger.debug("quantile clamped at grid edge for %d probabilities",
                     int(np.sum(low_clip | high_clip)))
    out[low_clip] = xg[0]
    out[high_clip] = xg[-1]

    act = np.flatnonzero(~(low_clip | high_clip))
    if act.size:
        i = idx[act]
        lo, hi = xg[i - 1].copy(), xg[i].copy()
        c_lo, c_hi = cg[i - 1], cg[i]
        target = flat[act]
        w = np.where(c_hi > c_lo, (target - c_lo) / np.where(c_hi > c_lo, c_hi - c_lo, 1.0), 0.5)
        x = lo + w * (hi - lo)
        live = np.arange(act.size)
        for _ in range(max_iter):
            F, f = law._direct(x[live])
            err = F - target[live]
            done = (np.abs(err) < tol) | (hi[live] - lo[live] <= 4e-16 * (1 + np.abs(x[live])))
            below = err < 0
            lo[live] = np.where(below, x[live], lo[live])
            hi[live] = np.where(below, hi[live], x[live])
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = x[live] - err / f
            ok = (f > 0) & (newton > lo[live]) & (newton < hi[live])
            step = np.where(ok, newton, 0.5 * (lo[live] + hi[live]))
            x[live] = np.where(done, x[live], step)
            live = live[~done]
            if live.size == 0:
                break
        out[act] = x
    out = out.reshape(p_arr.shape)
    return out if out.ndim else float(out)


def marginal_from_garch(p: garch.GarchParams, m: garch.MarketContext, n_steps: int, *,
                        n_sd: float = 12.0, tol: float = 1e-12, n_grid: int = 2048,
                        n_freq: int | None = None, u_max: float | None = None) -> MarginalLaw:
    """Law of log(S_T / S_0) after ``n_steps`` under the measure of ``p``.

    ``n_freq`` / ``u_max`` override the automatic frequency truncation; the
    grid bounds always come from the cumulants of the real MGF.
    """
    def cf(u):
        return garch.log_return_cf(p, m, u, n_steps)

    mean, var = garch.log_return_cumulants(p, m, n_steps)
    cfg = auto_config(cf, mean, var, n_sd=n_sd, tol=tol, n_grid=n_grid)
    if n_freq is not None or u_max is not None:
        cfg = InversionConfig(u_max=u_max or cfg.u_max, n_freq=n_freq or cfg.n_freq,
                              x_lo=cfg.x_lo, x_hi=cfg.x_hi, n_grid=n_grid)
    try:
        mgf_one = float(np.real(garch.log_price_mgf(p, m, 1.0, n_steps))) / m.s0
    except SingularRecursionError:
        mgf_one = None
    meta = {
        "params": p.as_dict(),
        "s0": m.s0,
        "r_step": m.r_step,
        "h_next": m.h_next,
        "n_steps": n_steps,
        "mean": mean,
        "var": var,
        "mgf_one": mgf_one,
    }
    return build_marginal(cf, cfg, meta)
