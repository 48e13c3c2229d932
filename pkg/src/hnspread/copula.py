"""Bivariate copulas: Plackett, the fundamental copulas and Archimedean families.

Every copula exposes ``cdf``, ``density``, the partial derivatives ``du``
(= dC/du, the law of V given U = u) and ``dv``, and ``conditional_inverse``
which solves ``du(u, v) = s`` for ``v``.  All methods broadcast over numpy
arrays and return python floats for scalar input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError, UnsupportedOperation

__all__ = [
    "Copula",
    "IndependenceCopula",
    "ComonotonicCopula",
    "CountermonotonicCopula",
    "PlackettCopula",
    "ArchimedeanGenerator",
    "ArchimedeanCopula",
    "plackett_cdf",
    "plackett_density",
    "plackett_du",
    "plackett_dv",
    "plackett_conditional_inverse",
    "archimedean_cdf",
    "fundamental_copulas",
    "spearman_from_theta",
    "spearman_numeric",
    "kendall_numeric",
    "sample",
]


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _prep(u, v):
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    if np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)):
        raise DomainError("copula arguments must lie in [0, 1]")
    return u, v


def _bisect_conditional(du, u, s, max_iter=200):
    """Solve du(u, v) = s for v in [0, 1] by vectorized bisection."""
    lo = np.zeros_like(s)
    hi = np.ones_like(s)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = du(u, mid) < s
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-15):
            return 0.5 * (lo + hi)
    raise NumericalError(f"conditional inverse did not converge in {max_iter} iterations")


class Copula:
    """Base class; subclasses implement the underscored kernels on arrays."""

    name = "copula"
    has_density = True

    def cdf(self, u, v):
        u, v = _prep(u, v)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            c = self._cdf(u, v)
        c = np.where((u == 0) | (v == 0), 0.0, c)
        c = np.where(u == 1, v, c)
        c = np.where(v == 1, u, c)
        return _out(c)

    def density(self, u, v):
        if not self.has_density:
            raise UnsupportedOperation(f"{self.name} is not absolutely continuous")
        u, v = _prep(u, v)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return _out(self._density(u, v))

    def du(self, u, v):
        """dC/du: conditional distribution of V given U = u, evaluated at v."""
        if not self.has_density:
            raise UnsupportedOperation(f"{self.name} has no partial derivatives")
        u, v = _prep(u, v)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            d = self._du(u, v)
        d = np.where(v == 0, 0.0, np.where(v == 1, 1.0, d))
        return _out(np.clip(d, 0.0, 1.0))

    def dv(self, u, v):
        """dC/dv: conditional distribution of U given V = v, evaluated at u."""
        if not self.has_density:
            raise UnsupportedOperation(f"{self.name} has no partial derivatives")
        u, v = _prep(u, v)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            d = self._dv(u, v)
        d = np.where(u == 0, 0.0, np.where(u == 1, 1.0, d))
        return _out(np.clip(d, 0.0, 1.0))

    def conditional_inverse(self, u, s):
        """The v solving du(u, v) = s."""
        if not self.has_density:
            raise UnsupportedOperation(f"{self.name} does not support conditional sampling")
        u, s = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(s, dtype=float))
        if np.any((u <= 0) | (u >= 1) | (s <= 0) | (s >= 1)):
            raise DomainError("conditional_inverse needs u and s in (0, 1)")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return _out(self._conditional_inverse(u, s))

    def _conditional_inverse(self, u, s):
        return _bisect_conditional(self._du_safe, u, s)

    def _du_safe(self, u, v):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            d = self._du(u, v)
        return np.where(v <= 0, 0.0, np.where(v >= 1, 1.0, d))

    def sample(self, n: int, seed=None) -> np.ndarray:
        return sample(self, n, seed)

    def __repr__(self):
        return f"{type(self).__name__}()"


class IndependenceCopula(Copula):
    name = "independence"

    def _cdf(self, u, v):
        return u * v

    def _density(self, u, v):
        return np.ones_like(u)

    def _du(self, u, v):
        return v

    def _dv(self, u, v):
        return u

    def _conditional_inverse(self, u, s):
        return s.copy()


class ComonotonicCopula(Copula):
    """Upper Frechet-Hoeffding bound M(u, v) = min(u, v)."""

    name = "comonotonic"
    has_density = False

    def _cdf(self, u, v):
        return np.minimum(u, v)


class CountermonotonicCopula(Copula):
    """Lower Frechet-Hoeffding bound W(u, v) = max(u + v - 1, 0)."""

    name = "countermonotonic"
    has_density = False

    def _cdf(self, u, v):
        return np.maximum(u + v - 1.0, 0.0)


def fundamental_copulas() -> dict[str, Copula]:
    return {"M": ComonotonicCopula(), "W": CountermonotonicCopula(), "Pi": IndependenceCopula()}


# --- Plackett -------------------------------------------------------------

def _check_theta(theta):
    if not (np.isfinite(theta) and theta > 0):
        raise DomainError(f"Plackett theta must be positive and finite, got {theta!r}")


def _plackett_disc(theta, u, v):
    """S = 1 + eta (u + v) and the radicand D, both free of cancellation."""
    eta = theta - 1.0
    S = 1.0 + eta * (u + v)
    if eta >= 0:
        D = 1.0 + 2.0 * eta * (u * (1 - v) + v * (1 - u)) + (eta * (u - v)) ** 2
    else:
        D = S * S - 4.0 * u * v * theta * eta
    return S, D


def _plackett_cdf(theta, u, v):
    S, D = _plackett_disc(theta, u, v)
    R = np.sqrt(D)
    # rationalized form when S >= 0, original minus-root form otherwise (then theta < 1)
    S_pos = np.maximum(S, 0.0)
    rational = 2.0 * u * v * theta / (S_pos + R)
    if theta == 1.0:
        return rational
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (S - R) / (2.0 * (theta - 1.0))
    return np.where(S >= 0, rational, direct)


def _plackett_density(theta, u, v):
    _, D = _plackett_disc(theta, u, v)
    return theta * (1.0 + (theta - 1.0) * (u + v - 2.0 * u * v)) / D**1.5


def _plackett_du(theta, u, v):
    _, D = _plackett_disc(theta, u, v)
    return 0.5 * (1.0 - (1.0 - 2.0 * v + (theta - 1.0) * (u - v)) / np.sqrt(D))


def _plackett_inverse(theta, u, s):
    a = s * (1.0 - s)
    b = theta + a * (theta - 1.0) ** 2
    c = 2.0 * a * (u * theta**2 + 1.0 - u) + theta * (1.0 - 2.0 * a)
    d = math.sqrt(theta) * np.sqrt(theta + 4.0 * a * u * (1.0 - u) * (1.0 - theta) ** 2)
    return (c - (1.0 - 2.0 * s) * d) / (2.0 * b)


class PlackettCopula(Copula):
    """Plackett copula with constant cross-product ratio ``theta``.

    ``theta < 1`` gives negative dependence, ``theta = 1`` independence and
    ``theta > 1`` positive dependence; the family spans W (theta -> 0) to
    M (theta -> inf).
    """

    name = "plackett"

    def __init__(self, theta: float, closed_form_inverse: bool = True):
        _check_theta(theta)
        self.theta = float(theta)
        self.closed_form_inverse = closed_form_inverse

    def __repr__(self):
        return f"PlackettCopula(theta={self.theta!r})"

    def _cdf(self, u, v):
        return _plackett_cdf(self.theta, u, v)

    def _density(self, u, v):
        return _plackett_density(self.theta, u, v)

    def _du(self, u, v):
        return _plackett_du(self.theta, u, v)

    def _dv(self, u, v):
        return _plackett_du(self.theta, v, u)

    def _conditional_inverse(self, u, s):
        if not self.closed_form_inverse:
            return _bisect_conditional(self._du_safe, u, s)
        return np.clip(_plackett_inverse(self.theta, u, s), 0.0, 1.0)


def plackett_cdf(theta, u, v):
    return PlackettCopula(theta).cdf(u, v)


def plackett_density(theta, u, v):
    return PlackettCopula(theta).density(u, v)


def plackett_du(theta, u, v):
    return PlackettCopula(theta).du(u, v)


def plackett_dv(theta, u, v):
    return PlackettCopula(theta).dv(u, v)


def plackett_conditional_inverse(theta, u, s, closed_form: bool = True):
    return PlackettCopula(theta, closed_form_inverse=closed_form).conditional_inverse(u, s)


# --- Archimedean -------------------------------------------------------------

_ARCH_RANGES = {
    "clayton": (0.0, math.inf, False, False),   # (lo, hi, lo inclusive, hi inclusive)
    "gumbel": (1.0, math.inf, True, False),
    "amh": (0.0, 1.0, True, False),
}


@dataclass(frozen=True)
class ArchimedeanGenerator:
    """Generator phi of an Archimedean copula C(u, v) = phi(phi^-1(u) + phi^-1(v)).

    Families and admissible ``theta``: Clayton (0, inf), Gumbel [1, inf),
    Ali-Mikhail-Haq [0, 1).
    """

    family: str
    theta: float

    def __post_init__(self):
        fam = self.family.lower()
        object.__setattr__(self, "family", fam)
        if fam not in _ARCH_RANGES:
            raise DomainError(f"unknown Archimedean family {self.family!r}")
        lo, hi, lo_in, hi_in = _ARCH_RANGES[fam]
        t = self.theta
        ok = (t > lo or (lo_in and t == lo)) and (t < hi or (hi_in and t == hi))
        if not (np.isfinite(t) and ok):
            raise DomainError(f"theta={t!r} outside the admissible range for {fam}")

    def phi(self, x):
        t = self.theta
        if self.family == "clayton":
            return np.exp(-np.log1p(x) / t)
        if self.family == "gumbel":
            return np.exp(-(x ** (1.0 / t)))
        e = np.exp(-x)
        return (1.0 - t) * e / (1.0 - t * e)

    def phi_inv(self, y):
        t = self.theta
        if self.family == "clayton":
            return np.expm1(-t * np.log(y))
        if self.family == "gumbel":
            return (-np.log(y)) ** t
        return np.log((1.0 - t) / y + t)

    def dphi(self, x):
        t = self.theta
        if self.family == "clayton":
            return -(1.0 / t) * np.exp(-(1.0 / t + 1.0) * np.log1p(x))
        if self.family == "gumbel":
            a = 1.0 / t
            return -a * x ** (a - 1.0) * np.exp(-(x**a))
        e = np.exp(-x)
        return -(1.0 - t) * e / (1.0 - t * e) ** 2

    def d2phi(self, x):
        t = self.theta
        if self.family == "clayton":
            return (1.0 / t) * (1.0 / t + 1.0) * np.exp(-(1.0 / t + 2.0) * np.log1p(x))
        if self.family == "gumbel":
            a = 1.0 / t
            return np.exp(-(x**a)) * (a * a * x ** (2 * a - 2) - a * (a - 1.0) * x ** (a - 2))
        e = np.exp(-x)
        return (1.0 - t) * e * (1.0 + t * e) / (1.0 - t * e) ** 3

    def dphi_inv(self, y):
        t = self.theta
        if self.family == "clayton":
            return -t * y ** (-t - 1.0)
        if self.family == "gumbel":
            return -t * (-np.log(y)) ** (t - 1.0) / y
        return -(1.0 - t) / (y * (1.0 - t + t * y))


class ArchimedeanCopula(Copula):
    def __init__(self, generator: ArchimedeanGenerator | str, theta: float | None = None):
        if isinstance(generator, str):
            generator = ArchimedeanGenerator(generator, theta)
        self.generator = generator
        self.name = generator.family

    def __repr__(self):
        g = self.generator
        return f"ArchimedeanCopula({g.family!r}, theta={g.theta!r})"

    def _arg(self, u, v):
        g = self.generator
        return g.phi_inv(u) + g.phi_inv(v)

    def _cdf(self, u, v):
        return self.generator.phi(self._arg(u, v))

    def _density(self, u, v):
        g = self.generator
        return g.d2phi(self._arg(u, v)) * g.dphi_inv(u) * g.dphi_inv(v)

    def _du(self, u, v):
        g = self.generator
        return g.dphi(self._arg(u, v)) * g.dphi_inv(u)

    def _dv(self, u, v):
        g = self.generator
        return g.dphi(self._arg(u, v)) * g.dphi_inv(v)

    def _conditional_inverse(self, u, s):
        g = self.generator
        if g.family == "clayton":
            t = g.theta
            w = np.expm1(-t / (1.0 + t) * np.log(s)) * u ** (-t)
            return np.exp(-np.log1p(w) / t)
        return _bisect_conditional(self._du_safe, u, s)


def archimedean_cdf(gen: ArchimedeanGenerator, u, v):
    return ArchimedeanCopula(gen).cdf(u, v)


# --- concordance of a copula -----------------------------------------------------

def spearman_from_theta(theta):
    """Spearman's rho of the Plackett copula as a function of ``theta``."""
    t = np.asarray(theta, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("theta must be positive")
    e = t - 1.0
    near = np.abs(e) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = (t + 1.0) / e - 2.0 * t * np.log(t) / e**2
    series = e / 3.0 - e**2 / 6.0 + e**3 / 10.0
    return _out(np.where(near, series, closed))


def _gauss_legendre(panels: int, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (0.5 * h[:, None] * w[None, :]).ravel()
    return nodes, weights


def spearman_numeric(c: Copula, panels: int = 128, order: int = 8) -> float:
    """12 * int int C(u, v) du dv - 3 by composite Gauss-Legendre quadrature."""
    x, w = _gauss_legendre(panels, order)
    total = 0.0
    for xi, wi in zip(x, w):
        total += wi * float(np.dot(w, c.cdf(np.full_like(x, xi), x)))
    return 12.0 * total - 3.0


def kendall_numeric(c: Copula, panels: int = 32, order: int = 8, method: str = "quadrature",
                    n_samples: int = 200_000, seed=0):
    """Kendall's tau = 4 E[C(U, V)] - 1.

    Returns
    -------
    tau, abserr : float
        The estimate and an error estimate (difference against half the
        quadrature resolution, or the Monte Carlo standard error).
    """
    if not c.has_density:
        raise UnsupportedOperation(f"{c.name} has no density; Kendall's tau needs one")
    if method == "sampling":
        uv = sample(c, n_samples, seed)
        vals = 4.0 * c.cdf(uv[:, 0], uv[:, 1]) - 1.0
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")

    def integrate(pn):
        x, w = _gauss_legendre(pn, order)
        U, V = np.meshgrid(x, x, indexing="ij")
        f = c.cdf(U, V) * c.density(U, V)
        return float(w @ f @ w)

    fine = integrate(panels)
    coarse = integrate(max(1, panels // 2))
    return 4.0 * fine - 1.0, 4.0 * abs(fine - coarse)


def sample(c: Copula, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` pairs by conditional inversion: U, S uniform, V = (dC/du)^-1(S)."""
    rng = np.random.default_rng(seed)
    us = rng.random((n, 2))
    tiny = np.finfo(float).tiny
    us = np.clip(us, tiny, 1.0 - np.finfo(float).eps / 2)
    v = c.conditional_inverse(us[:, 0], us[:, 1])
    return np.column_stack([us[:, 0], v])
