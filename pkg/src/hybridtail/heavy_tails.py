"""Heavy-tailed duration laws described through their hazard function.

Every model exposes the hazard ``Q(u) = -log P{T > u}`` and its first two
derivatives, so tail arithmetic at large ``u`` stays in log space.  The
residual (equilibrium) law with density ``P{T > x} / E{T}`` is available
through :meth:`TailModel.residual`.
"""

from dataclasses import dataclass, field
from functools import cached_property
from enum import Enum
import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from ._numerics import bisect_increasing, tail_integral
from .errors import DomainError

logger = logging.getLogger(__name__)

__all__ = [
    "Kind",
    "SlowlyVarying",
    "TailModel",
    "WeibullT1",
    "Pareto",
    "Exponential",
    "Custom",
    "Deterministic",
    "ResidualModel",
    "StepLaw",
    "ReducedLoadDiagnostic",
    "make_weibull_t1",
    "make_pareto",
    "make_exponential",
    "make_custom",
    "make_deterministic",
    "sample",
    "sample_residual",
    "reduced_load_condition_holds",
    "integrated_tail",
    "shifted_step",
]


class Kind(str, Enum):
    WEIBULL_T1 = "WeibullT1"
    PARETO = "Pareto"
    EXPONENTIAL = "Exponential"
    CUSTOM = "Custom"
    DETERMINISTIC = "Deterministic"


def _fd_step(u):
    return np.maximum(1e-4 * np.abs(u), 1e-6)


@dataclass(frozen=True)
class SlowlyVarying:
    """``L(u) = coef * log(e + u)**gamma``; ``gamma = 0`` is the constant case."""

    coef: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.coef > 0:
            raise DomainError("slowly varying coefficient must be positive")

    @property
    def is_constant(self):
        return self.gamma == 0.0

    def value(self, u):
        if self.is_constant:
            return self.coef * np.ones_like(np.asarray(u, dtype=float))
        return self.coef * np.log(math.e + np.asarray(u, dtype=float)) ** self.gamma

    def d1(self, u):
        u = np.asarray(u, dtype=float)
        if self.is_constant:
            return np.zeros_like(u)
        g = self.gamma
        return self.coef * g * np.log(math.e + u) ** (g - 1.0) / (math.e + u)

    def d2(self, u):
        u = np.asarray(u, dtype=float)
        if self.is_constant:
            return np.zeros_like(u)
        g = self.gamma
        lg = np.log(math.e + u)
        return self.coef * (g * (g - 1.0) * lg ** (g - 2.0) - g * lg ** (g - 1.0)) / (math.e + u) ** 2

    def describe(self):
        if self.is_constant:
            return "const" if self.coef == 1.0 else "const(c=%r)" % self.coef
        if self.coef == 1.0:
            return "log(gamma=%r)" % self.gamma
        return "log(gamma=%r, c=%r)" % (self.gamma, self.coef)


class TailModel:
    """Base class: a positive duration law given by its hazard ``Q``.

    Subclasses provide ``hazard``, ``hazard_rate`` and ``mean``; everything
    else has a generic (possibly numeric) fallback.
    """

    kind: Kind = Kind.CUSTOM

    # -- hazard side ------------------------------------------------------
    def hazard(self, u):
        raise NotImplementedError

    def hazard_rate(self, u):
        u = np.asarray(u, dtype=float)
        h = _fd_step(u)
        return (self.hazard(u + h) - self.hazard(np.maximum(u - h, 0.0))) / (u + h - np.maximum(u - h, 0.0))

    def hazard_rate_deriv(self, u):
        u = np.asarray(u, dtype=float)
        h = _fd_step(u)
        return (self.hazard_rate(u + h) - self.hazard_rate(np.maximum(u - h, 0.0))) / (
            u + h - np.maximum(u - h, 0.0)
        )

    def tail(self, u):
        return np.exp(-self.hazard(u))

    # -- moments / integrals ---------------------------------------------
    @property
    def mean(self):
        raise NotImplementedError

    def log_integrated_tail(self, u):
        """``log int_u^inf P{T > y} dy`` computed without underflow."""
        u = float(u)
        if u < 0:
            return math.log(self.mean - u) if u > -np.inf else np.inf
        q0 = float(self.hazard(u))
        rate = float(self.hazard_rate(u)) if u > 0 else np.nan
        scale = 1.0 / rate if np.isfinite(rate) and rate > 0 else 1.0
        j = tail_integral(lambda s: self.hazard(u + s) - q0, scale)
        return -q0 + math.log(j)

    def integrated_tail(self, u):
        return math.exp(self.log_integrated_tail(u))

    # -- sampling ----------------------------------------------------------
    def quantile(self, p):
        """Return ``u`` with ``P{T > u} = p`` (inverse of the tail)."""
        target = -np.log(np.asarray(p, dtype=float))
        hi = np.ones_like(target)
        while True:
            short = self.hazard(hi) < target
            if not np.any(short):
                break
            hi = np.where(short, hi * 4.0, hi)
        return bisect_increasing(self.hazard, target, 0.0, hi, rtol=1e-12)

    def sample(self, rng, size=None):
        p = rng.random(size)
        # rng.random is in [0, 1); map 0 to the smallest positive double
        p = np.where(p > 0, p, np.nextafter(0.0, 1.0))
        out = self.quantile(p)
        return float(out) if size is None else out

    def residual(self):
        return ResidualModel(self)

    def describe(self):
        return self.kind.value


@dataclass(frozen=True)
class WeibullT1(TailModel):
    """``P{T > u} = exp(-L(u) u**beta)`` with ``0 < beta < 1``."""

    beta: float
    L: SlowlyVarying = field(default_factory=SlowlyVarying)
    kind = Kind.WEIBULL_T1

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError("WeibullT1 requires beta in (0, 1), got %r" % self.beta)

    def hazard(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        return self.L.value(u) * u ** self.beta

    def hazard_rate(self, u):
        u = np.asarray(u, dtype=float)
        b = self.beta
        with np.errstate(divide="ignore"):
            return b * self.L.value(u) * u ** (b - 1.0) + u ** b * self.L.d1(u)

    def hazard_rate_deriv(self, u):
        u = np.asarray(u, dtype=float)
        b = self.beta
        L = self.L
        with np.errstate(divide="ignore"):
            return (
                L.d2(u) * u ** b
                + 2.0 * b * L.d1(u) * u ** (b - 1.0)
                + b * (b - 1.0) * L.value(u) * u ** (b - 2.0)
            )

    @cached_property
    def mean(self):
        if self.L.is_constant:
            return self.L.coef ** (-1.0 / self.beta) * math.gamma(1.0 + 1.0 / self.beta)
        val, _ = integrate.quad(lambda y: math.exp(-float(self.hazard(y))), 0.0, np.inf, epsrel=1e-12, limit=400)
        return val

    def log_integrated_tail(self, u):
        if u < 0:
            return math.log(self.mean - u)
        if self.L.is_constant:
            a = 1.0 / self.beta
            x = self.L.coef * u ** self.beta
            q = special.gammaincc(a, x)
            if q > 1e-280:
                # int_u^inf exp(-c y^b) dy = c^{-1/b} Gamma(1/b) Q(1/b, c u^b) / b
                return math.log(self.mean) + math.log(q)
        return TailModel.log_integrated_tail(self, u)

    def quantile(self, p):
        if self.L.is_constant:
            return (-np.log(np.asarray(p, dtype=float)) / self.L.coef) ** (1.0 / self.beta)
        return TailModel.quantile(self, p)

    def describe(self):
        return "weibull(beta=%r, L=%s)" % (self.beta, self.L.describe())


@dataclass(frozen=True)
class Pareto(TailModel):
    """Lomax form ``P{T > u} = (1 + u/scale)**(-nu)``."""

    nu: float
    scale: float = 1.0
    kind = Kind.PARETO

    def __post_init__(self):
        if not self.nu > 1.0:
            raise DomainError("Pareto requires nu > 1 for a finite mean, got %r" % self.nu)
        if not self.scale > 0:
            raise DomainError("Pareto scale must be positive")

    def hazard(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        return self.nu * np.log1p(u / self.scale)

    def hazard_rate(self, u):
        return self.nu / (self.scale + np.asarray(u, dtype=float))

    def hazard_rate_deriv(self, u):
        return -self.nu / (self.scale + np.asarray(u, dtype=float)) ** 2

    @property
    def mean(self):
        return self.scale / (self.nu - 1.0)

    def log_integrated_tail(self, u):
        if u < 0:
            return math.log(self.mean - u)
        return math.log(self.mean) + (1.0 - self.nu) * math.log1p(u / self.scale)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return self.scale * np.expm1(-np.log(p) / self.nu)

    def describe(self):
        return "pareto(nu=%r, scale=%r)" % (self.nu, self.scale)


@dataclass(frozen=True)
class Exponential(TailModel):
    rate: float = 1.0
    kind = Kind.EXPONENTIAL

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("exponential rate must be positive")

    def hazard(self, u):
        return self.rate * np.maximum(np.asarray(u, dtype=float), 0.0)

    def hazard_rate(self, u):
        return self.rate * np.ones_like(np.asarray(u, dtype=float))

    def hazard_rate_deriv(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    @property
    def mean(self):
        return 1.0 / self.rate

    def log_integrated_tail(self, u):
        if u < 0:
            return math.log(self.mean - u)
        return -self.rate * float(u) - math.log(self.rate)

    def quantile(self, p):
        return -np.log(np.asarray(p, dtype=float)) / self.rate

    def describe(self):
        return "exp(rate=%r)" % self.rate


@dataclass(frozen=True)
class Custom(TailModel):
    """User-supplied hazard ``Q``; derivatives by centred finite differences."""

    hazard_fn: Callable
    mean_value: Optional[float] = None
    name: str = "custom"
    kind = Kind.CUSTOM

    def hazard(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        return np.asarray(self.hazard_fn(u), dtype=float)

    @cached_property
    def mean(self):
        if self.mean_value is not None:
            return self.mean_value
        val, _ = integrate.quad(lambda y: math.exp(-float(self.hazard(y))), 0.0, np.inf, epsrel=1e-12, limit=400)
        return val

    def describe(self):
        return self.name


@dataclass(frozen=True)
class Deterministic(TailModel):
    """Point mass at ``value``; for degenerate test paths only."""

    value: float
    kind = Kind.DETERMINISTIC

    def __post_init__(self):
        if not self.value > 0:
            raise DomainError("deterministic duration must be positive")

    def hazard(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u < self.value, 0.0, np.inf)

    def hazard_rate(self, u):
        raise DomainError("a point mass has no hazard rate")

    @property
    def mean(self):
        return self.value

    def log_integrated_tail(self, u):
        return math.log(self.value - u) if u < self.value else -np.inf

    def quantile(self, p):
        return self.value * np.ones_like(np.asarray(p, dtype=float))

    def describe(self):
        return "const(value=%r)" % self.value


class ResidualModel:
    """Equilibrium law ``P{T^r > x} = int_x^inf P{T > y} dy / E{T}``.

    Closed forms are used for Pareto, exponential, point-mass and
    constant-L Weibull bases; otherwise the tail integral is computed by
    quadrature in log space.
    """

    def __init__(self, base):
        self.base = base
        self._mean = float(base.mean)
        self._log_mean = math.log(self._mean)

    def __repr__(self):
        return "ResidualModel(%r)" % (self.base,)

    def __eq__(self, other):
        return isinstance(other, ResidualModel) and other.base == self.base

    def __hash__(self):
        return hash(("residual", self.base))

    @property
    def kind(self):
        return self.base.kind

    def describe(self):
        return "residual(%s)" % self.base.describe()

    def hazard(self, x):
        x = np.asarray(x, dtype=float)
        b = self.base
        if isinstance(b, Pareto):
            return (b.nu - 1.0) * np.log1p(np.maximum(x, 0.0) / b.scale)
        if isinstance(b, Exponential):
            return b.hazard(x)
        if isinstance(b, Deterministic):
            return -np.log(np.clip(1.0 - np.maximum(x, 0.0) / b.value, 0.0, 1.0))
        vals = [self._log_mean - b.log_integrated_tail(xi) if xi > 0 else 0.0 for xi in np.ravel(x)]
        out = np.asarray(vals, dtype=float).reshape(x.shape)
        return out if out.ndim else float(out)

    def tail(self, x):
        return np.exp(-self.hazard(x))

    def hazard_rate(self, x):
        """``tail(x) / int_x^inf tail``, i.e. the residual hazard rate."""
        x = np.asarray(x, dtype=float)
        b = self.base
        if isinstance(b, Pareto):
            return (b.nu - 1.0) / (b.scale + x)
        if isinstance(b, Exponential):
            return b.hazard_rate(x)
        vals = [
            math.exp(-float(b.hazard(xi)) - b.log_integrated_tail(xi)) for xi in np.ravel(x)
        ]
        out = np.asarray(vals, dtype=float).reshape(x.shape)
        return out if out.ndim else float(out)

    def hazard_rate_deriv(self, x):
        # q_r' = q_r (q_r - q) follows from q_r = tail / int_x^inf tail
        b = self.base
        if isinstance(b, Pareto):
            return -(b.nu - 1.0) / (b.scale + np.asarray(x, dtype=float)) ** 2
        qr = self.hazard_rate(x)
        return qr * (qr - b.hazard_rate(x))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        b = self.base
        if isinstance(b, Pareto):
            return b.scale * np.expm1(-np.log(p) / (b.nu - 1.0))
        if isinstance(b, Exponential):
            return b.quantile(p)
        if isinstance(b, Deterministic):
            return b.value * (1.0 - p)
        if isinstance(b, WeibullT1) and b.L.is_constant:
            a = 1.0 / b.beta
            x = (special.gammainccinv(a, p) / b.L.coef) ** a
            # one Newton step on log tail_r restores full relative accuracy
            x = np.maximum(x, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                log_tr = np.log(special.gammaincc(a, b.L.coef * x ** b.beta))
                step = (log_tr - np.log(p)) / np.exp(-b.hazard(x) - self._log_mean - log_tr)
            ok = np.isfinite(step) & (x > 0)
            return np.where(ok, np.maximum(x + step, 0.5 * x), x)
        target = -np.log(p)
        hi = np.ones_like(target)
        while True:
            short = self.hazard(hi) < target
            if not np.any(short):
                break
            hi = np.where(short, hi * 4.0, hi)
        return bisect_increasing(self.hazard, target, 0.0, hi, rtol=1e-11)

    def sample(self, rng, size=None):
        p = rng.random(size)
        p = np.where(p > 0, p, np.nextafter(0.0, 1.0))
        out = self.quantile(p)
        return float(out) if size is None else out


@dataclass(frozen=True)
class StepLaw:
    """A signed random-walk step given by its right tail ``P{U > v}`` and mean.

    ``log_integrated`` (optional) returns ``log int_u^inf P{U > v} dv`` in
    closed form; otherwise quadrature is used.
    """

    tail_fn: Callable
    mean: float
    log_integrated: Optional[Callable] = None

    def tail(self, v):
        return self.tail_fn(v)

    def integrated_tail(self, u):
        if self.log_integrated is not None:
            return math.exp(self.log_integrated(u))
        val, _ = integrate.quad(lambda v: float(self.tail_fn(v)), u, np.inf, epsrel=1e-10, epsabs=0.0, limit=400)
        return val


def shifted_step(model, shift):
    """Law of ``T - shift`` for a :class:`TailModel` ``T``."""
    def tail_fn(v):
        return model.tail(np.asarray(v, dtype=float) + shift)

    def log_integrated(u):
        return model.log_integrated_tail(u + shift)

    return StepLaw(tail_fn, model.mean - shift, log_integrated)


# -- constructors ------------------------------------------------------------

def make_weibull_t1(beta, L=None):
    """Weibull-type law satisfying condition T1."""
    return WeibullT1(float(beta), L if L is not None else SlowlyVarying())


def make_pareto(nu, scale=1.0):
    return Pareto(float(nu), float(scale))


def make_exponential(rate=1.0):
    return Exponential(float(rate))


def make_custom(hazard=None, tail=None, mean=None, name="custom"):
    """Custom law from a hazard ``Q`` or, failing that, from a tail function."""
    if hazard is None and tail is None:
        raise DomainError("custom law needs a hazard or a tail")
    if hazard is None:
        def hazard(u, _tail=tail):
            return -np.log(_tail(u))
    return Custom(hazard, mean, name)


def make_deterministic(value):
    return Deterministic(float(value))


def sample(model, rng, size=None):
    return model.sample(rng, size)


def sample_residual(model, rng, size=None):
    if isinstance(model, TailModel):
        model = model.residual()
    return model.sample(rng, size)


def integrated_tail(model, u):
    """``int_u^inf P{T > y} dy``; raises for laws without a finite mean."""
    if isinstance(model, StepLaw):
        return model.integrated_tail(u)
    if isinstance(model, Pareto) and model.nu <= 1.0:
        raise DomainError("integrated tail diverges for nu <= 1")
    return model.integrated_tail(u)


# -- reduced-load condition --------------------------------------------------

@dataclass(frozen=True)
class ReducedLoadDiagnostic:
    status: str  # "holds" | "fails" | "unknown"
    grid: np.ndarray
    log_ratio: np.ndarray  # log tail(u - sqrt u) - log tail(u) = Q(u) - Q(u - sqrt u)
    reason: str = ""

    @property
    def ratio(self):
        return np.exp(self.log_ratio)


def reduced_load_condition_holds(model, band=0.02, u_max=1e8):
    """Check ``P{T > u - sqrt u} / P{T > u} -> 1`` on a geometric grid.

    WeibullT1 laws are decided analytically by the sign of ``beta - 1/2``.
    """
    grid = np.logspace(1.0, math.log10(u_max), 29)
    log_ratio = np.asarray(model.hazard(grid) - model.hazard(grid - np.sqrt(grid)), dtype=float)
    if isinstance(model, WeibullT1):
        if model.beta < 0.5:
            return ReducedLoadDiagnostic("holds", grid, log_ratio, "beta < 1/2")
        if model.beta > 0.5:
            return ReducedLoadDiagnostic("fails", grid, log_ratio, "beta > 1/2")
        return ReducedLoadDiagnostic("unknown", grid, log_ratio, "beta = 1/2 is the boundary case")
    tol = math.log1p(band)
    last = np.abs(log_ratio[-3:])
    if np.all(last <= tol):
        return ReducedLoadDiagnostic("holds", grid, log_ratio, "ratio within 1 +/- %g at the grid end" % band)
    if np.all(last > tol) and np.all(np.diff(last) >= 0):
        return ReducedLoadDiagnostic("fails", grid, log_ratio, "ratio leaves the band and does not return")
    return ReducedLoadDiagnostic("unknown", grid, log_ratio, "no clear trend on the probe grid")
