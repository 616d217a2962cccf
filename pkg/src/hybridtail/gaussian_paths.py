"""Centered Gaussian processes with stationary increments.

Paths are sampled exactly on a uniform grid: Brownian motion from i.i.d.
increments, fractional Brownian motion by circulant embedding of its
increments (fractional Gaussian noise), and any other variance function by
Cholesky factorisation of the Toeplitz increment covariance.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import math
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from ._numerics import bisect_increasing
from .errors import CapacityError, DomainError, SpecError
from .estimates import MomentEstimate, Z95
from .streams import indexed_map, path_stream

EIG_CLIP = 1e-10
CHOLESKY_CAP = 8192


class GaussKind(str, Enum):
    BM = "BrownianMotion"
    FBM = "FBM"
    CUSTOM = "CustomVariance"


@dataclass(frozen=True)
class GaussianSpec:
    """Variance function ``sigma^2(t)`` plus its regular-variation indices.

    ``alpha`` is the index at infinity, ``beta0`` the index at zero.  ``scale``
    multiplies the variance; ``scale = 0`` gives the degenerate process
    ``X = 0`` used in deterministic checks.
    """

    kind: GaussKind
    alpha: float
    beta0: float
    hurst: Optional[float] = None
    scale: float = 1.0
    variance_fn: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if self.scale < 0:
            raise DomainError("variance scale must be nonnegative")
        if not 0.0 < self.alpha < 2.0:
            raise DomainError("alpha must lie in (0, 2)")
        if not 0.0 < self.beta0 <= 2.0:
            raise DomainError("beta0 must lie in (0, 2]")

    @property
    def degenerate(self):
        return self.scale == 0.0

    @property
    def H(self):
        """Self-similarity index ``alpha / 2`` used by the oscillatory regime."""
        return self.hurst if self.hurst is not None else self.alpha / 2.0

    def variance(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if self.kind is GaussKind.CUSTOM:
            return self.scale * np.asarray(self.variance_fn(t), dtype=float)
        return self.scale * t ** (2.0 * self.H)

    def sigma(self, t):
        return np.sqrt(self.variance(t))

    def covariance(self, s, t):
        return 0.5 * (self.variance(s) + self.variance(t) - self.variance(np.subtract(t, s)))

    def describe(self):
        if self.name:
            return self.name
        if self.kind is GaussKind.BM:
            return "bm()" if self.scale == 1.0 else "bm(scale=%r)" % self.scale
        if self.kind is GaussKind.FBM:
            return "fbm(H=%r)" % self.hurst if self.scale == 1.0 else "fbm(H=%r, scale=%r)" % (self.hurst, self.scale)
        return "custom"


def brownian_motion(scale=1.0):
    return GaussianSpec(GaussKind.BM, 1.0, 1.0, 0.5, float(scale))


def fbm(H, scale=1.0):
    if not 0.0 < H < 1.0:
        raise DomainError("Hurst parameter must lie in (0, 1)")
    if H == 0.5:
        return brownian_motion(scale)
    return GaussianSpec(GaussKind.FBM, 2.0 * H, 2.0 * H, float(H), float(scale))


def custom_variance(variance_fn, alpha, beta0, name="custom"):
    return GaussianSpec(GaussKind.CUSTOM, float(alpha), float(beta0), None, 1.0, variance_fn, name)


def _power_sum(weights, hursts):
    def var(t):
        return sum(w * t ** (2.0 * h) for w, h in zip(weights, hursts))
    return var


def fbm_mixture(weights, hursts):
    """Sum of independent fBm's: ``sigma^2(t) = sum_i w_i t^(2 H_i)``."""
    weights = tuple(float(w) for w in weights)
    hursts = tuple(float(h) for h in hursts)
    name = "fbm_mix(w=%r, H=%r)" % (list(weights), list(hursts))
    return custom_variance(_power_sum(weights, hursts), 2.0 * max(hursts), 2.0 * min(hursts), name)


@dataclass(frozen=True)
class PathGrid:
    horizon: float
    n_steps: int
    values: np.ndarray

    @property
    def dt(self):
        return self.horizon / self.n_steps

    @property
    def times(self):
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def with_drift(self, mu):
        return PathGrid(self.horizon, self.n_steps, self.values + mu * self.times)


# -- samplers ---------------------------------------------------------------

def fgn_autocovariance(n, H):
    k = np.arange(n + 1, dtype=float)
    h2 = 2.0 * H
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k ** h2 + np.abs(k - 1) ** h2)


@lru_cache(maxsize=32)
def _circulant_sqrt(n, H):
    """``sqrt`` of the circulant eigenvalues, or ``None`` if the embedding fails."""
    g = fgn_autocovariance(n, H)
    row = np.concatenate([g[:n + 1], g[n - 1:0:-1]])
    lam = np.fft.rfft(row).real
    if lam.min() < -EIG_CLIP:
        return None
    lam = np.clip(lam, 0.0, None)
    w = np.empty(n + 1)
    w[0] = math.sqrt(lam[0] / (2 * n))
    w[n] = math.sqrt(lam[n] / (2 * n))
    w[1:n] = np.sqrt(lam[1:n] / (4 * n))
    return w


@lru_cache(maxsize=4)
def _toeplitz_factor(spec, dt, n):
    if n > CHOLESKY_CAP:
        raise CapacityError("Cholesky sampler limited to %d steps, got %d" % (CHOLESKY_CAP, n))
    k = np.arange(n + 1, dtype=float)
    v = spec.variance(k * dt)
    vm = spec.variance(np.abs(k - 1) * dt)
    vp = spec.variance((k + 1) * dt)
    gamma = 0.5 * (vp - 2.0 * v + vm)
    cov = linalg.toeplitz(gamma[:n])
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        lam, vec = linalg.eigh(cov)
        if lam.min() < -EIG_CLIP * max(1.0, lam.max()):
            raise SpecError("increment covariance is not positive semidefinite")
        return vec * np.sqrt(np.clip(lam, 0.0, None))


def sample_increments(spec, dt, n, rng):
    """``n`` consecutive increments of ``X`` over steps of length ``dt``."""
    if spec.degenerate:
        return np.zeros(n)
    if spec.kind is GaussKind.BM:
        return math.sqrt(spec.scale * dt) * rng.standard_normal(n)
    if spec.kind is GaussKind.FBM:
        w = _circulant_sqrt(n, spec.hurst)
        if w is not None:
            z = np.empty(n + 1, dtype=complex)
            z.real = rng.standard_normal(n + 1)
            z.imag[1:n] = rng.standard_normal(n - 1)
            z.imag[0] = z.imag[n] = 0.0
            fgn = (2 * n) * np.fft.irfft(w * z, 2 * n)[:n]
            return math.sqrt(spec.scale) * dt ** spec.hurst * fgn
    factor = _toeplitz_factor(spec, float(dt), int(n))
    return factor @ rng.standard_normal(n)


def sample_path(spec, horizon, n_steps, rng):
    """Exact sample of ``X`` at ``t_i = i * horizon / n_steps``."""
    if horizon <= 0 or n_steps < 1:
        raise DomainError("need a positive horizon and at least one step")
    inc = sample_increments(spec, horizon / n_steps, int(n_steps), rng)
    values = np.empty(n_steps + 1)
    values[0] = 0.0
    np.cumsum(inc, out=values[1:])
    return PathGrid(float(horizon), int(n_steps), values)


def bridge_fill(spec, t_left, x_left, t_right, x_right, t_mid, rng):
    """Value of ``X`` at ``t_mid`` given neighbouring grid values.

    Exact (Brownian bridge) for Brownian motion; linear interpolation for
    other kernels, whose conditional law needs the whole path.
    """
    frac = (t_mid - t_left) / (t_right - t_left)
    mean = x_left + frac * (x_right - x_left)
    if spec.kind is not GaussKind.BM or spec.degenerate:
        return mean
    var = spec.scale * (t_mid - t_left) * (t_right - t_mid) / (t_right - t_left)
    return mean + np.sqrt(np.maximum(var, 0.0)) * rng.standard_normal(np.shape(t_mid))


# -- functionals ------------------------------------------------------------

def sup_on_unit_interval(spec, n_steps, rng):
    """Grid maximum of ``X`` on ``[0, 1]``; never above the continuous sup."""
    return float(sample_path(spec, 1.0, n_steps, rng).values.max())


def _sup_pair(spec, n_steps, seed):
    def one(i):
        v = sample_path(spec, 1.0, n_steps, path_stream(seed, i)).values
        return v.max(), v[::2].max()
    return one


def estimate_prefactor_moment(H, q, n_paths, n_steps, seed, workers=None):
    """Monte Carlo ``E[sup_{[0,1]} B_H ** q]`` with its bias indicator.

    The bias indicator is the moment on the ``n_steps`` grid minus the moment
    on the nested ``n_steps / 2`` grid from the same paths.
    """
    if q <= -1.0 / H:
        raise DomainError("moment of order %r is infinite for H=%r" % (q, H))
    if q == 0:
        return MomentEstimate(1.0, 0.0, 1.0, 1.0, int(n_paths), int(n_steps), int(seed))
    spec = fbm(H)
    pairs = np.asarray(indexed_map(_sup_pair(spec, n_steps, seed), int(n_paths), workers))
    with np.errstate(divide="ignore"):
        fine = pairs[:, 0] ** q
        coarse = pairs[:, 1] ** q
    flagged = not np.all(np.isfinite(fine))
    m = float(np.mean(fine))
    se = float(np.std(fine, ddof=1) / math.sqrt(n_paths)) if np.isfinite(m) else math.inf
    bias = float(m - np.mean(coarse)) if np.isfinite(m) else math.nan
    return MomentEstimate(m, se, m - Z95 * se, m + Z95 * se, int(n_paths), int(n_steps), int(seed), bias, flagged)


def halfnormal_moment(q):
    """``E|N(0,1)|**q``; equals the sup moment for ``H = 1/2`` by reflection."""
    return 2.0 ** (q / 2.0) * math.gamma((q + 1.0) / 2.0) / math.sqrt(math.pi)


def sample_hitting_time(mu, x, rng, size=None):
    """First passage of ``W(t) + mu t`` to level ``x``: inverse Gaussian, exact.

    Mean ``x / mu`` and shape ``x**2``; drawn by the transformation method with
    a uniform acceptance step choosing between the two roots.
    """
    if not mu > 0:
        raise DomainError("first passage is a.s. finite only for positive drift")
    if not x > 0:
        raise DomainError("level must be positive")
    m = x / mu
    lam = x * x
    y = rng.standard_normal(size) ** 2
    a = m * y / (2.0 * lam)
    # smaller root, written to avoid cancellation for large y
    root = m / (1.0 + a + np.sqrt(a * (a + 2.0)))
    u = rng.random(size)
    out = np.where(u <= m / (m + root), root, m * m / root)
    return float(out) if size is None else out


def running_max(path, t=None):
    k = path.n_steps if t is None else int(math.floor(t / path.dt + 1e-9))
    return float(path.values[: k + 1].max())


def renewal_count(path, t):
    """``N(t) = max{n : tau_n <= t}`` with ``tau_n`` the first grid passage to ``n``."""
    if t < 0 or t > path.horizon * (1 + 1e-12):
        raise DomainError("t outside the path horizon")
    k = min(int(math.floor(t / path.dt + 1e-9)), path.n_steps)
    run = np.maximum.accumulate(path.values)
    top = int(math.floor(run[-1]))
    if top < 1:
        return 0
    levels = np.arange(1, top + 1, dtype=float)
    first_passage = np.searchsorted(run, levels, side="left")
    return int(np.count_nonzero(first_passage <= k))


def sigma_inverse(spec, u):
    """``t`` with ``sigma(t) = u``; closed form for (f)BM."""
    u = float(u)
    if u < 0:
        raise DomainError("sigma_inverse needs u >= 0")
    if u == 0:
        return 0.0
    if spec.degenerate:
        raise DomainError("degenerate process has no inverse standard deviation")
    if spec.kind is not GaussKind.CUSTOM:
        return (u / math.sqrt(spec.scale)) ** (1.0 / spec.H)
    hi = 1.0
    while spec.sigma(hi) < u:
        hi *= 4.0
        if hi > 1e300:
            raise DomainError("u beyond the range of sigma")
    return float(bisect_increasing(lambda t: spec.sigma(t), u, 0.0, hi, rtol=1e-13))
