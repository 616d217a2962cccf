"""Monte Carlo for ``V = sup_{t>=0} [X(t) + Y(t) - c t]`` and its cycle objects.

The On-Off input is exact (event list); the Gaussian part lives on a uniform
grid of ``n_steps`` points over the truncated horizon ``K u / (c - rho)``.
Segment boundaries of the source are added as extra candidate times, with
``X`` filled in by an exact Brownian bridge (linear interpolation for other
kernels).
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from . import gaussian_paths as gp
from .errors import DomainError, RegimeError
from .estimates import proportion_estimate, stratified_estimate
from .onoff import DURATION_CAP, ON, OnOffSpec, sample_stationary
from .streams import indexed_map, path_stream

DEFAULT_K = 5.0


class Drift(str, Enum):
    SUPERCRITICAL = "r>c"
    CRITICAL = "r=c"
    SUBCRITICAL = "r<c"


@dataclass(frozen=True)
class HybridModel:
    gaussian: gp.GaussianSpec
    source: OnOffSpec
    c: float

    def __post_init__(self):
        if not self.c > self.source.rho:
            raise DomainError("unstable model: need c > rho = %g, got c = %g" % (self.source.rho, self.c))

    @property
    def drift(self):
        r = self.source.r
        if r > self.c:
            return Drift.SUPERCRITICAL
        if r == self.c:
            return Drift.CRITICAL
        return Drift.SUBCRITICAL

    @property
    def margin(self):
        return self.c - self.source.rho

    @property
    def p(self):
        return self.source.p

    def horizon(self, u_ref, K=DEFAULT_K):
        # u below one time unit would give a degenerate window; floor at 1
        return K * max(float(u_ref), 1.0) / self.margin


def gaussian_only(gaussian, c):
    """Model with a silent source, so ``V`` is the Gaussian workload alone."""
    return HybridModel(gaussian, OnOffSpec.silent(), float(c))


@dataclass(frozen=True)
class SupSample:
    value: float
    value_half: float  # same path, candidate set restricted to the n/2 grid
    argmax: float
    on_length: float  # On-period covering (or just preceding) the argmax
    initial_state: int


def _fill_kinks(spec, x, dt, kinks, rng):
    """Values of ``X`` at sorted off-grid times given the grid path ``x``.

    For Brownian motion every grid cell is filled with an exact bridge
    through all kinks inside it (free BM started at the left node, then pinned
    at the right node).  Other kernels use linear interpolation.
    """
    n = len(x) - 1
    if spec.kind is not gp.GaussKind.BM or spec.degenerate:
        return np.interp(kinks, np.arange(n + 1) * dt, x)
    idx = np.minimum((kinks / dt).astype(np.int64), n - 1)
    t_left = idx * dt
    first = np.ones(len(kinks), dtype=bool)
    first[1:] = idx[1:] != idx[:-1]
    prev = np.where(first, t_left, np.concatenate([[0.0], kinks[:-1]]))
    sd = np.sqrt(spec.scale)
    steps = sd * np.sqrt(np.maximum(kinks - prev, 0.0)) * rng.standard_normal(len(kinks))
    csum = np.cumsum(steps)
    group_start = np.maximum.accumulate(np.where(first, np.arange(len(kinks)), 0))
    base = csum[group_start] - steps[group_start]
    free = csum - base  # free BM offset from the left node
    last = np.ones(len(kinks), dtype=bool)
    last[:-1] = first[1:]
    t_right = t_left + dt
    tail_step = sd * np.sqrt(np.maximum(t_right[last] - kinks[last], 0.0)) * rng.standard_normal(int(last.sum()))
    free_end = np.empty(len(kinks))
    free_end[last] = free[last] + tail_step
    # broadcast each cell's free endpoint back over its kinks
    free_end = free_end[np.flatnonzero(last)[np.cumsum(first) - 1]]
    frac = (kinks - t_left) / dt
    target = x[idx + 1] - x[idx]
    return x[idx] + free + frac * (target - free_end)


def simulate_path_sup(model, horizon, n_steps, rng, initial_state=None):
    """One realisation of the truncated supremum with diagnostics."""
    src = sample_stationary(model.source, horizon, rng, initial_state)
    path = gp.sample_path(model.gaussian, horizon, n_steps, rng)
    times = path.times
    if src.r > 0:
        s_grid = path.values + src.Y(times) - model.c * times
    else:
        s_grid = path.values - model.c * times
    if src.r > 0:
        kinks = src.boundaries_within(horizon)
        xk = _fill_kinks(model.gaussian, path.values, path.dt, kinks, rng)
        s_kink = xk + src.Y(kinks) - model.c * kinks
    else:
        kinks = s_kink = np.empty(0)
    i_grid = int(np.argmax(s_grid))
    best, t_best = s_grid[i_grid], times[i_grid]
    half = s_grid[::2].max()
    if len(kinks):
        j = int(np.argmax(s_kink))
        if s_kink[j] > best:
            best, t_best = s_kink[j], kinks[j]
        half = max(half, s_kink.max())
    seg = int(src.segment_index(t_best))
    if src.states[seg] == ON:
        on_len = src.durations[seg]
    elif seg > 0:
        on_len = src.durations[seg - 1]
    else:
        on_len = 0.0
    return SupSample(float(best), float(half), float(t_best), float(on_len), src.initial_state)


def simulate_sup(model, u_ref, n_steps, rng, K=DEFAULT_K):
    """Grid supremum of ``S`` over ``[0, K u_ref / (c - rho)]``; always >= 0."""
    return simulate_path_sup(model, model.horizon(u_ref, K), n_steps, rng).value


def sample_sups(model, horizon, n_paths, n_steps, seed, initial_state=None, key=(), workers=None):
    """Arrays of per-path supremum diagnostics; path ``i`` uses stream ``(seed, *key, i)``."""
    def one(i):
        s = simulate_path_sup(model, horizon, n_steps, path_stream(seed, *key, i), initial_state)
        return s.value, s.value_half, s.argmax, s.on_length, s.initial_state

    rows = np.asarray(indexed_map(one, int(n_paths), workers), dtype=float).reshape(-1, 5)
    return {
        "value": rows[:, 0],
        "value_half": rows[:, 1],
        "argmax": rows[:, 2],
        "on_length": rows[:, 3],
        "initial_state": rows[:, 4].astype(int),
    }


def estimate_tail(model, u, n_paths, n_steps, seed, K=DEFAULT_K, stratify=False, workers=None, key=()):
    """Estimate ``P{V > u}`` from ``n_paths`` truncated grid suprema.

    With ``stratify`` the initial source state is fixed per stratum
    (``n_paths * p`` paths started On, the rest Off) and the two
    proportions are mixed with weights ``p`` and ``1 - p``.  ``key`` extends
    the stream derivation so that several estimates can share one seed.
    """
    if n_paths < 100:
        raise DomainError("estimate_tail needs at least 100 paths")
    horizon = model.horizon(u, K)
    if not stratify:
        s = sample_sups(model, horizon, n_paths, n_steps, seed, key=key, workers=workers)
        hits = int(np.count_nonzero(s["value"] > u))
        hits_half = int(np.count_nonzero(s["value_half"] > u))
        return proportion_estimate(hits, n_paths, horizon, n_steps, seed, (hits - hits_half) / n_paths)
    p = model.p
    n_on = min(max(int(round(p * n_paths)), 1), n_paths - 1)
    counts = (n_on, n_paths - n_on)
    hits, hits_half = [], []
    for state, m in zip((1, 0), counts):
        s = sample_sups(model, horizon, m, n_steps, seed, initial_state=state, key=(*key, 1_000_000 + state),
                        workers=workers)
        hits.append(int(np.count_nonzero(s["value"] > u)))
        hits_half.append(int(np.count_nonzero(s["value_half"] > u)))
    weights = (p, 1.0 - p)
    bias = sum(w * (h - hh) / m for w, h, hh, m in zip(weights, hits, hits_half, counts))
    return stratified_estimate(weights, hits, counts, horizon, n_steps, seed, bias)


def tail_curve(model, us, n_paths, n_steps, seed, K=DEFAULT_K, workers=None, key=()):
    """Estimates of ``P{V > u}`` for every ``u`` in ``us`` from one set of paths.

    The horizon is set by the largest ``u``, so smaller levels are truncated
    less than :func:`estimate_tail` would truncate them.  The estimates are
    positively correlated across ``u``.  Returns ``(estimates, samples)``.
    """
    us = np.asarray(us, dtype=float)
    horizon = model.horizon(us.max(), K)
    s = sample_sups(model, horizon, n_paths, n_steps, seed, key=key, workers=workers)
    out = []
    for u in us:
        hits = int(np.count_nonzero(s["value"] > u))
        hits_half = int(np.count_nonzero(s["value_half"] > u))
        out.append(proportion_estimate(hits, n_paths, horizon, n_steps, seed, (hits - hits_half) / n_paths))
    return out, s


# -- regenerative cycle objects ------------------------------------------------

@dataclass(frozen=True)
class CycleSample:
    U: float  # increment of S over the cycle
    M: float  # running max of S over the cycle (t > 0)
    which: str


def _bm_over_segments(scale, segments, slopes, n_steps, rng):
    """Exact BM-plus-piecewise-drift on a uniform grid joined with segment ends."""
    ends = np.cumsum(segments)
    length = ends[-1]
    grid = np.linspace(0.0, length, n_steps + 1)
    times = np.union1d(grid, ends[:-1])
    dt = np.diff(times)
    x = np.concatenate([[0.0], np.cumsum(math.sqrt(scale) * np.sqrt(dt) * rng.standard_normal(len(dt)))])
    knots = np.concatenate([[0.0], ends])
    drift_knots = np.concatenate([[0.0], np.cumsum(np.asarray(slopes) * segments)])
    return times, x + np.interp(times, knots, drift_knots)


def sample_cycle(model, which, n_steps, rng):
    """Draw ``(U, M)`` for the first (delay) cycle or a generic (Off, On) cycle."""
    if model.drift is not Drift.SUPERCRITICAL:
        raise RegimeError("cycle embedding is defined for r > c")
    if model.gaussian.kind is not gp.GaussKind.BM:
        raise RegimeError("cycle embedding needs Brownian noise")
    src, c = model.source, model.c
    if which == "first":
        if rng.random() < src.p:
            segments = [src.on_residual.sample(rng)]
            slopes = [src.r - c]
        else:
            segments = [src.off_residual.sample(rng), src.on.sample(rng)]
            slopes = [-c, src.r - c]
    elif which == "generic":
        segments = [src.off.sample(rng), src.on.sample(rng)]
        slopes = [-c, src.r - c]
    else:
        raise ValueError("which must be 'first' or 'generic'")
    times, s = _bm_over_segments(model.gaussian.scale, np.asarray(segments, dtype=float), slopes, n_steps, rng)
    return CycleSample(float(s[-1]), float(s[1:].max()), which)


def sample_sup_over_random_interval(spec, dur, n_steps, rng, drift=0.0, with_endpoint=False):
    """Grid sup of ``X(t) + drift t`` over ``[0, T]`` with ``T`` drawn from ``dur``.

    ``dur`` may be a :class:`TailModel` or :class:`ResidualModel`.  Returns the
    sup, or ``(sup, endpoint, flagged)`` when ``with_endpoint`` is set;
    ``flagged`` marks duration draws at the safety cap.
    """
    T = float(dur.sample(rng))
    flagged = T >= DURATION_CAP
    T = min(T, DURATION_CAP)
    if T <= 0:
        return (0.0, 0.0, flagged) if with_endpoint else 0.0
    path = gp.sample_path(spec, T, n_steps, rng)
    vals = path.values + drift * path.times if drift else path.values
    sup = float(vals.max())
    return (sup, float(vals[-1]), flagged) if with_endpoint else sup


def sample_random_interval_batch(spec, dur, n_paths, n_steps, seed, drift=0.0, workers=None):
    """Arrays ``(sup, endpoint)`` from :func:`sample_sup_over_random_interval`."""
    def one(i):
        s, e, _ = sample_sup_over_random_interval(spec, dur, n_steps, path_stream(seed, i), drift, True)
        return s, e

    rows = np.asarray(indexed_map(one, int(n_paths), workers), dtype=float).reshape(-1, 2)
    return rows[:, 0], rows[:, 1]


__all__ = [
    "Drift",
    "HybridModel",
    "gaussian_only",
    "SupSample",
    "CycleSample",
    "simulate_path_sup",
    "simulate_sup",
    "sample_sups",
    "estimate_tail",
    "tail_curve",
    "sample_cycle",
    "sample_sup_over_random_interval",
    "sample_random_interval_batch",
]
