"""Stationary integrated On-Off source as an exact event list.

The source starts On with probability ``p``; an initial On-period is a
residual draw, an initial Off-period is a residual Off draw followed by a
full On-period.  Full (Off, On) pairs follow.  The end of the first
On-period is the first regeneration epoch ``Z0``.
"""

from dataclasses import dataclass
from functools import cached_property
import logging
import math

import numpy as np

from .errors import DomainError, HorizonTooShort
from .heavy_tails import Exponential, TailModel

logger = logging.getLogger(__name__)

DURATION_CAP = 1e12
OFF, ON = 0, 1


@dataclass(frozen=True)
class OnOffSpec:
    r: float
    on: TailModel
    off: TailModel

    def __post_init__(self):
        if self.r < 0:
            raise DomainError("peak rate must be nonnegative")
        p = self.p
        if not 0.0 < p < 1.0:
            raise DomainError("on-fraction p must lie in (0, 1)")

    @property
    def p(self):
        m_on = self.on.mean
        return m_on / (m_on + self.off.mean)

    @property
    def rho(self):
        return self.p * self.r

    @cached_property
    def on_residual(self):
        return self.on.residual()

    @cached_property
    def off_residual(self):
        return self.off.residual()

    @classmethod
    def silent(cls):
        """A source with zero peak rate, so ``Y = 0``."""
        return cls(0.0, Exponential(1.0), Exponential(1.0))

    def describe(self):
        return "{ r=%r, on=%s, off=%s }" % (self.r, self.on.describe(), self.off.describe())


@dataclass(frozen=True)
class OnOffPath:
    """Alternating segments covering ``[0, horizon]``; ``Y`` is exact between knots."""

    r: float
    initial_state: int
    delay: float
    states: np.ndarray
    durations: np.ndarray
    horizon: float

    @cached_property
    def knots(self):
        t = np.empty(len(self.durations) + 1)
        t[0] = 0.0
        np.cumsum(self.durations, out=t[1:])
        return t

    @cached_property
    def y_knots(self):
        y = np.empty(len(self.durations) + 1)
        y[0] = 0.0
        np.cumsum(self.r * self.durations * self.states, out=y[1:])
        return y

    @property
    def starts(self):
        return self.knots[:-1]

    @property
    def end(self):
        return float(self.knots[-1])

    def Y(self, t):
        return np.interp(t, self.knots, self.y_knots)

    def J(self, t):
        idx = np.searchsorted(self.knots, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.states) - 1)
        return self.states[idx]

    def segment_index(self, t):
        idx = np.searchsorted(self.knots, t, side="right") - 1
        return np.clip(idx, 0, len(self.states) - 1)

    def boundaries_within(self, horizon=None):
        h = self.horizon if horizon is None else horizon
        k = self.knots[1:]
        return k[k < h]


def _capped(x):
    x = np.asarray(x, dtype=float)
    if np.any(x > DURATION_CAP):
        logger.warning("duration draw above %g capped", DURATION_CAP)
        x = np.minimum(x, DURATION_CAP)
    return x


def _pairs(spec, count, rng):
    off = _capped(spec.off.sample(rng, count))
    on = _capped(spec.on.sample(rng, count))
    states = np.tile(np.array([OFF, ON], dtype=np.int8), count)
    durations = np.empty(2 * count)
    durations[0::2] = off
    durations[1::2] = on
    return states, durations


def _fill_to(spec, states, durations, horizon, rng):
    end = float(np.sum(durations))
    cycle = spec.on.mean + spec.off.mean
    s_parts, d_parts = [states], [durations]
    while end < horizon:
        count = int(math.ceil(1.2 * (horizon - end) / cycle)) + 2
        s, d = _pairs(spec, count, rng)
        s_parts.append(s)
        d_parts.append(d)
        end += float(d.sum())
    return np.concatenate(s_parts), np.concatenate(d_parts)


def sample_stationary(spec, horizon, rng, initial_state=None):
    """Sample the stationary source on ``[0, horizon]``.

    ``initial_state`` forces ``I`` (used by the stratified estimator).
    """
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    if initial_state is None:
        initial_state = int(rng.random() < spec.p)
    if initial_state == ON:
        first = float(_capped(spec.on_residual.sample(rng)))
        states = np.array([ON], dtype=np.int8)
        durations = np.array([first])
        delay = first
    else:
        off_r = float(_capped(spec.off_residual.sample(rng)))
        on0 = float(_capped(spec.on.sample(rng)))
        states = np.array([OFF, ON], dtype=np.int8)
        durations = np.array([off_r, on0])
        delay = off_r + on0
    states, durations = _fill_to(spec, states, durations, horizon, rng)
    return OnOffPath(float(spec.r), int(initial_state), delay, states, durations, float(horizon))


def extend(path, spec, horizon, rng):
    """Path covering a longer horizon; existing segments are kept as drawn."""
    if horizon <= path.horizon:
        return path
    states, durations = _fill_to(spec, path.states, path.durations, horizon, rng)
    return OnOffPath(path.r, path.initial_state, path.delay, states, durations, float(horizon))


def eval_Y(path, t):
    """Cumulative input ``r * int_0^t J(s) ds``, exact."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > path.horizon):
        raise DomainError("t outside [0, horizon]")
    out = path.Y(t_arr)
    return float(out) if out.ndim == 0 else out


def first_regeneration(path):
    """End of the first On-period, ``Z0 = D0``."""
    if path.horizon < path.delay:
        raise HorizonTooShort("path horizon %g is shorter than Z0 = %g" % (path.horizon, path.delay))
    return path.delay
