"""Small root-finding and quadrature helpers shared across modules."""

import numpy as np
from scipy import integrate


def bisect_increasing(f, targets, lo, hi, rtol=1e-12, max_iter=200):
    """Vectorised bisection for ``f(x) = target`` with ``f`` nondecreasing.

    ``lo`` and ``hi`` must bracket every target (``f(lo) <= target <= f(hi)``).
    When ``lo > 0`` the midpoint is taken geometrically, which keeps the
    relative tolerance meaningful over many decades.
    """
    targets = np.asarray(targets, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), targets.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), targets.shape).copy()
    for _ in range(max_iter):
        geometric = lo > 0
        mid = np.where(geometric, np.sqrt(np.abs(lo * hi)), 0.5 * (lo + hi))
        below = f(mid) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= rtol * np.maximum(np.abs(hi), 1e-300)):
            break
    return 0.5 * (lo + hi)


def expand_upper(f, target, start=1.0, factor=4.0, limit=1e300):
    """Grow ``start`` geometrically until ``f(x) >= target``; ``f`` nondecreasing."""
    x = float(start)
    while f(x) < target:
        x *= factor
        if x > limit:
            raise OverflowError("no upper bracket below %g" % limit)
    return x


def tail_integral(excess, scale, rtol=1e-10):
    """``int_0^inf exp(-excess(s)) ds`` for a nondecreasing ``excess`` with ``excess(0)=0``.

    ``scale`` is the natural decay length of the integrand; the integral is
    split at a few multiples of it so ``quad`` sees the bulk.
    """
    def integrand(s):
        return np.exp(-excess(s))

    edges = [0.0, scale, 10.0 * scale, 100.0 * scale]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a, b, epsrel=rtol, epsabs=0.0, limit=200)
        total += val
    val, _ = integrate.quad(integrand, edges[-1], np.inf, epsrel=rtol, epsabs=0.0, limit=200)
    return total + val
