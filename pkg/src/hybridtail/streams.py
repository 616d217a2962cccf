"""Per-path random streams and an order-preserving parallel map.

Every Monte Carlo path ``i`` draws from ``path_stream(seed, ..., i)``, so a
result depends only on ``(seed, key, i)`` and never on how paths are split
across workers.
"""

from concurrent.futures import ProcessPoolExecutor
import multiprocessing as mp
import os

import numpy as np

WORKERS_ENV = "HYBRIDTAIL_WORKERS"


def path_stream(seed, *key):
    """Independent generator for the stream addressed by ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


_TASK = None


def _run_chunk(bounds):
    start, stop = bounds
    return [_TASK(i) for i in range(start, stop)]


def indexed_map(func, n, workers=None, chunk=None):
    """``[func(i) for i in range(n)]``, optionally fanned out over processes.

    Uses the fork start method so ``func`` (often a closure over a model with
    user callables) never has to be pickled; results come back in index order.
    """
    global _TASK
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or n < 2:
        return [func(i) for i in range(n)]
    chunk = chunk or max(1, -(-n // (4 * workers)))
    bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    _TASK = func
    try:
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
            parts = list(ex.map(_run_chunk, bounds))
    finally:
        _TASK = None
    return [r for part in parts for r in part]
