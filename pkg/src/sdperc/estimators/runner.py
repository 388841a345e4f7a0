"""Replicate-parallel execution with order-independent aggregation.

Replicate ``i`` of a run with seed ``s`` always uses ``RngKey(s, i)``, and a
worker only returns integer counts, so totals are identical for every thread
count and chunking.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np


def default_threads() -> int:
    env = os.environ.get("SDP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def replicate_counts(
    worker: Callable[[int], Sequence[int]],
    start: int,
    stop: int,
    threads: int = 1,
) -> np.ndarray:
    """Sum of ``worker(i)`` over ``start <= i < stop``."""

    def chunk(lo: int, hi: int) -> np.ndarray:
        acc = None
        for i in range(lo, hi):
            v = np.asarray(worker(i), dtype=np.int64)
            acc = v.copy() if acc is None else acc + v
        return acc

    n = stop - start
    if n <= 0:
        raise ValueError("need at least one replicate")
    threads = max(1, min(threads, n))
    if threads == 1:
        return chunk(start, stop)
    bounds = np.linspace(start, stop, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda ab: chunk(*ab), zip(bounds[:-1], bounds[1:])))
    return sum(parts[1:], parts[0].copy())
