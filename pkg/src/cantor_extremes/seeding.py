"""Replica seeds and replica-parallel execution."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def derive_seed(master: int, index: int) -> int:
    """64-bit replica seed: first word of ``SeedSequence([master, index])``."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)[0])


def run_replicas(fn: Callable[[int, int], T], master: int, count: int, workers: int = 1) -> list[T]:
    """``fn(index, seed)`` for each replica, returned in replica order.

    Completion order never matters: results are placed by index.
    """
    seeds = [derive_seed(master, i) for i in range(count)]
    if workers <= 1:
        return [fn(i, s) for i, s in enumerate(seeds)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, i, s) for i, s in enumerate(seeds)]
        return [f.result() for f in futures]


def merge_sorted(samples: Sequence[np.ndarray]) -> np.ndarray:
    """Deterministic merge of per-replica samples."""
    if not samples:
        return np.zeros(0)
    return np.sort(np.concatenate([np.asarray(s, dtype=np.float64) for s in samples]), kind="stable")
