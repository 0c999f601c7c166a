"""Seed derivation and an order-preserving worker pool."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def derive_seed_sequence(seed, *keys: int) -> np.random.SeedSequence:
    """Child seed for task ``keys`` of a run seeded by ``seed``; independent of thread layout."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key + tuple(keys))
    return np.random.SeedSequence(seed, spawn_key=tuple(keys))


def derive_rng(seed, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed_sequence(seed, *keys))


def parallel_map(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; result order always follows ``items``."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
