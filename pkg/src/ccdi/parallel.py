"""Deterministic fan-out of Monte Carlo batches over worker processes."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def chunked(items: Sequence[T], size: int) -> list[Sequence[T]]:
    return [items[i:i + size] for i in range(0, len(items), size)]


def map_batches(fn: Callable[[T], R], batches: Iterable[T], workers: int = 1) -> list[R]:
    """Apply ``fn`` to each batch, preserving input order regardless of ``workers``."""
    batches = list(batches)
    if workers <= 1 or len(batches) <= 1:
        return [fn(b) for b in batches]
    with ProcessPoolExecutor(max_workers=min(workers, len(batches))) as pool:
        return list(pool.map(fn, batches))
