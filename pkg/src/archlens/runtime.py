"""Parallelism controls. ARCHLENS_THREADS caps worker threads (0 = auto)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "ARCHLENS_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if requested <= 0:
        return min(8, os.cpu_count() or 1)
    return requested


def ordered_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Apply fn to items, possibly in parallel; results always in input order,
    so output is independent of scheduling."""
    workers = min(thread_count(), len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
