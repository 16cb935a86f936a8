"""Order-preserving parallel map used by the rate and cluster engines."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "SPINLIND_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Resolve a worker count; ``None`` reads ``SPINLIND_THREADS`` and 0 means one per CPU."""
    if requested is None:
        raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValueError("worker count must be >= 0")
    if requested == 0:
        return os.cpu_count() or 1
    return requested


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    # results come back in input order whatever the scheduling, so reductions
    # done by the caller are independent of the worker count
    items = list(items)
    n = min(worker_count(workers), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
