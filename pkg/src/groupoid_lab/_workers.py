"""Optional process parallelism, sized by ``GROUPOID_LAB_WORKERS``."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

from .errors import InvalidInput


def worker_count() -> int:
    raw = os.environ.get("GROUPOID_LAB_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidInput(f"GROUPOID_LAB_WORKERS must be an integer, got {raw!r}") from None


def parallel_map(fn, items, chunksize: int = 16) -> list:
    """Ordered ``map``; results never depend on how the work was split."""
    items = list(items)
    workers = worker_count()
    if workers == 1 or len(items) < 2 * workers:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
