"""Ordered fan-out over a thread pool capped by ``HOLONOMY_THREADS``."""

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["thread_count", "ordered_map"]


def thread_count(default=1):
    raw = os.environ.get("HOLONOMY_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return default
    return max(1, n)


def ordered_map(fn, items, threads=None):
    """``[fn(x) for x in items]``, possibly concurrent; results keep input order."""
    items = list(items)
    threads = thread_count() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
