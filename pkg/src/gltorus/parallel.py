"""Thread-pool helper for independent analysis tasks (scans over radii,
probes, centers).  Results keep input order; the pool size is capped by
the CLI --threads flag."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

_max_threads = 1


def set_max_threads(n: int):
    global _max_threads
    _max_threads = max(int(n), 1)


def get_max_threads() -> int:
    return _max_threads


def tmap(fn, items, threads=None):
    items = list(items)
    n = min(threads or _max_threads, len(items)) if items else 1
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
