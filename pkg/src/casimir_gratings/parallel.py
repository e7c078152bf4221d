"""Ordered worker-pool map; results never depend on the worker count."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def ordered_map(func, items, threads: int = 1) -> list:
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
