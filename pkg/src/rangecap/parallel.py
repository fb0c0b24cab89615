"""Ordered thread-pool map.

Every task owns its RNG stream, and results are collected in input order.  A
reduction over the returned list is therefore identical for any pool size.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable


def default_threads() -> int:
    return os.cpu_count() or 1


def pmap(fn: Callable, items: Iterable, threads: int | None = 1) -> list:
    items = list(items)
    threads = default_threads() if threads is None else int(threads)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
