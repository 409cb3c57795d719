# common/scripts/run_parallel.py
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    Apply ``fn`` to every item, possibly on a thread pool.

    Results come back in input order whatever the scheduling, so callers that
    merge by seed get output independent of ``threads``. The first exception
    raised by any item propagates.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


__all__ = ["map_ordered"]
