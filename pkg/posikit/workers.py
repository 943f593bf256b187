"""
This module represents a logic for running independent pieces of work in threads.
Results are always returned in the order of the work items, so any reduction
over them does not depend on scheduling
"""
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from posikit.errors import UsageError
from posikit.utils import logger

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | str | None) -> int:
    """
    Converts a thread setting into a positive number of threads

    Args:
        threads (int | str | None): "auto", None, or a positive number

    Returns:
        int: number of threads to use
    """
    if threads is None or str(threads).strip().lower() == 'auto':
        return max(1, os.cpu_count() or 1)
    try:
        value = int(threads)
    except ValueError:
        raise UsageError(f'bad threads value: {threads}')
    if value < 1:
        raise UsageError(f'threads must be positive, got {value}')
    return value


def map_ordered(func: Callable[[T], R],
                items: Iterable[T],
                threads: int = 1) -> list[R]:
    """
    Applies func to every item, possibly in parallel

    Args:
        func (Callable[[T], R]): pure function of a work item
        items (Iterable[T]): work items
        threads (int, optional): number of threads. Defaults to 1.

    Returns:
        list[R]: results in the order of items
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug(f'running {len(items)} work items in {threads} threads')
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))
