"""
Order-fixed reductions.

`tree_sum` adds pairwise over a fixed binary tree. `ordered_reduce` folds block
results left to right in range order, whatever the worker count.
"""

from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import structlog

logger = structlog.get_logger()

T = TypeVar("T")


def tree_sum(values: Iterable[T], zero: T) -> T:
    """
    Pairwise (tree) sum in input order.

    Works for any additive type: Fraction, LogNumber, float, complex.
    """
    level = list(values)
    if not level:
        return zero
    while len(level) > 1:
        paired = [
            level[i] + level[i + 1]  # type: ignore[operator]
            for i in range(0, len(level) - 1, 2)
        ]
        if len(level) % 2:
            paired.append(level[-1])
        level = paired
    return level[0]


def chunk_ranges(start: int, stop: int, chunk: int) -> list[tuple[int, int]]:
    """Split [start, stop) into consecutive half-open ranges of length <= chunk"""
    if chunk < 1:
        raise ValueError("chunk must be positive")
    return [(lo, min(lo + chunk, stop)) for lo in range(start, stop, chunk)]


def ordered_reduce(
    func: Callable[[int, int], T],
    ranges: Sequence[tuple[int, int]],
    workers: int,
    initial: T,
) -> T:
    """
    Sum func over the ranges in range order.

    At most `workers` block results are alive at once; the summation order
    is fixed by the ranges alone.
    """
    logger.debug("Reducing blocks", blocks=len(ranges), workers=workers)
    total = initial
    if workers <= 1:
        for lo, hi in ranges:
            total = total + func(lo, hi)  # type: ignore[operator]
        return total
    with ThreadPoolExecutor(max_workers=workers) as executor:
        for i in range(0, len(ranges), workers):
            batch = ranges[i : i + workers]
            for block in executor.map(lambda r: func(*r), batch):
                total = total + block  # type: ignore[operator]
    return total
