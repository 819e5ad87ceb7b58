from fractions import Fraction

import numpy as np
import pytest

from app.core.exactnum import LogNumber
from app.core.reduction import chunk_ranges, ordered_reduce, tree_sum


def test_tree_sum_types():
    assert tree_sum([Fraction(1, k) for k in range(1, 5)], Fraction(0)) == Fraction(25, 12)
    assert tree_sum([LogNumber.log(2), LogNumber.log(3)], LogNumber()) == LogNumber.of(0, {2: 1, 3: 1})
    assert tree_sum([], 0.0) == 0.0


def test_chunk_ranges_cover_interval():
    ranges = chunk_ranges(1, 100, 30)
    assert ranges == [(1, 31), (31, 61), (61, 91), (91, 100)]
    with pytest.raises(ValueError):
        chunk_ranges(0, 10, 0)


def test_ordered_reduce_is_worker_independent():
    ranges = chunk_ranges(1, 5000, 333)

    def block(lo, hi):
        out = np.zeros(5000)
        out[lo:hi] = 1.0 / np.arange(lo, hi)
        return out

    one = ordered_reduce(block, ranges, 1, np.zeros(5000))
    many = ordered_reduce(block, ranges, 3, np.zeros(5000))
    assert np.array_equal(one, many)


def test_ordered_reduce_folds_in_range_order():
    """Non-commutative blocks reveal the fold order"""
    ranges = chunk_ranges(0, 10, 3)
    for workers in (1, 2, 4):
        assert ordered_reduce(lambda lo, hi: [(lo, hi)], ranges, workers, []) == ranges
