import os

import pytest

from posikit.errors import UsageError
from posikit.workers import map_ordered, resolve_threads


def test_resolve_threads():
    assert resolve_threads(3) == 3
    assert resolve_threads('2') == 2
    assert resolve_threads('auto') == max(1, os.cpu_count() or 1)
    assert resolve_threads(None) >= 1
    with pytest.raises(UsageError):
        resolve_threads(0)
    with pytest.raises(UsageError):
        resolve_threads('many')


def test_map_ordered():
    items = list(range(50))
    assert map_ordered(lambda x: x * x, items) == [x * x for x in items]
    assert map_ordered(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert map_ordered(lambda x: x, [], threads=4) == []
