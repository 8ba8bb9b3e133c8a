"""Tests for the threaded sweep fan-out."""

from __future__ import annotations

import threading
import time

import anyio
import pytest

from chiral_circulator._internal.sweep import map_in_threads, parallel_map


def test_parallel_map_keeps_order():
    def slow_square(x: int) -> int:
        time.sleep(0.001 * (5 - x))
        return x * x

    assert parallel_map(slow_square, range(5), threads=3) == [0, 1, 4, 9, 16]
    assert parallel_map(slow_square, range(5), threads=1) == [0, 1, 4, 9, 16]


def test_parallel_map_empty():
    assert parallel_map(lambda x: x, [], threads=4) == []


def test_serial_map_runs_on_calling_thread():
    main = threading.get_ident()
    idents = parallel_map(lambda _: threading.get_ident(), range(3), threads=1)
    assert idents == [main] * 3


def test_threads_cap_concurrency():
    lock = threading.Lock()
    active = 0
    peak = 0

    def work(_: int) -> None:
        nonlocal active, peak
        with lock:
            active += 1
            peak = max(peak, active)
        time.sleep(0.01)
        with lock:
            active -= 1

    parallel_map(work, range(8), threads=2)
    assert 1 <= peak <= 2


def test_lowest_failing_index_is_raised():
    def fail_odd(x: int) -> int:
        if x % 2:
            raise ValueError(f"bad {x}")
        return x

    with pytest.raises(ValueError, match="bad 1"):
        parallel_map(fail_odd, range(6), threads=3)


def test_map_in_threads_under_anyio():
    async def _run() -> list[int]:
        return await map_in_threads(lambda x: x + 1, [1, 2, 3], 2)

    assert anyio.run(_run) == [2, 3, 4]
