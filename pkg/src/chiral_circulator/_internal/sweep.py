"""Thread fan-out for independent sweep points."""

import logging
from collections.abc import Callable, Iterable, Sequence
from typing import TypeVar, cast

import anyio
import anyio.to_thread

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


async def map_in_threads(
    func: Callable[[T], R], items: Sequence[T], threads: int
) -> list[R]:
    """Apply ``func`` to every item on worker threads.

    Results keep the order of ``items``. If any call raises, the exception of
    the lowest failing index is re-raised after all tasks finish.
    """
    results: list[R | None] = [None] * len(items)
    errors: dict[int, Exception] = {}
    limiter = anyio.CapacityLimiter(max(1, threads))

    async def _run(index: int, item: T) -> None:
        try:
            results[index] = await anyio.to_thread.run_sync(
                func, item, limiter=limiter
            )
        except Exception as e:
            errors[index] = e

    async with anyio.create_task_group() as tg:
        for index, item in enumerate(items):
            tg.start_soon(_run, index, item)

    if errors:
        first = min(errors)
        logger.debug(f"{len(errors)} of {len(items)} sweep points failed")
        raise errors[first]
    return cast("list[R]", results)


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map ``func`` over ``items``, on ``threads`` worker threads when > 1."""
    batch = list(items)
    if threads <= 1 or len(batch) <= 1:
        return [func(item) for item in batch]
    logger.debug(f"Mapping {len(batch)} points over {threads} threads")
    return anyio.run(map_in_threads, func, batch, threads)
