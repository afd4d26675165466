"""Order-preserving block map over an optional process pool."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence


def map_blocks(fn: Callable, tasks: Sequence[tuple], workers: int = 1) -> list:
    """``[fn(*t) for t in tasks]``, possibly evaluated in worker processes.

    Results come back in task order, so aggregation never depends on
    completion order.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]
