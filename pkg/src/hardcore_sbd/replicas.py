"""Replica fan-out. Results always come back in submission order."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    return os.cpu_count() or 1


def map_replicas(fn: Callable[[T], R], args: Sequence[T], workers: Optional[int] = 1) -> List[R]:
    workers = default_workers() if workers is None or workers <= 0 else workers
    if workers == 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as ex:
        return list(ex.map(fn, args))
