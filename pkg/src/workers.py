"""
Thread pool helpers shared by the parallel kernels, plus the evaluation counter
reported in run metrics.
"""
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Map fn over items; results come back in input order whatever the schedule."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def chunked(seq: List[T], size: int) -> List[List[T]]:
    return [seq[i:i + size] for i in range(0, len(seq), size)]


class EvaluationCounter:
    """Thread-safe tally of inner-loop evaluations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, amount: int):
        with self._lock:
            self._count += int(amount)

    def reset(self):
        with self._lock:
            self._count = 0

    @property
    def count(self) -> int:
        return self._count


EVALUATIONS = EvaluationCounter()
