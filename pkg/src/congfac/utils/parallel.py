"""
Static work partitioning over a process pool. Work item i of a stream belongs to
partition i % num_partitions, so each partition's result depends only on its index, and
callers reduce the partition results in index order.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from congfac.config import resolve_num_workers

logger = logging.getLogger("congfac")

T = TypeVar("T")

def run_partitions(fn: Callable[..., T], tasks: Sequence[tuple], num_workers: int, operation: str) -> List[T]:
    """
    Call fn(*task) for every task, in a process pool when num_workers != 1 and there is more
    than one task. Results come back in task order.
    """
    if num_workers != 1:
        num_workers = min(resolve_num_workers(num_workers), len(tasks))
    if num_workers <= 1 or len(tasks) <= 1:
        return [fn(*task) for task in tasks]
    logger.debug(f"[{operation}] running {len(tasks)} partitions on {num_workers} workers.")
    with ProcessPoolExecutor(max_workers=num_workers) as executor:
        futures = [executor.submit(fn, *task) for task in tasks]
        return [future.result() for future in futures]

def partition_count(num_workers: int) -> int:
    """
    Number of strided partitions for a worker count; 1 keeps everything in-process.
    """
    if num_workers == 1:
        return 1
    return resolve_num_workers(num_workers)
