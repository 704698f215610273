"""Chunked scans over node indices.

Chunks are contiguous index ranges and results come back in index order,
so every reduction built on top is independent of the worker count.
"""
import logging
from typing import Callable, List, Optional, TypeVar

from joblib import Parallel, delayed

from ahlfors_fredholm.settings import worker_count

logger = logging.getLogger(__name__)

T = TypeVar('T')


def chunk_ranges(n: int, chunks: int) -> List[range]:
    chunks = max(1, min(chunks, n))
    bounds = [round(k * n / chunks) for k in range(chunks + 1)]
    return [range(bounds[k], bounds[k + 1]) for k in range(chunks) if bounds[k] < bounds[k + 1]]


def map_chunks(fn: Callable[[range], T], n: int, workers: Optional[int] = None,
               chunk_size: int = 64) -> List[T]:
    """Apply ``fn`` to contiguous chunks of ``range(n)``, results in order."""
    if n <= 0:
        return []
    workers = worker_count() if workers is None else workers
    ranges = chunk_ranges(n, max(1, -(-n // chunk_size)))
    if workers == 1 or len(ranges) == 1:
        return [fn(r) for r in ranges]
    logger.debug("scanning %d nodes in %d chunks on %d workers", n, len(ranges), workers)
    # threads: fn closes over the shared distance matrix
    return Parallel(n_jobs=workers, prefer="threads")(delayed(fn)(r) for r in ranges)
