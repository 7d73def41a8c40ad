#!/usr/bin/env python3
"""
Deterministic parallel batch runner

Splits an ensemble into fixed-size chunks and evaluates them on a thread
pool. Chunk boundaries depend only on the chunk size, and results are
reassembled by chunk index, so the output is bit-identical for any
number of workers. numpy releases the GIL inside LAPACK and the batched
matrix kernels, which is where the trajectories spend their time.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

import numpy as np
import structlog

logger = structlog.get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_CHUNK_SIZE = 64


def default_workers() -> int:
    """Worker count from UQCM_WORKERS, else the CPU count capped at 8"""
    env = os.getenv("UQCM_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logger.warning("Ignoring invalid UQCM_WORKERS", value=env)
    return max(1, min(8, os.cpu_count() or 1))


@dataclass
class ChunkResult:
    """Output of one chunk of an ensemble"""
    index: int
    start: int
    stop: int
    value: Any = None
    processing_time: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)


class EnsembleRunner:
    """Fixed-chunk thread-pool evaluation of trajectory ensembles"""

    def __init__(self, max_workers: Optional[int] = None, chunk_size: int = DEFAULT_CHUNK_SIZE):
        """
        Initialize ensemble runner

        Args:
            max_workers: Thread count (defaults to default_workers())
            chunk_size: Trajectories per chunk; fixes the reduction order
        """
        if chunk_size < 1:
            raise ValueError(f"chunk_size must be positive, got {chunk_size}")
        self.max_workers = max_workers or default_workers()
        self.chunk_size = chunk_size

    def chunks(self, n_items: int) -> List[range]:
        return [range(a, min(a + self.chunk_size, n_items)) for a in range(0, n_items, self.chunk_size)]

    def run(self, n_items: int, chunk_fn: Callable[[int, int], R], label: str = "ensemble") -> List[R]:
        """
        Evaluate chunk_fn(start, stop) over all chunks

        Returns:
            Chunk outputs ordered by chunk index

        Raises:
            Whatever chunk_fn raised first, after the pool has drained
        """
        spans = self.chunks(n_items)
        start_time = time.time()
        results: List[Optional[ChunkResult]] = [None] * len(spans)

        if self.max_workers == 1 or len(spans) <= 1:
            for i, span in enumerate(spans):
                results[i] = self._evaluate(i, span, chunk_fn)
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                future_to_index = {
                    executor.submit(self._evaluate, i, span, chunk_fn): i
                    for i, span in enumerate(spans)
                }
                for future in as_completed(future_to_index):
                    i = future_to_index[future]
                    try:
                        results[i] = future.result()
                    except Exception as e:
                        logger.error("Chunk failed", label=label, chunk=i, error=str(e))
                        raise
                    logger.debug("Chunk completed", label=label, chunk=i, total=len(spans))

        logger.debug(
            "Ensemble completed",
            label=label,
            items=n_items,
            chunks=len(spans),
            workers=self.max_workers,
            total_time=f"{time.time() - start_time:.2f}s",
        )
        return [r.value for r in results]

    def run_stacked(self, n_items: int, chunk_fn: Callable[[int, int], np.ndarray],
                    label: str = "ensemble") -> np.ndarray:
        """run() followed by concatenation along the first axis"""
        return np.concatenate(self.run(n_items, chunk_fn, label), axis=0)

    def map_ordered(self, fn: Callable[[T], R], items: Sequence[T], label: str = "batch") -> List[R]:
        """Apply fn to each item in parallel, results in input order"""
        items = list(items)
        if self.max_workers == 1 or len(items) <= 1:
            return [fn(x) for x in items]
        out: List[Optional[R]] = [None] * len(items)
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            future_to_index = {executor.submit(fn, x): i for i, x in enumerate(items)}
            for future in as_completed(future_to_index):
                i = future_to_index[future]
                out[i] = future.result()
                logger.debug("Item completed", label=label, index=i, total=len(items))
        return out

    @staticmethod
    def _evaluate(index: int, span: range, chunk_fn: Callable[[int, int], R]) -> ChunkResult:
        start = time.time()
        value = chunk_fn(span.start, span.stop)
        return ChunkResult(index=index, start=span.start, stop=span.stop, value=value,
                           processing_time=time.time() - start)
