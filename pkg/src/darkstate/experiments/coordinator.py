"""Bounded-concurrency execution of independent sweep points."""

import asyncio
import logging
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Dict, Generic, List, Optional, Sequence, Tuple, TypeVar, cast

logger = logging.getLogger(__name__)

T = TypeVar("T")
SweepKey = Tuple[Any, ...]


class PointStatus(Enum):
    """Sweep point status enumeration."""

    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class SweepPoint(Generic[T]):
    """One independent computation of a sweep.

    Attributes:
        key: Sweep coordinates; results are ordered by this key
        task: Zero-argument callable doing the work
        status: Current status
        result: Return value once completed
        error: Exception raised by the task, if any
        start_time: When the task started
        end_time: When the task finished
    """

    key: SweepKey
    task: Callable[[], T]
    status: PointStatus = PointStatus.PENDING
    result: Optional[T] = None
    error: Optional[BaseException] = None
    start_time: Optional[datetime] = None
    end_time: Optional[datetime] = None

    @property
    def duration(self) -> Optional[float]:
        """Wall-clock duration in seconds."""
        if self.start_time and self.end_time:
            return (self.end_time - self.start_time).total_seconds()
        return None


class SweepCoordinator(Generic[T]):
    """Runs sweep points in worker threads, at most max_concurrent at a time.

    numpy releases the GIL inside its linear algebra, so threads give real
    parallelism for the dense solves done per point.
    """

    def __init__(self, max_concurrent: int = 4) -> None:
        """Initialize the coordinator.

        Args:
            max_concurrent: Maximum number of points computed at once
        """
        if max_concurrent < 1:
            raise ValueError(f"max_concurrent must be >= 1, got {max_concurrent}")
        self.max_concurrent = max_concurrent
        self.points: Dict[SweepKey, SweepPoint[T]] = {}
        self._semaphore = asyncio.Semaphore(max_concurrent)

    async def execute_parallel(
        self, tasks: Sequence[Tuple[SweepKey, Callable[[], T]]]
    ) -> List[SweepPoint[T]]:
        """Run every task and return the points sorted by key.

        Failures are recorded on their point and do not stop the others.
        """
        self._semaphore = asyncio.Semaphore(self.max_concurrent)
        points = []
        for key, task in tasks:
            if key in self.points:
                raise ValueError(f"duplicate sweep key {key}")
            point: SweepPoint[T] = SweepPoint(key=key, task=task)
            self.points[key] = point
            points.append(point)

        await asyncio.gather(*(self._execute_single(p) for p in points), return_exceptions=True)
        return sorted(points, key=lambda p: p.key)

    async def _execute_single(self, point: SweepPoint[T]) -> None:
        async with self._semaphore:
            point.status = PointStatus.RUNNING
            point.start_time = datetime.now()
            try:
                point.result = await asyncio.to_thread(point.task)
                point.status = PointStatus.COMPLETED
            except Exception as e:
                point.status = PointStatus.FAILED
                point.error = e
                logger.debug(f"sweep point {point.key} failed: {e}")
            finally:
                point.end_time = datetime.now()

    def run(self, tasks: Sequence[Tuple[SweepKey, Callable[[], T]]]) -> List[T]:
        """Synchronous entry point: results sorted by key.

        Raises:
            Exception: The error of the first failed point in key order
        """
        points = asyncio.run(self.execute_parallel(tasks))
        for point in points:
            if point.status is PointStatus.FAILED and point.error is not None:
                raise point.error
        logger.info(f"sweep finished: {self.get_summary()}")
        return [cast(T, p.result) for p in points]

    def get_point(self, key: SweepKey) -> Optional[SweepPoint[T]]:
        return self.points.get(key)

    def get_summary(self) -> Dict[str, int]:
        """Counts of points by status."""
        summary = {"total": len(self.points)}
        for status in PointStatus:
            summary[status.value] = sum(1 for p in self.points.values() if p.status is status)
        return summary
