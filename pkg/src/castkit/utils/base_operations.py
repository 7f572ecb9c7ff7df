"""Base class for toolkit operations."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable


class BaseOperations:
    """Base class for all operation classes.

    Operation objects hold no per-call state, so one instance can be shared by
    several threads.
    """

    def __init__(self, workers: int = 1) -> None:
        """Initialize the operations class.

        Args:
            workers: Number of threads used for per-query work (1 = sequential).

        Raises:
            ValueError: If workers is smaller than 1.

        """
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self._workers = workers
        self._logger = logging.getLogger(type(self).__module__)

    @property
    def workers(self) -> int:
        """Number of threads used for per-query work."""
        return self._workers

    def _map_ordered[T, R](
        self,
        func: Callable[[T], R],
        items: Iterable[T],
        workers: int | None = None,
    ) -> list[R]:
        """Apply `func` to every item, optionally on a thread pool.

        Results come back in input order whatever the completion order; the
        first exception raised by `func` propagates.

        Args:
            func: Function applied to each item.
            items: The work items (typically query ids).
            workers: Override of the instance's worker count.

        Returns:
            The results in input order.

        """
        pool_size = workers or self._workers
        items = list(items)
        if pool_size == 1 or len(items) < 2:
            return [func(item) for item in items]
        # Executor.map yields in submission order.
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            return list(pool.map(func, items))

    def _validate_positive(self, value: int, name: str) -> None:
        """Validate that an integer argument is at least 1.

        Args:
            value: The value to check.
            name: Argument name used in the error message.

        Raises:
            ValueError: If the value is smaller than 1.

        """
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")

    def _validate_unit_interval(self, value: float, name: str) -> None:
        """Validate that a real argument lies in [0, 1].

        Args:
            value: The value to check.
            name: Argument name used in the error message.

        Raises:
            ValueError: If the value is outside [0, 1].

        """
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {value}")

