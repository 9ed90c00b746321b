"""Sliding-window request pacing shared by concurrent workers."""

from __future__ import annotations

import threading
import time
from collections import deque
from typing import Callable

WINDOW_SECONDS = 60.0


class RateLimiter:
    """Admits at most ``limit`` acquisitions per sliding 60 s window.

    Clock and sleep are injectable so pacing is assertable without
    real waiting.
    """

    def __init__(
        self,
        limit: int,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if limit < 1:
            raise ValueError("rate limit must be positive")
        self.limit = limit
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._issued: deque[float] = deque()

    def acquire(self) -> float:
        """Block until a slot is free; returns the admission timestamp."""
        while True:
            with self._lock:
                now = self._clock()
                while self._issued and now - self._issued[0] >= WINDOW_SECONDS:
                    self._issued.popleft()
                if len(self._issued) < self.limit:
                    self._issued.append(now)
                    return now
                wait = WINDOW_SECONDS - (now - self._issued[0])
            self._sleep(max(wait, 0.001))
