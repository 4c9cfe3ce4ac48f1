"""Sliding-window rate limiting with an injectable clock.

The generation budget is 15 requests per minute, read as a continuous
sliding-window constraint: at most `max_requests` calls may be issued inside
any window of `window_seconds`. A call issued exactly one window after
another no longer shares a window with it.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Protocol


@dataclass(frozen=True)
class RateLimitPolicy:
    """Request budget plus retry/backoff behaviour for the generation stage."""

    max_requests: int = 15
    window_seconds: float = 60.0
    max_retries: int = 3
    backoff_base_seconds: float = 2.0

    def __post_init__(self) -> None:
        if self.max_requests < 1:
            raise ValueError("max_requests must be at least 1")
        if self.window_seconds <= 0:
            raise ValueError("window_seconds must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.backoff_base_seconds < 0:
            raise ValueError("backoff_base_seconds must be non-negative")

    def backoff_delay(self, attempt: int) -> float:
        """Delay before retry `attempt` (0-based): base doubling each time."""
        return self.backoff_base_seconds * (2.0 ** attempt)


class Clock(Protocol):
    def now(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class SystemClock:
    """Wall-clock time; used for live backends."""

    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class SimulatedClock:
    """Deterministic clock for tests: sleeping advances time instantly."""

    def __init__(self, start: float = 0.0):
        self._now = start

    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float) -> None:
        self._now += max(0.0, seconds)


class SlidingWindowRateLimiter:
    """Blocks (via the clock) until issuing one more call keeps every window legal.

    Expiry is checked with a 1e-9s tolerance: sleeping `oldest + window - now`
    can land a few float ulps short of the boundary, and without the tolerance
    the re-sleep amount may be too small to advance the clock at all.
    """

    _EPSILON = 1e-9

    def __init__(self, max_requests: int, window_seconds: float, clock: Clock):
        if max_requests < 1:
            raise ValueError("max_requests must be at least 1")
        if window_seconds <= 0:
            raise ValueError("window_seconds must be positive")
        self._max = max_requests
        self._window = window_seconds
        self._clock = clock
        self._calls: deque[float] = deque()
        self._issued: list[float] = []
        self._lock = threading.Lock()

    @property
    def issued_at(self) -> tuple[float, ...]:
        """Timestamps of every call ever admitted, in issue order."""
        with self._lock:
            return tuple(self._issued)

    def acquire(self) -> float:
        """Wait for a free slot, record the call, and return its timestamp."""
        while True:
            with self._lock:
                now = self._clock.now()
                # A call exactly `window` old has left the window.
                while self._calls and self._calls[0] <= now - self._window + self._EPSILON:
                    self._calls.popleft()
                if len(self._calls) < self._max:
                    self._calls.append(now)
                    self._issued.append(now)
                    return now
                wait = self._calls[0] + self._window - now
            self._clock.sleep(wait)
