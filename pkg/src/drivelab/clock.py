"""Injectable time source.

Every component that sleeps or stamps wall time takes a Clock so test
runs can be time-compressed without changing tick counts or timestamps.
"""

from __future__ import annotations

import threading
import time


class Clock:
    """Real-time clock. now_ms() is epoch milliseconds."""

    def now_ms(self) -> int:
        return int(time.time() * 1000)

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)

    def wait_until_ms(self, deadline_ms: int) -> None:
        self.sleep((deadline_ms - self.now_ms()) / 1000.0)


class ScaledClock(Clock):
    """Clock that runs `speed` times faster than wall time.

    Virtual time starts at the real epoch time of construction, so
    timestamps stay plausible while sleeps shrink by the speed factor.
    """

    def __init__(self, speed: float = 1.0):
        if speed <= 0:
            raise ValueError("speed must be positive")
        self.speed = speed
        self._real_origin = time.monotonic()
        self._virtual_origin_ms = int(time.time() * 1000)

    def now_ms(self) -> int:
        elapsed = time.monotonic() - self._real_origin
        return self._virtual_origin_ms + int(elapsed * self.speed * 1000)

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds / self.speed)


class ManualClock(Clock):
    """Clock advanced explicitly by tests; sleep() advances it."""

    def __init__(self, start_ms: int = 0):
        self._now_ms = start_ms
        self._lock = threading.Lock()

    def now_ms(self) -> int:
        with self._lock:
            return self._now_ms

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self.advance_ms(int(seconds * 1000))

    def advance_ms(self, delta_ms: int) -> None:
        with self._lock:
            self._now_ms += delta_ms
