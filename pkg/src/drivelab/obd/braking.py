"""Braking-event derivation from a speed series.

An event spans every maximal interval where the finite-difference
deceleration stays at or above 0.2 g for at least 500 ms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

G_MS2 = 9.80665
BRAKING_THRESHOLD_G = 0.2
BRAKING_MIN_DURATION_MS = 500


@dataclass(frozen=True)
class BrakingEvent:
    t_start: int  # unix-time ms
    t_end: int
    peak_decel: float  # g


def detect_braking(
    speed_series: Sequence[tuple[int, float]],
    threshold_g: float = BRAKING_THRESHOLD_G,
    min_duration_ms: int = BRAKING_MIN_DURATION_MS,
) -> list[BrakingEvent]:
    """Find sustained hard-deceleration intervals in a (t ms, km/h) series.

    The series must be time-ordered. Output events are disjoint and
    time-ordered; each records the peak deceleration it contains.
    """
    if any(b[0] <= a[0] for a, b in zip(speed_series, speed_series[1:])):
        raise ValueError("speed series must be strictly time-ordered")

    events: list[BrakingEvent] = []
    start: int | None = None
    peak = 0.0

    def flush(end_ms: int) -> None:
        nonlocal start, peak
        if start is not None and end_ms - start >= min_duration_ms:
            events.append(BrakingEvent(t_start=start, t_end=end_ms, peak_decel=peak))
        start, peak = None, 0.0

    for (t0, v0), (t1, v1) in zip(speed_series, speed_series[1:]):
        dt_s = (t1 - t0) / 1000.0
        decel_g = ((v0 - v1) / 3.6) / dt_s / G_MS2  # km/h over s -> m/s^2 -> g
        if decel_g >= threshold_g:
            if start is None:
                start = t0
            peak = max(peak, decel_g)
        else:
            flush(t0)
    if speed_series:
        flush(speed_series[-1][0])
    return events
