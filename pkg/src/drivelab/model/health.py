"""Pre-drive health summarization over a fixed 5-day lookback window."""

from __future__ import annotations

from typing import Iterable, Mapping

from drivelab.model.records import HealthSnapshot

HEALTH_WINDOW_DAYS = 5
HEALTH_WINDOW_MS = HEALTH_WINDOW_DAYS * 24 * 60 * 60 * 1000  # 432,000,000 ms


def summarize_health(
    raw: Mapping[str, Iterable[tuple[int, float]]],
    reference_time_ms: int,
) -> HealthSnapshot:
    """Build a HealthSnapshot from timestamped series per category.

    Keeps only samples with timestamp in the closed window
    [reference_time_ms - 5 days, reference_time_ms], in chronological
    order. Unknown categories are ignored; missing ones come out empty.
    """
    lo = reference_time_ms - HEALTH_WINDOW_MS
    snapshot = HealthSnapshot(referenceTime=reference_time_ms)
    for category in HealthSnapshot.CATEGORIES:
        series = raw.get(category, ())
        kept = sorted((t, v) for t, v in series if lo <= t <= reference_time_ms)
        getattr(snapshot, category).extend(v for _, v in kept)
    return snapshot
