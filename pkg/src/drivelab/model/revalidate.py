"""Pre-upload / post-ingest revalidation of a finalized session.

Recomputes every chunk digest and record CRC, then re-runs record
validation over a deterministic systematic sample: every 100th record
plus the first and last of each stream. Used identically on the agent
(local directory reader) and the server (decrypting reader).
"""

from __future__ import annotations

from typing import Callable, Optional

from drivelab.model.digest import checksum
from drivelab.model.framing import FrameError, iter_frames
from drivelab.model.manifest import SessionManifest, SessionStatus
from drivelab.model.records import load_record
from drivelab.model.units import CANONICAL_UNITS
from drivelab.model.validation import validate_record

# Maps (stream, index) to chunk bytes, or None when the chunk is gone.
ChunkReader = Callable[[str, int], Optional[bytes]]

SAMPLE_EVERY = 100


def _sample_indices(count: int) -> list[int]:
    if count == 0:
        return []
    picks = set(range(0, count, SAMPLE_EVERY))
    picks.add(0)
    picks.add(count - 1)
    return sorted(picks)


def revalidate_manifest(manifest: SessionManifest, reader: ChunkReader):
    """Deep-check a finalized session. Returns a ValidationReport."""
    from drivelab.model.records import ValidationReport

    report = ValidationReport()
    if manifest.status == SessionStatus.RECORDING:
        report.error("SESSION_ACTIVE", "cannot revalidate a session that is still recording")
        return report

    for stream in manifest.streams:
        records: list[dict] = []
        timestamps: list[float] = []
        broken = False
        for ref in manifest.chunks_for(stream):
            data = reader(stream, ref.index)
            if data is None:
                report.error("MISSING_CHUNK", f"chunk {ref.filename()} listed in manifest but absent", stream, None)
                broken = True
                continue
            if len(data) != ref.byteLength:
                report.error(
                    "LENGTH_MISMATCH",
                    f"chunk {ref.filename()} is {len(data)} bytes, manifest says {ref.byteLength}",
                    stream,
                )
                broken = True
            digest = checksum(data)
            if digest != ref.digest:
                report.error(
                    "DIGEST_MISMATCH",
                    f"chunk {ref.filename()} digest {digest[:12]}... != manifest {ref.digest[:12]}...",
                    stream,
                )
                broken = True
                continue
            try:
                for frame in iter_frames(data, strict=True):
                    records.append(load_record(frame.payload))
            except FrameError as exc:
                report.error("CRC_MISMATCH", f"chunk {ref.filename()}: {exc}", stream)
                broken = True

        if broken:
            continue

        for i, rec in enumerate(records):
            t = rec.get("t")
            if isinstance(t, (int, float)):
                timestamps.append(t)
        if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
            report.error("T_NOT_INCREASING", "timestamps not strictly increasing within stream", stream)

        if stream == "vehicle":
            for i, rec in enumerate(records):
                unit = rec.get("unit")
                if unit is not None and unit not in CANONICAL_UNITS:
                    report.error("UNIT_NONCANONICAL", f"unit {unit!r} is not canonical", stream, i)

        for i in _sample_indices(len(records)):
            report.merge(validate_record(records[i], stream, manifest.consent, record_index=i))

    return report
