"""Crash-safe chunked journal for one recording session.

Layout: <data_dir>/sessions/<sessionId>/manifest.json plus one
<stream>.<index>.chunk file per chunk. Frames are CRC-framed canonical
JSON records (see model.framing). A chunk rotates once it reaches 4 MiB:
it is flushed, fsynced, digested, and recorded in the manifest before
the next chunk opens — so a crash can only ever cost the CRC-invalid
tail of the single active chunk per stream.
"""

from __future__ import annotations

import hashlib
import logging
import os
from pathlib import Path
from typing import Iterator, Optional

from drivelab.model.digest import checksum
from drivelab.model.framing import encode_frame, iter_frames, valid_prefix_length
from drivelab.model.manifest import ChunkRef, SessionManifest, SessionStatus
from drivelab.model.records import dump_record, load_record

logger = logging.getLogger(__name__)

CHUNK_BYTES = 4 * 1024 * 1024


class JournalError(Exception):
    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


def session_dir(data_dir: str | Path, session_id: str) -> Path:
    return Path(data_dir) / "sessions" / session_id


def save_manifest(directory: Path, manifest: SessionManifest) -> None:
    """Atomic write: temp file then rename."""
    tmp = directory / "manifest.json.tmp"
    tmp.write_text(manifest.to_json())
    os.replace(tmp, directory / "manifest.json")


def load_manifest(directory: Path) -> SessionManifest:
    return SessionManifest.from_json((directory / "manifest.json").read_text())


class _ActiveChunk:
    def __init__(self, path: Path, index: int):
        self.path = path
        self.index = index
        self.fh = open(path, "ab")
        self.bytes = self.fh.tell()
        # running digest so rotation never re-reads the chunk
        self.hasher = hashlib.sha256()
        if self.bytes:
            self.hasher.update(path.read_bytes())


class SessionJournal:
    """Serialized writer for one session's chunk files.

    Appends from any producer thread are serialized by the caller (the
    recorder holds one lock per session); this class itself only
    guarantees rotation atomicity against the manifest.
    """

    def __init__(self, data_dir: str | Path, manifest: SessionManifest,
                 chunk_bytes: int = CHUNK_BYTES):
        self.dir = session_dir(data_dir, manifest.sessionId)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest
        self.chunk_bytes = chunk_bytes
        self._active: dict[str, _ActiveChunk] = {}
        save_manifest(self.dir, self.manifest)

    def _open_active(self, stream: str) -> _ActiveChunk:
        active = self._active.get(stream)
        if active is None:
            index = len(self.manifest.chunks_for(stream))
            active = _ActiveChunk(self.dir / f"{stream}.{index}.chunk", index)
            self._active[stream] = active
        return active

    def append(self, stream: str, record: dict) -> tuple[int, int]:
        """Append one record; returns (chunk index, offset in chunk)."""
        frame = encode_frame(dump_record(record))
        try:
            active = self._open_active(stream)
            if active.bytes > 0 and active.bytes + len(frame) > self.chunk_bytes:
                self._close_active(stream)
                active = self._open_active(stream)
            offset = active.bytes
            active.fh.write(frame)
            active.hasher.update(frame)
            active.bytes += len(frame)
            return active.index, offset
        except OSError as exc:
            raise JournalError("DISK_FULL", str(exc)) from exc

    def _close_active(self, stream: str) -> Optional[ChunkRef]:
        active = self._active.pop(stream, None)
        if active is None:
            return None
        active.fh.flush()
        os.fsync(active.fh.fileno())
        active.fh.close()
        if active.bytes == 0:
            active.path.unlink(missing_ok=True)
            return None
        ref = ChunkRef(
            index=active.index,
            stream=stream,
            byteLength=active.bytes,
            digest=active.hasher.hexdigest(),
        )
        self.manifest.chunks.append(ref)
        save_manifest(self.dir, self.manifest)
        return ref

    def finalize(self) -> SessionManifest:
        """Flush every active chunk and mark the session finalized."""
        for stream in list(self._active):
            self._close_active(stream)
        self.manifest.status = SessionStatus.FINALIZED
        save_manifest(self.dir, self.manifest)
        return self.manifest

    def mark_failed(self) -> None:
        for stream in list(self._active):
            try:
                self._close_active(stream)
            except OSError:
                pass
        self.manifest.status = SessionStatus.FAILED
        save_manifest(self.dir, self.manifest)


def recover_session(data_dir: str | Path, session_id: str) -> SessionManifest:
    """Recover a session left in `recording` state by a crash.

    Closed (manifest-listed) chunks are kept as-is. Each stream's active
    chunk is truncated to its longest CRC-valid frame prefix, digested,
    and promoted into the manifest; the session is then finalized.
    """
    directory = session_dir(data_dir, session_id)
    manifest = load_manifest(directory)
    if manifest.status != SessionStatus.RECORDING:
        return manifest
    for stream in manifest.streams:
        index = len(manifest.chunks_for(stream))
        path = directory / f"{stream}.{index}.chunk"
        if not path.exists():
            continue
        data = path.read_bytes()
        keep = valid_prefix_length(data)
        if keep == 0:
            path.unlink()
            continue
        if keep < len(data):
            logger.warning("%s: dropping %d CRC-invalid tail bytes of %s", session_id, len(data) - keep, path.name)
            with open(path, "r+b") as fh:
                fh.truncate(keep)
            data = data[:keep]
        manifest.chunks.append(ChunkRef(index=index, stream=stream, byteLength=keep, digest=checksum(data)))
    manifest.status = SessionStatus.FINALIZED
    save_manifest(directory, manifest)
    return manifest


def local_chunk_reader(directory: Path):
    """ChunkReader over a session directory, for revalidation."""

    def read(stream: str, index: int) -> Optional[bytes]:
        path = directory / f"{stream}.{index}.chunk"
        if not path.exists():
            return None
        return path.read_bytes()

    return read


def iter_stream_records(directory: Path, manifest: SessionManifest, stream: str) -> Iterator[dict]:
    for ref in manifest.chunks_for(stream):
        data = (directory / ref.filename()).read_bytes()
        for frame in iter_frames(data, strict=True):
            yield load_record(frame.payload)


def iter_session_records(directory: Path, manifest: SessionManifest) -> Iterator[tuple[str, dict]]:
    """All records of all streams merged in timestamp order."""
    import heapq

    def tagged(stream):
        for rec in iter_stream_records(directory, manifest, stream):
            yield rec.get("t", 0), stream, rec

    merged = heapq.merge(*(tagged(s) for s in manifest.streams), key=lambda x: x[0])
    for _, stream, rec in merged:
        yield stream, rec
