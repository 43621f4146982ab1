"""Recorder agent core: session lifecycle, multi-stream sampling
schedulers, library operations, and live status.

One recording session at a time. Producer threads (one per stream) pace
timed sources against the clock and feed a single serialized journal
writer. Stopping joins every producer, flushes partial chunks, and
finalizes the manifest.
"""

from __future__ import annotations

import logging
import shutil
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Optional

from drivelab.clock import Clock
from drivelab.model.health import summarize_health
from drivelab.model.manifest import SessionManifest, SessionStatus
from drivelab.model.records import (
    ALL_STREAMS,
    STREAM_HEART,
    STREAM_LOCATION,
    STREAM_MOTION,
    STREAM_VEHICLE,
    STREAM_VIDEO_BACK,
    STREAM_VIDEO_FRONT,
    ConsentProfile,
    UserSettings,
    VehicleInfo,
)
from drivelab.model.vin import is_valid_vin
from drivelab.obd.pids import DEFAULT_POLL_PIDS, PidSpec
from drivelab.obd.protocol import AdapterError, AdapterState, ObdClient, Transport, poll
from drivelab.agent import journal as jn

logger = logging.getLogger(__name__)

# timed source: yields (rel_ms since session start, record dict)
TimedSource = Iterable[tuple[int, dict]]

OBD_POLL_HZ = 1.0


class AgentError(Exception):
    """Codes: ALREADY_RECORDING, NOT_RECORDING, CONSENT_DENIED,
    NOT_FOUND, SESSION_ACTIVE."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


@dataclass
class VehicleSource:
    """OBD endpoint plus the polling plan for the vehicle stream."""

    transport_factory: Callable[[], Transport]
    pids: tuple[PidSpec, ...] = DEFAULT_POLL_PIDS
    poll_hz: float = OBD_POLL_HZ
    max_cycles: Optional[int] = None  # None = poll until stopped
    stamp_base_ms: Optional[int] = None  # nominal-tick stamping for scripted runs


@dataclass
class DeviceSources:
    """Everything a session records from. Streams with no source are
    simply not recorded."""

    motion: Optional[TimedSource] = None
    location: Optional[TimedSource] = None
    heart: Optional[TimedSource] = None
    video_front: Optional[TimedSource] = None
    video_back: Optional[TimedSource] = None
    vehicle: Optional[VehicleSource] = None
    health_history: Optional[Mapping[str, list[tuple[int, float]]]] = None
    # reference time of the device timeline; defaults to the agent clock
    health_reference_ms: Optional[int] = None

    def available_streams(self) -> set[str]:
        out = set()
        if self.motion is not None:
            out.add(STREAM_MOTION)
        if self.location is not None:
            out.add(STREAM_LOCATION)
        if self.heart is not None:
            out.add(STREAM_HEART)
        if self.video_front is not None:
            out.add(STREAM_VIDEO_FRONT)
        if self.video_back is not None:
            out.add(STREAM_VIDEO_BACK)
        if self.vehicle is not None:
            out.add(STREAM_VEHICLE)
        return out


@dataclass
class Sampled:
    value: float
    t: int


@dataclass
class LiveStatus:
    recording: bool = False
    session_id: Optional[str] = None
    elapsed_ms: int = 0
    heart_rate: Optional[Sampled] = None
    vehicle_speed: Optional[Sampled] = None
    acceleration_z: Optional[Sampled] = None
    obd_state: str = AdapterState.DISCONNECTED
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def tag(s: Optional[Sampled]):
            return None if s is None else {"value": s.value, "t": s.t}

        return {
            "recording": self.recording,
            "sessionId": self.session_id,
            "elapsedMs": self.elapsed_ms,
            "heartRate": tag(self.heart_rate),
            "vehicleSpeed": tag(self.vehicle_speed),
            "accelerationZ": tag(self.acceleration_z),
            "obdState": self.obd_state,
            "warnings": list(self.warnings),
        }


class _ActiveSession:
    def __init__(self, manifest: SessionManifest, journal: jn.SessionJournal, start_clock_ms: int):
        self.manifest = manifest
        self.journal = journal
        self.start_clock_ms = start_clock_ms
        self.stop_event = threading.Event()
        self.threads: list[threading.Thread] = []
        self.write_lock = threading.Lock()  # one serialized journal writer
        self.failed: Optional[str] = None
        self.obd_client: Optional[ObdClient] = None


class RecorderAgent:
    def __init__(self, data_dir: str | Path, clock: Optional[Clock] = None,
                 user_id: str = "local", settings: Optional[UserSettings] = None,
                 chunk_bytes: int = jn.CHUNK_BYTES):
        self.data_dir = Path(data_dir)
        self.clock = clock or Clock()
        self.user_id = user_id
        self.settings = settings or UserSettings()
        self.chunk_bytes = chunk_bytes
        self.status = LiveStatus()
        self.on_finalized: Optional[Callable[[SessionManifest], None]] = None
        self._active: Optional[_ActiveSession] = None
        self._lock = threading.Lock()
        (self.data_dir / "sessions").mkdir(parents=True, exist_ok=True)
        self._recover_leftovers()

    def _recover_leftovers(self) -> None:
        for d in sorted((self.data_dir / "sessions").iterdir()):
            if not (d / "manifest.json").exists():
                continue
            manifest = jn.load_manifest(d)
            if manifest.status == SessionStatus.RECORDING:
                logger.warning("recovering session %s left recording by a previous run", manifest.sessionId)
                jn.recover_session(self.data_dir, manifest.sessionId)

    # -- session lifecycle -------------------------------------------

    def start_session(
        self,
        settings: UserSettings,
        consent: ConsentProfile,
        sources: DeviceSources,
        streams: Optional[Iterable[str]] = None,
    ) -> str:
        """Begin recording. With an explicit `streams` list, a stream
        whose category lacks consent raises CONSENT_DENIED; by default
        the recorded set is the consented subset of available sources."""
        settings.validate()
        with self._lock:
            if self._active is not None:
                raise AgentError("ALREADY_RECORDING", self._active.manifest.sessionId)

            available = sources.available_streams()
            if streams is not None:
                requested = list(streams)
                for stream in requested:
                    if not consent.allows_stream(stream):
                        raise AgentError("CONSENT_DENIED", stream)
                    if stream not in available:
                        raise AgentError("NOT_FOUND", f"no source for stream {stream}")
            else:
                requested = [s for s in ALL_STREAMS if s in available and consent.allows_stream(s)]

            session_id = str(uuid.uuid4())
            now = self.clock.now_ms()
            manifest = SessionManifest(
                sessionId=session_id,
                userId=self.user_id,
                createdAt=now,
                settings=settings,
                consent=consent,
                streams=list(requested),
                status=SessionStatus.RECORDING,
            )
            if consent.health and sources.health_history is not None:
                reference = sources.health_reference_ms if sources.health_reference_ms is not None else now
                manifest.healthSnapshot = summarize_health(sources.health_history, reference)

            journal = jn.SessionJournal(self.data_dir, manifest, chunk_bytes=self.chunk_bytes)
            active = _ActiveSession(manifest, journal, now)
            self._active = active
            self.status = LiveStatus(recording=True, session_id=session_id)

        timed = {
            STREAM_MOTION: sources.motion,
            STREAM_LOCATION: sources.location,
            STREAM_HEART: sources.heart,
            STREAM_VIDEO_FRONT: sources.video_front,
            STREAM_VIDEO_BACK: sources.video_back,
        }
        for stream in requested:
            if stream == STREAM_VEHICLE:
                worker = threading.Thread(
                    target=self._vehicle_worker, args=(active, sources.vehicle),
                    name=f"rec-{stream}", daemon=True,
                )
            else:
                worker = threading.Thread(
                    target=self._stream_worker, args=(active, stream, timed[stream]),
                    name=f"rec-{stream}", daemon=True,
                )
            active.threads.append(worker)
            worker.start()
        logger.info("session %s recording streams %s", session_id, requested)
        return session_id

    def stop_session(self, session_id: Optional[str] = None) -> SessionManifest:
        with self._lock:
            active = self._active
            if active is None or (session_id is not None and active.manifest.sessionId != session_id):
                raise AgentError("NOT_RECORDING")
            self._active = None
        active.stop_event.set()
        for t in active.threads:
            t.join(timeout=30)
        if active.obd_client is not None:
            active.obd_client.close()
        if active.failed:
            active.journal.mark_failed()
            self.status.recording = False
            raise AgentError("DISK_FULL", active.failed)
        manifest = active.journal.finalize()
        self.status.recording = False  # keep last-known labels for the console
        logger.info("session %s finalized: %d chunks", manifest.sessionId, len(manifest.chunks))
        if manifest.settings.automaticUpload and self.on_finalized is not None:
            self.on_finalized(manifest)
        return manifest

    def wait_for_sources(self, timeout_s: float = 300.0) -> bool:
        """Block until every producer thread of the active session has
        exhausted its source. True if they all finished."""
        active = self._active
        if active is None:
            return True
        deadline = None if timeout_s is None else (timeout_s)
        for t in active.threads:
            t.join(timeout=deadline)
            if t.is_alive():
                return False
        return True

    # -- producers ----------------------------------------------------

    def _wait_until(self, active: _ActiveSession, deadline_ms: int) -> bool:
        """Pace to a virtual deadline; False when stopping."""
        while not active.stop_event.is_set():
            remaining = deadline_ms - self.clock.now_ms()
            if remaining <= 0:
                return True
            self.clock.sleep(min(0.05, remaining / 1000.0))
        return False

    def _append(self, active: _ActiveSession, stream: str, record: dict) -> bool:
        try:
            with active.write_lock:
                active.journal.append(stream, record)
            return True
        except jn.JournalError as exc:
            logger.error("journal append failed, failing session: %s", exc)
            active.failed = str(exc)
            active.stop_event.set()
            return False

    def _stream_worker(self, active: _ActiveSession, stream: str, source: TimedSource) -> None:
        for rel_ms, record in source:
            if not self._wait_until(active, active.start_clock_ms + rel_ms):
                return
            if not self._append(active, stream, record):
                return
            self._note_sample(stream, record)

    def _note_sample(self, stream: str, record: dict) -> None:
        t = int(record.get("t", 0))
        if stream == STREAM_HEART and "heartRate" in record:
            self.status.heart_rate = Sampled(record["heartRate"], t)
        elif stream == STREAM_MOTION and "accelerationZ" in record:
            self.status.acceleration_z = Sampled(record["accelerationZ"], t)
        elif stream == STREAM_VEHICLE and record.get("unit") == "km/h":
            self.status.vehicle_speed = Sampled(record["value"], t)
        self.status.elapsed_ms = max(self.status.elapsed_ms, 0)

    def _drop_stream(self, active: _ActiveSession, stream: str, reason: str) -> None:
        logger.warning("omitting %s stream: %s", stream, reason)
        self.status.warnings.append(f"{stream}: {reason}")
        with active.write_lock:
            if stream in active.manifest.streams:
                active.manifest.streams.remove(stream)

    def _vehicle_worker(self, active: _ActiveSession, source: VehicleSource) -> None:
        self.status.obd_state = AdapterState.HANDSHAKING
        try:
            transport = source.transport_factory()
        except OSError as exc:
            self.status.obd_state = AdapterState.FAILED
            self._drop_stream(active, STREAM_VEHICLE, f"OBD_UNAVAILABLE: {exc}")
            return
        client = ObdClient(transport, clock=self.clock)
        active.obd_client = client
        client.handshake()
        self.status.obd_state = client.state
        if client.state != AdapterState.CONNECTED:
            self._drop_stream(active, STREAM_VEHICLE, "OBD_UNAVAILABLE: handshake failed")
            client.close()
            return

        try:
            vin = client.request_vin()
            if is_valid_vin(vin):
                from drivelab.model.vin import decode_vin

                active.manifest.vehicle = VehicleInfo(vin=vin, modelYear=decode_vin(vin)["modelYear"])
            else:
                self.status.warnings.append(f"vehicle: VIN {vin!r} failed the check digit")
        except AdapterError as exc:
            self.status.warnings.append(f"vehicle: VIN unavailable ({exc.code})")

        for event in poll(
            client,
            source.pids,
            source.poll_hz,
            stop=active.stop_event,
            max_cycles=source.max_cycles,
            stamp_base_ms=source.stamp_base_ms,
        ):
            if event.kind == "reading":
                if not self._append(active, STREAM_VEHICLE, event.reading.to_record()):
                    return
                self._note_sample(STREAM_VEHICLE, event.reading.to_record())
            elif event.kind == "disconnected":
                self.status.obd_state = client.state
                self.status.warnings.append("vehicle: adapter disconnected mid-session")
                return
        self.status.obd_state = client.state

    # -- live status ---------------------------------------------------

    def live_status(self) -> LiveStatus:
        active = self._active
        if active is not None:
            self.status.elapsed_ms = self.clock.now_ms() - active.start_clock_ms
        return self.status

    # -- library --------------------------------------------------------

    def _session_dir(self, session_id: str) -> Path:
        d = jn.session_dir(self.data_dir, session_id)
        if not (d / "manifest.json").exists():
            raise AgentError("NOT_FOUND", session_id)
        return d

    def list_sessions(self) -> list[SessionManifest]:
        out = []
        root = self.data_dir / "sessions"
        for d in root.iterdir():
            if (d / "manifest.json").exists():
                out.append(jn.load_manifest(d))
        out.sort(key=lambda m: m.createdAt, reverse=True)
        return out

    def get_manifest(self, session_id: str) -> SessionManifest:
        return jn.load_manifest(self._session_dir(session_id))

    def _guard_not_active(self, session_id: str) -> None:
        active = self._active
        if active is not None and active.manifest.sessionId == session_id:
            raise AgentError("SESSION_ACTIVE", session_id)

    def delete_session(self, session_id: str) -> None:
        """Remove chunks first, manifest last, so a partial delete is
        still recognizable (and re-deletable) rather than half-orphaned."""
        d = self._session_dir(session_id)
        self._guard_not_active(session_id)
        for chunk in sorted(d.glob("*.chunk")):
            chunk.unlink()
        (d / "manifest.json").unlink()
        shutil.rmtree(d, ignore_errors=True)

    def open_session(self, session_id: str) -> Iterator[tuple[str, dict]]:
        d = self._session_dir(session_id)
        self._guard_not_active(session_id)
        manifest = jn.load_manifest(d)
        return jn.iter_session_records(d, manifest)

    def revalidate(self, session_id: str):
        from drivelab.model.revalidate import revalidate_manifest

        d = self._session_dir(session_id)
        manifest = jn.load_manifest(d)
        return revalidate_manifest(manifest, jn.local_chunk_reader(d))
