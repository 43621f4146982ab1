"""Ingestion service core: resumable chunk uploads with validation,
unit-standardization checks, consent enforcement, encrypted storage, and
the library/chart query surface.

The HTTP layer (api.py) is a thin shim over this class, so tests and the
in-process orchestrator can drive it directly.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import uuid
from pathlib import Path
from typing import Optional

from drivelab.clock import Clock
from drivelab.model.digest import checksum
from drivelab.model.manifest import SessionManifest, SessionStatus
from drivelab.model.records import (
    STREAM_HEART,
    STREAM_LOCATION,
    STREAM_MOTION,
    STREAM_VEHICLE,
    ConsentProfile,
    ValidationReport,
    load_record,
)
from drivelab.model.framing import FrameError, iter_frames
from drivelab.model.revalidate import revalidate_manifest
from drivelab.server.accounts import Account, AccountStore
from drivelab.server.storage import ChunkVault, TamperedError

logger = logging.getLogger(__name__)

DEFAULT_SERIES_FIELD = {
    STREAM_MOTION: "accelerationZ",
    STREAM_LOCATION: "latitude",
    STREAM_HEART: "heartRate",
    STREAM_VEHICLE: "speed",
}


class ServiceError(Exception):
    """Carries an HTTP-ish status plus a stable error code."""

    def __init__(self, status: int, code: str, message: str = "", report: Optional[ValidationReport] = None):
        super().__init__(f"{code}: {message}" if message else code)
        self.status = status
        self.code = code
        self.message = message
        self.report = report


class _Upload:
    def __init__(self, upload_id: str, user_id: str, manifest: SessionManifest):
        self.upload_id = upload_id
        self.user_id = user_id
        self.manifest = manifest
        self.state = "open"  # open | complete | rejected
        # (stream, index) -> (plaintext digest, plaintext byte length)
        self.confirmed: dict[tuple[str, int], tuple[str, int]] = {}
        self.report: Optional[ValidationReport] = None
        self.lock = threading.Lock()

    def digest_of(self, key: tuple[str, int]) -> Optional[str]:
        entry = self.confirmed.get(key)
        return entry[0] if entry else None

    def bytes_confirmed(self) -> int:
        return sum(length for _, length in self.confirmed.values())

    def meta(self) -> dict:
        return {
            "uploadId": self.upload_id,
            "userId": self.user_id,
            "state": self.state,
            "manifest": self.manifest.to_dict(),
            "confirmed": [[s, i, d, n] for (s, i), (d, n) in sorted(self.confirmed.items())],
            "report": self.report.to_dict() if self.report else None,
        }

    @classmethod
    def from_meta(cls, d: dict) -> "_Upload":
        up = cls(d["uploadId"], d["userId"], SessionManifest.from_dict(d["manifest"]))
        up.state = d["state"]
        up.confirmed = {(s, int(i)): (dg, int(n)) for s, i, dg, n in d.get("confirmed", [])}
        if d.get("report"):
            up.report = ValidationReport.from_dict(d["report"])
        return up


class IngestionService:
    def __init__(self, data_dir: str | Path, master_key: bytes, clock: Optional[Clock] = None):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock or Clock()
        self.accounts = AccountStore(self.dir, clock=self.clock)
        self.vault = ChunkVault(master_key)
        self._uploads: dict[str, _Upload] = {}
        self._aborted: set[str] = set()
        self._lock = threading.Lock()
        (self.dir / "uploads").mkdir(exist_ok=True)
        self._load_uploads()

    # -- persistence ----------------------------------------------------

    def _upload_dir(self, upload_id: str) -> Path:
        return self.dir / "uploads" / upload_id

    def _save_upload(self, up: _Upload) -> None:
        d = self._upload_dir(up.upload_id)
        d.mkdir(parents=True, exist_ok=True)
        tmp = d / "meta.json.tmp"
        tmp.write_text(json.dumps(up.meta(), indent=2))
        os.replace(tmp, d / "meta.json")

    def _load_uploads(self) -> None:
        for d in (self.dir / "uploads").iterdir():
            meta = d / "meta.json"
            if meta.exists():
                up = _Upload.from_meta(json.loads(meta.read_text()))
                self._uploads[up.upload_id] = up

    # -- auth shims ------------------------------------------------------

    def authenticate(self, token: Optional[str]) -> Account:
        return self.accounts.authenticate(token)

    # -- consent -----------------------------------------------------------

    def set_consent(self, account: Account, profile_dict: dict) -> dict:
        profile = ConsentProfile.from_dict(profile_dict)
        self.accounts.set_consent(account, profile)
        return profile.to_dict()

    # -- uploads ------------------------------------------------------------

    def _get_upload(self, account: Account, upload_id: str) -> _Upload:
        up = self._uploads.get(upload_id)
        if up is None:
            if upload_id in self._aborted:
                raise ServiceError(404, "GONE", "upload was aborted")
            raise ServiceError(404, "UNKNOWN_UPLOAD", upload_id)
        if up.user_id != account.user_id:
            raise ServiceError(403, "FORBIDDEN", "upload belongs to another user")
        return up

    def _consent_check(self, manifest: SessionManifest, granted: ConsentProfile) -> ValidationReport:
        report = ValidationReport()
        for stream in manifest.streams:
            if not granted.allows_stream(stream):
                report.error("CONSENT_VIOLATION", f"stream {stream} not covered by consent", stream)
            if not manifest.consent.allows_stream(stream):
                report.error("CONSENT_VIOLATION", f"stream {stream} missing from the session's frozen consent", stream)
        return report

    def create_upload(self, account: Account, manifest_dict: dict) -> dict:
        try:
            manifest = SessionManifest.from_dict(manifest_dict)
        except (KeyError, ValueError, TypeError) as exc:
            raise ServiceError(422, "BAD_MANIFEST", str(exc)) from None
        # consent first: a privacy refusal must answer as such, not as a
        # structural manifest problem
        consent_report = self._consent_check(manifest, account.consent)
        if not consent_report.ok:
            self._notify(account.user_id, None, manifest.sessionId, consent_report)
            raise ServiceError(403, "CONSENT_VIOLATION", "upload violates privacy settings", consent_report)
        try:
            manifest.check_invariants()
        except ValueError as exc:
            raise ServiceError(422, "BAD_MANIFEST", str(exc)) from None
        with self._lock:
            for up in self._uploads.values():
                if up.user_id == account.user_id and up.manifest.sessionId == manifest.sessionId and up.state == "open":
                    return {"uploadId": up.upload_id}  # resumable: same open upload
            upload_id = str(uuid.uuid4())
            up = _Upload(upload_id, account.user_id, manifest)
            self._uploads[upload_id] = up
            self._save_upload(up)
        logger.info("upload %s created for session %s", upload_id, manifest.sessionId)
        return {"uploadId": upload_id}

    def put_chunk(self, account: Account, upload_id: str, stream: str, index: int,
                  data: bytes, digest: str) -> dict:
        up = self._get_upload(account, upload_id)
        if up.state != "open":
            raise ServiceError(409, "INVALID_STATE", f"upload is {up.state}")
        actual = checksum(data)
        if digest and actual != digest:
            raise ServiceError(422, "DIGEST_MISMATCH", "body does not match declared digest")
        with up.lock:
            listed = {(c.stream, c.index) for c in up.manifest.chunks}
            # a live upload's manifest snapshot grows client-side; membership
            # of late chunks is settled at complete() against the final manifest
            if up.manifest.status != SessionStatus.RECORDING and (stream, index) not in listed:
                raise ServiceError(422, "CHUNK_NOT_IN_MANIFEST", f"{stream}.{index}")
            prior = up.digest_of((stream, index))
            if prior is not None:
                if prior != actual:
                    raise ServiceError(409, "DIGEST_MISMATCH", "chunk already confirmed with different content")
                return {"confirmed": len(up.confirmed)}  # idempotent re-send
            self.vault.seal_to(self._upload_dir(upload_id) / f"{stream}.{index}.enc", data)
            up.confirmed[(stream, index)] = (actual, len(data))
            self._save_upload(up)
            return {"confirmed": len(up.confirmed)}

    def get_offset(self, account: Account, upload_id: str) -> dict:
        up = self._get_upload(account, upload_id)
        with up.lock:
            confirmed = sorted(up.confirmed)
            bytes_confirmed = up.bytes_confirmed()
        return {
            "uploadId": upload_id,
            "state": up.state,
            "confirmed": [[s, i] for s, i in confirmed],
            "bytesConfirmed": bytes_confirmed,
        }

    def _decrypting_reader(self, up: _Upload):
        def read(stream: str, index: int) -> Optional[bytes]:
            path = self._upload_dir(up.upload_id) / f"{stream}.{index}.enc"
            if (stream, index) not in up.confirmed or not path.exists():
                return None
            return self.vault.open_from(path)  # digest verified by revalidation

        return read

    def complete_upload(self, account: Account, upload_id: str,
                        final_manifest: Optional[dict] = None) -> dict:
        up = self._get_upload(account, upload_id)
        with up.lock:
            if up.state == "complete":
                return {"state": up.state, "report": up.report.to_dict() if up.report else {"ok": True}}
            report = ValidationReport()
            if final_manifest is not None:
                try:
                    manifest = SessionManifest.from_dict(final_manifest)
                    manifest.check_invariants()
                except (KeyError, ValueError, TypeError) as exc:
                    raise ServiceError(422, "BAD_MANIFEST", str(exc)) from None
                if manifest.sessionId != up.manifest.sessionId:
                    raise ServiceError(422, "BAD_MANIFEST", "final manifest names a different session")
                up.manifest = manifest
            if up.manifest.status == SessionStatus.RECORDING:
                report.error("MANIFEST_NOT_FINAL", "complete requires a finalized manifest")
            report.merge(self._consent_check(up.manifest, account.consent))

            listed = {(c.stream, c.index): c for c in up.manifest.chunks}
            for key in up.confirmed:
                if key not in listed:
                    report.error("CHUNK_NOT_IN_MANIFEST", f"{key[0]}.{key[1]} uploaded but not in manifest", key[0])
            for key, ref in listed.items():
                if key not in up.confirmed:
                    report.error("MISSING_CHUNK", f"{ref.filename()} never uploaded", ref.stream)
                elif up.digest_of(key) != ref.digest:
                    report.error("DIGEST_MISMATCH", f"{ref.filename()} stored digest differs from manifest", ref.stream)

            if report.ok:
                try:
                    report.merge(revalidate_manifest(up.manifest, self._decrypting_reader(up)))
                except TamperedError as exc:
                    report.error("TAMPERED", str(exc))

            up.report = report
            up.state = "complete" if report.ok else "rejected"
            self._save_upload(up)
        if not report.ok:
            self._notify(account.user_id, upload_id, up.manifest.sessionId, report)
            raise ServiceError(422, "VALIDATION_FAILED", "upload rejected", report)
        logger.info("upload %s complete (%d chunks)", upload_id, len(up.confirmed))
        return {"state": up.state, "report": report.to_dict()}

    def abort_upload(self, account: Account, upload_id: str) -> dict:
        up = self._get_upload(account, upload_id)
        with self._lock, up.lock:
            d = self._upload_dir(upload_id)
            for f in d.glob("*"):
                f.unlink()
            d.rmdir()
            del self._uploads[upload_id]
            self._aborted.add(upload_id)
        logger.info("upload %s aborted, stored chunks deleted", upload_id)
        return {"state": "aborted"}

    # -- notifications ---------------------------------------------------

    @property
    def _notifications_path(self) -> Path:
        return self.dir / "notifications.json"

    def _notify(self, user_id: str, upload_id: Optional[str], session_id: str,
                report: ValidationReport) -> None:
        entries = []
        if self._notifications_path.exists():
            entries = json.loads(self._notifications_path.read_text())
        entries.append({
            "userId": user_id,
            "t": self.clock.now_ms(),
            "uploadId": upload_id,
            "sessionId": session_id,
            "kind": "data-submission-problem",
            "report": report.to_dict(),
        })
        tmp = self._notifications_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(entries, indent=2))
        os.replace(tmp, self._notifications_path)

    def notifications(self, account: Account) -> list[dict]:
        if not self._notifications_path.exists():
            return []
        return [n for n in json.loads(self._notifications_path.read_text()) if n["userId"] == account.user_id]

    # -- library / charts -----------------------------------------------

    def _completed_uploads(self, account: Account) -> list[_Upload]:
        return [
            up for up in self._uploads.values()
            if up.user_id == account.user_id and up.state == "complete"
        ]

    def list_sessions(self, account: Account) -> list[dict]:
        ups = sorted(self._completed_uploads(account), key=lambda u: u.manifest.createdAt, reverse=True)
        return [up.manifest.to_dict() for up in ups]

    def _find_session(self, account: Account, session_id: str) -> _Upload:
        for up in self._uploads.values():
            if up.manifest.sessionId == session_id and up.state == "complete":
                if up.user_id != account.user_id:
                    raise ServiceError(403, "FORBIDDEN", "session belongs to another user")
                return up
        raise ServiceError(404, "NOT_FOUND", session_id)

    def _stream_points(self, up: _Upload, stream: str, field: str) -> list[tuple[float, float]]:
        points: list[tuple[float, float]] = []
        for ref in up.manifest.chunks_for(stream):
            data = self._decrypting_reader(up)(stream, ref.index)
            if data is None:
                continue
            try:
                frames = list(iter_frames(data, strict=True))
            except FrameError:
                raise ServiceError(500, "TAMPERED", f"chunk {ref.filename()} failed CRC after decryption")
            for frame in frames:
                rec = load_record(frame.payload)
                t = rec.get("t")
                if t is None:
                    continue
                if stream == STREAM_VEHICLE:
                    unit = {"speed": "km/h", "rpm": "rpm"}.get(field, field)
                    if rec.get("unit") == unit:
                        points.append((t, float(rec["value"])))
                elif field in rec and isinstance(rec[field], (int, float)):
                    points.append((t, float(rec[field])))
        return points

    def get_series(self, account: Account, session_id: str, stream: str,
                   points: int = 0, field: Optional[str] = None) -> dict:
        up = self._find_session(account, session_id)
        if stream not in up.manifest.streams:
            raise ServiceError(404, "NOT_FOUND", f"session has no {stream} stream")
        if stream not in DEFAULT_SERIES_FIELD:
            raise ServiceError(422, "BAD_STREAM", f"stream {stream} has no chartable series")
        field = field or DEFAULT_SERIES_FIELD[stream]
        series = self._stream_points(up, stream, field)
        series.sort(key=lambda p: p[0])
        if points and len(series) > points:
            series = downsample_minmax(series, points)
        return {
            "sessionId": session_id,
            "stream": stream,
            "field": field,
            "points": [[t, v] for t, v in series],
        }


def downsample_minmax(series: list[tuple[float, float]], target: int) -> list[tuple[float, float]]:
    """Per-bucket min and max, in time order, so spikes survive. Output
    is at most 2*target points and always contains the global extremes."""
    n = len(series)
    if n <= target:
        return list(series)
    out: list[tuple[float, float]] = []
    for b in range(target):
        lo = b * n // target
        hi = max(lo + 1, (b + 1) * n // target)
        bucket = series[lo:hi]
        i_min = min(range(len(bucket)), key=lambda i: bucket[i][1])
        i_max = max(range(len(bucket)), key=lambda i: bucket[i][1])
        picks = sorted({i_min, i_max})
        out.extend(bucket[i] for i in picks)
    return out
