"""Session manifest: the metadata record binding a recording's streams,
settings, consent, and chunk digests. Shared by agent and server."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from drivelab.model.records import (
    STREAM_CATEGORY,
    ConsentProfile,
    HealthSnapshot,
    UserSettings,
    VehicleInfo,
)


class SessionStatus:
    RECORDING = "recording"
    FINALIZED = "finalized"
    UPLOADING = "uploading"
    UPLOADED = "uploaded"
    FAILED = "failed"


@dataclass(frozen=True)
class ChunkRef:
    index: int
    stream: str
    byteLength: int
    digest: str

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "stream": self.stream,
            "byteLength": self.byteLength,
            "digest": self.digest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChunkRef":
        return cls(
            index=int(d["index"]),
            stream=d["stream"],
            byteLength=int(d["byteLength"]),
            digest=d["digest"],
        )

    def filename(self) -> str:
        return f"{self.stream}.{self.index}.chunk"


@dataclass
class SessionManifest:
    sessionId: str
    userId: str
    createdAt: int  # unix-time ms
    settings: UserSettings
    consent: ConsentProfile
    streams: list[str] = field(default_factory=list)
    chunks: list[ChunkRef] = field(default_factory=list)  # rotation (chronological) order
    status: str = SessionStatus.RECORDING
    vehicle: Optional[VehicleInfo] = None
    healthSnapshot: Optional[HealthSnapshot] = None

    def check_invariants(self) -> None:
        """Raise ValueError on a structurally inconsistent manifest."""
        per_stream: dict[str, list[int]] = {}
        for c in self.chunks:
            per_stream.setdefault(c.stream, []).append(c.index)
        for stream, indices in per_stream.items():
            if sorted(indices) != list(range(len(indices))):
                raise ValueError(f"chunk indices for {stream} not contiguous from 0: {sorted(indices)}")
        for stream in self.streams:
            if stream not in STREAM_CATEGORY:
                raise ValueError(f"unknown stream {stream!r}")
            if not self.consent.allows_stream(stream):
                raise ValueError(f"stream {stream!r} present without consent")
        if self.status != SessionStatus.RECORDING:
            for c in self.chunks:
                if not c.digest:
                    raise ValueError(f"finalized manifest missing digest for {c.filename()}")

    def chunks_for(self, stream: str) -> list[ChunkRef]:
        refs = [c for c in self.chunks if c.stream == stream]
        refs.sort(key=lambda c: c.index)
        return refs

    def total_bytes(self) -> int:
        return sum(c.byteLength for c in self.chunks)

    def to_dict(self) -> dict:
        return {
            "sessionId": self.sessionId,
            "userId": self.userId,
            "createdAt": self.createdAt,
            "settings": self.settings.to_dict(),
            "consent": self.consent.to_dict(),
            "streams": list(self.streams),
            "chunks": [c.to_dict() for c in self.chunks],
            "status": self.status,
            "vehicle": self.vehicle.to_dict() if self.vehicle else None,
            "healthSnapshot": self.healthSnapshot.to_dict() if self.healthSnapshot else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionManifest":
        return cls(
            sessionId=d["sessionId"],
            userId=d["userId"],
            createdAt=int(d["createdAt"]),
            settings=UserSettings.from_dict(d["settings"]),
            consent=ConsentProfile.from_dict(d["consent"]),
            streams=list(d.get("streams", [])),
            chunks=[ChunkRef.from_dict(c) for c in d.get("chunks", [])],
            status=d.get("status", SessionStatus.RECORDING),
            vehicle=VehicleInfo.from_dict(d["vehicle"]) if d.get("vehicle") else None,
            healthSnapshot=HealthSnapshot.from_dict(d["healthSnapshot"]) if d.get("healthSnapshot") else None,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SessionManifest":
        return cls.from_dict(json.loads(text))
