"""Domain value types and their canonical JSON record forms.

Journal chunks and the upload wire format both carry these records as
JSON objects, one per record, with the camelCase field names below.
Serialization is canonical (sorted keys, compact separators) so digests
are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from typing import Optional

from drivelab.model.vin import is_valid_vin

# Stream tags, and the consent category each one needs.
STREAM_MOTION = "motion"
STREAM_LOCATION = "location"
STREAM_HEART = "heart"
STREAM_VEHICLE = "vehicle"
STREAM_VIDEO_FRONT = "videoFront"
STREAM_VIDEO_BACK = "videoBack"

ALL_STREAMS = (
    STREAM_MOTION,
    STREAM_LOCATION,
    STREAM_HEART,
    STREAM_VEHICLE,
    STREAM_VIDEO_FRONT,
    STREAM_VIDEO_BACK,
)

STREAM_CATEGORY = {
    STREAM_MOTION: "motion",
    STREAM_LOCATION: "location",
    STREAM_HEART: "health",
    STREAM_VEHICLE: "vehicle",
    STREAM_VIDEO_FRONT: "video",
    STREAM_VIDEO_BACK: "video",
}

CONSENT_CATEGORIES = ("motion", "location", "health", "video", "vehicle")


def dump_record(obj: dict) -> bytes:
    """Canonical record bytes: one JSON object, newline-terminated, so a
    concatenation of record payloads is newline-delimited JSON."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"


def load_record(data: bytes) -> dict:
    return json.loads(data.decode("utf-8"))


@dataclass(frozen=True)
class ConsentProfile:
    """Per-category collection permissions. Absence of a grant is denial."""

    motion: bool = False
    location: bool = False
    health: bool = False
    video: bool = False
    vehicle: bool = False

    def grants(self, category: str) -> bool:
        if category not in CONSENT_CATEGORIES:
            raise ValueError(f"unknown consent category {category!r}")
        return bool(getattr(self, category))

    def allows_stream(self, stream: str) -> bool:
        return self.grants(STREAM_CATEGORY[stream])

    def granted_categories(self) -> set[str]:
        return {c for c in CONSENT_CATEGORIES if self.grants(c)}

    def to_dict(self) -> dict:
        return {c: self.grants(c) for c in CONSENT_CATEGORIES}

    @classmethod
    def from_dict(cls, d: dict) -> "ConsentProfile":
        return cls(**{c: bool(d.get(c, False)) for c in CONSENT_CATEGORIES})

    @classmethod
    def grant_all(cls) -> "ConsentProfile":
        return cls(motion=True, location=True, health=True, video=True, vehicle=True)


@dataclass
class UserSettings:
    """User-tunable sampling configuration."""

    frameRate: float = 30.0
    frequency: float = 1.0
    automaticUpload: bool = True

    def validate(self) -> None:
        if not (1.0 <= self.frameRate <= 60.0):
            raise ValueError(f"frameRate {self.frameRate} outside [1, 60]")
        if not (0.1 <= self.frequency <= 100.0):
            raise ValueError(f"frequency {self.frequency} outside [0.1, 100]")

    def to_dict(self) -> dict:
        return {
            "frameRate": self.frameRate,
            "frequency": self.frequency,
            "automaticUpload": self.automaticUpload,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UserSettings":
        s = cls(
            frameRate=float(d.get("frameRate", 30.0)),
            frequency=float(d.get("frequency", 1.0)),
            automaticUpload=bool(d.get("automaticUpload", True)),
        )
        s.validate()
        return s


@dataclass
class SensorSample:
    """One timestamped motion and/or location record.

    Location fields are optional: a motion sample carries the motion
    block, a location fix carries the location block, and a merged
    sample may carry both. Absent fields serialize as absent keys.
    """

    t: int  # unix-time ms
    latitude: Optional[float] = None
    longitude: Optional[float] = None
    accelerationX: Optional[float] = None
    accelerationY: Optional[float] = None
    accelerationZ: Optional[float] = None
    gyroDataX: Optional[float] = None
    gyroDataY: Optional[float] = None
    gyroDataZ: Optional[float] = None
    pitchData: Optional[float] = None
    rollData: Optional[float] = None
    yawData: Optional[float] = None
    quaternionX: Optional[float] = None
    quaternionY: Optional[float] = None
    quaternionZ: Optional[float] = None
    quaternionW: Optional[float] = None
    gravityDataX: Optional[float] = None
    gravityDataY: Optional[float] = None
    gravityDataZ: Optional[float] = None
    locationAccuracy: Optional[float] = None

    def to_record(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                out[f.name] = v
        return out

    @classmethod
    def from_record(cls, d: dict) -> "SensorSample":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def has_location(self) -> bool:
        return (
            self.latitude is not None
            or self.longitude is not None
            or self.locationAccuracy is not None
        )


@dataclass
class HealthSnapshot:
    """Pre-drive physiological summary over a fixed 5-day lookback."""

    referenceTime: int  # unix-time ms
    heartRate: list[float] = field(default_factory=list)
    headphoneAudioExposure: list[float] = field(default_factory=list)
    distanceWalkingRunning: list[float] = field(default_factory=list)
    stepCount: list[float] = field(default_factory=list)
    windowDays: int = 5

    CATEGORIES = ("heartRate", "headphoneAudioExposure", "distanceWalkingRunning", "stepCount")

    def to_dict(self) -> dict:
        return {
            "referenceTime": self.referenceTime,
            "heartRate": self.heartRate,
            "headphoneAudioExposure": self.headphoneAudioExposure,
            "distanceWalkingRunning": self.distanceWalkingRunning,
            "stepCount": self.stepCount,
            "windowDays": self.windowDays,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HealthSnapshot":
        return cls(
            referenceTime=int(d["referenceTime"]),
            heartRate=list(d.get("heartRate", [])),
            headphoneAudioExposure=list(d.get("headphoneAudioExposure", [])),
            distanceWalkingRunning=list(d.get("distanceWalkingRunning", [])),
            stepCount=list(d.get("stepCount", [])),
            windowDays=int(d.get("windowDays", 5)),
        )


@dataclass
class VehicleInfo:
    """Vehicle identity decoded from the VIN. Fields beyond the VIN are
    best-effort decode results and may be empty."""

    vin: str
    make: str = ""
    model: str = ""
    modelYear: Optional[int] = None

    def validate(self) -> None:
        if not is_valid_vin(self.vin):
            raise ValueError(f"invalid VIN {self.vin!r}")

    def to_dict(self) -> dict:
        return {"vin": self.vin, "make": self.make, "model": self.model, "modelYear": self.modelYear}

    @classmethod
    def from_dict(cls, d: dict) -> "VehicleInfo":
        return cls(
            vin=d["vin"],
            make=d.get("make", ""),
            model=d.get("model", ""),
            modelYear=d.get("modelYear"),
        )


@dataclass
class VehiclePidReading:
    """One decoded OBD parameter."""

    t: int  # unix-time ms
    mode: int
    pid: int
    raw: list[int]
    value: float
    unit: str

    def to_record(self) -> dict:
        return {
            "t": self.t,
            "mode": self.mode,
            "pid": self.pid,
            "raw": list(self.raw),
            "value": self.value,
            "unit": self.unit,
        }

    @classmethod
    def from_record(cls, d: dict) -> "VehiclePidReading":
        return cls(
            t=int(d["t"]),
            mode=int(d["mode"]),
            pid=int(d["pid"]),
            raw=[int(b) for b in d["raw"]],
            value=d["value"],
            unit=d["unit"],
        )


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str
    stream: Optional[str] = None
    record_index: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "message": self.message,
            "stream": self.stream,
            "recordIndex": self.record_index,
        }


@dataclass
class ValidationReport:
    errors: list[ValidationIssue] = field(default_factory=list)
    warnings: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, code: str, message: str, stream: str | None = None, record_index: int | None = None) -> None:
        self.errors.append(ValidationIssue(code, message, stream, record_index))

    def warn(self, code: str, message: str, stream: str | None = None, record_index: int | None = None) -> None:
        self.warnings.append(ValidationIssue(code, message, stream, record_index))

    def merge(self, other: "ValidationReport") -> None:
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)

    def error_codes(self) -> list[str]:
        return [e.code for e in self.errors]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": [e.to_dict() for e in self.errors],
            "warnings": [w.to_dict() for w in self.warnings],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValidationReport":
        def issues(items):
            return [
                ValidationIssue(i["code"], i["message"], i.get("stream"), i.get("recordIndex"))
                for i in items
            ]

        return cls(errors=issues(d.get("errors", [])), warnings=issues(d.get("warnings", [])))
