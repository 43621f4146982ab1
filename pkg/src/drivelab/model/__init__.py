from drivelab.model.digest import checksum, crc32_of
from drivelab.model.health import HEALTH_WINDOW_MS, summarize_health
from drivelab.model.manifest import ChunkRef, SessionManifest, SessionStatus
from drivelab.model.records import (
    ConsentProfile,
    HealthSnapshot,
    SensorSample,
    UserSettings,
    ValidationIssue,
    ValidationReport,
    VehicleInfo,
    VehiclePidReading,
)
from drivelab.model.revalidate import revalidate_manifest
from drivelab.model.units import CANONICAL_UNITS, UnsupportedUnitPair, convert_unit
from drivelab.model.validation import validate_record, validate_sample

__all__ = [
    "CANONICAL_UNITS",
    "ChunkRef",
    "ConsentProfile",
    "HEALTH_WINDOW_MS",
    "HealthSnapshot",
    "SensorSample",
    "SessionManifest",
    "SessionStatus",
    "UnsupportedUnitPair",
    "UserSettings",
    "ValidationIssue",
    "ValidationReport",
    "VehicleInfo",
    "VehiclePidReading",
    "checksum",
    "convert_unit",
    "crc32_of",
    "revalidate_manifest",
    "summarize_health",
    "validate_record",
    "validate_sample",
]
