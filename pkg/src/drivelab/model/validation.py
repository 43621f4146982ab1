"""Record validation shared by the recorder agent and the ingestion service.

Hard physical-range violations are errors; physiological plausibility is
a warning. Pure functions: identical inputs produce identical reports.
"""

from __future__ import annotations

import math

from drivelab.model.records import (
    STREAM_HEART,
    STREAM_LOCATION,
    STREAM_MOTION,
    STREAM_VEHICLE,
    STREAM_VIDEO_BACK,
    STREAM_VIDEO_FRONT,
    ConsentProfile,
    SensorSample,
    ValidationReport,
)
from drivelab.model.units import CANONICAL_UNITS

QUAT_NORM_TOL = 1e-3
GRAVITY_RANGE = (0.9, 1.1)
LOCATION_ACCURACY_RANGE = (5.0, 50.0)
HEART_PLAUSIBLE_BPM = (25.0, 250.0)

_QUAT_FIELDS = ("quaternionX", "quaternionY", "quaternionZ", "quaternionW")
_GRAVITY_FIELDS = ("gravityDataX", "gravityDataY", "gravityDataZ")
_LOCATION_FIELDS = ("latitude", "longitude", "locationAccuracy")


def validate_sample(
    sample: SensorSample,
    consent: ConsentProfile,
    stream: str | None = None,
    record_index: int | None = None,
) -> ValidationReport:
    """Check one sensor sample against the schema invariants.

    Rules apply to the fields the sample actually carries; a motion-only
    sample is not penalized for having no GPS fix. Location fields on a
    sample without location consent are a CONSENT_VIOLATION error.
    """
    report = ValidationReport()

    def err(code: str, message: str) -> None:
        report.error(code, message, stream, record_index)

    if sample.has_location() and not consent.location:
        err("CONSENT_VIOLATION", "location fields present without location consent")

    if sample.latitude is not None and not -90.0 <= sample.latitude <= 90.0:
        err("LAT_RANGE", f"latitude {sample.latitude} outside [-90, 90]")
    if sample.longitude is not None and not -180.0 <= sample.longitude <= 180.0:
        err("LON_RANGE", f"longitude {sample.longitude} outside [-180, 180]")

    quat = [getattr(sample, f) for f in _QUAT_FIELDS]
    present = [q for q in quat if q is not None]
    if present:
        if len(present) < 4:
            err("QUAT_INCOMPLETE", "quaternion must carry all four components")
        else:
            norm = math.sqrt(sum(q * q for q in quat))
            if not (1.0 - QUAT_NORM_TOL) <= norm <= (1.0 + QUAT_NORM_TOL):
                err("QUAT_NORM", f"quaternion norm {norm:.6f} outside 1 +/- {QUAT_NORM_TOL}")

    grav = [getattr(sample, f) for f in _GRAVITY_FIELDS]
    present = [g for g in grav if g is not None]
    if present:
        if len(present) < 3:
            err("GRAVITY_INCOMPLETE", "gravity vector must carry all three components")
        else:
            mag = math.sqrt(sum(g * g for g in grav))
            lo, hi = GRAVITY_RANGE
            if not lo <= mag <= hi:
                err("GRAVITY_MAG", f"gravity magnitude {mag:.4f} g outside [{lo}, {hi}]")

    if sample.locationAccuracy is not None and consent.location:
        lo, hi = LOCATION_ACCURACY_RANGE
        if not lo <= sample.locationAccuracy <= hi:
            err("ACCURACY_RANGE", f"locationAccuracy {sample.locationAccuracy} m outside [{lo}, {hi}]")

    return report


def validate_record(
    record: dict,
    stream: str,
    consent: ConsentProfile,
    record_index: int | None = None,
) -> ValidationReport:
    """Validate one journal/wire record of the given stream."""
    report = ValidationReport()

    if "t" not in record or not isinstance(record["t"], (int, float)):
        report.error("MISSING_T", "record has no numeric timestamp", stream, record_index)
        return report

    if stream in (STREAM_MOTION, STREAM_LOCATION):
        report.merge(validate_sample(SensorSample.from_record(record), consent, stream, record_index))
        if stream == STREAM_LOCATION:
            for f in ("latitude", "longitude"):
                if record.get(f) is None:
                    report.error("MISSING_FIELD", f"location record lacks {f}", stream, record_index)
    elif stream == STREAM_HEART:
        bpm = record.get("heartRate")
        if bpm is None:
            report.error("MISSING_FIELD", "heart record lacks heartRate", stream, record_index)
        else:
            if bpm < 0:
                report.error("NEGATIVE_VALUE", f"heartRate {bpm} < 0", stream, record_index)
            lo, hi = HEART_PLAUSIBLE_BPM
            if bpm < lo or bpm > hi:
                report.warn("HEART_RANGE", f"heartRate {bpm} bpm outside plausible [{lo}, {hi}]", stream, record_index)
    elif stream == STREAM_VEHICLE:
        for f in ("mode", "pid", "raw", "value", "unit"):
            if f not in record:
                report.error("MISSING_FIELD", f"vehicle record lacks {f}", stream, record_index)
        unit = record.get("unit")
        if unit is not None and unit not in CANONICAL_UNITS:
            report.error("UNIT_NONCANONICAL", f"unit {unit!r} is not canonical", stream, record_index)
    elif stream in (STREAM_VIDEO_FRONT, STREAM_VIDEO_BACK):
        for f in ("frameIndex", "byteLength", "data"):
            if f not in record:
                report.error("MISSING_FIELD", f"frame record lacks {f}", stream, record_index)
    else:
        report.error("UNKNOWN_STREAM", f"unknown stream tag {stream!r}", stream, record_index)

    return report
