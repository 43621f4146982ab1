"""Canonical units and the conversion table used to standardize inbound data.

Canonical set: km/h (speed), g (acceleration/gravity), rad/s (gyro),
rad (attitude), bpm, m, dB(A), rpm, %, degC. The server rejects records
whose unit tag is not in this set; conversion happens client-side.
"""

from __future__ import annotations

# Unit tags attached to decoded/journaled values.
KMH = "km/h"
MPH = "mph"
METERS = "m"
FEET = "ft"
CELSIUS = "degC"
FAHRENHEIT = "degF"
KILOMETERS = "km"
MILES = "mi"
RPM = "rpm"
PERCENT = "%"
G = "g"
RAD = "rad"
RAD_PER_S = "rad/s"
BPM = "bpm"
DBA = "dB(A)"

CANONICAL_UNITS = frozenset({KMH, G, RAD_PER_S, RAD, BPM, METERS, DBA, RPM, PERCENT, CELSIUS})

_MILE_KM = 1.609344  # international mile, exact
_FOOT_M = 0.3048      # international foot, exact


class UnsupportedUnitPair(ValueError):
    """Raised for (from, to) pairs outside the conversion table."""

    def __init__(self, src: str, dst: str):
        super().__init__(f"UNSUPPORTED_PAIR: no conversion from {src!r} to {dst!r}")
        self.src = src
        self.dst = dst


# value_canonical = scale * value + offset, per directed pair
_AFFINE: dict[tuple[str, str], tuple[float, float]] = {
    (MPH, KMH): (_MILE_KM, 0.0),
    (KMH, MPH): (1.0 / _MILE_KM, 0.0),
    (FEET, METERS): (_FOOT_M, 0.0),
    (METERS, FEET): (1.0 / _FOOT_M, 0.0),
    (MILES, KILOMETERS): (_MILE_KM, 0.0),
    (KILOMETERS, MILES): (1.0 / _MILE_KM, 0.0),
    (FAHRENHEIT, CELSIUS): (5.0 / 9.0, -160.0 / 9.0),
    (CELSIUS, FAHRENHEIT): (9.0 / 5.0, 32.0),
}


def convert_unit(value: float, src: str, dst: str) -> float:
    """Convert `value` from unit `src` to unit `dst`.

    Identity pairs are always supported. Raises UnsupportedUnitPair for
    anything outside the table.
    """
    if src == dst:
        return value
    try:
        scale, offset = _AFFINE[(src, dst)]
    except KeyError:
        raise UnsupportedUnitPair(src, dst) from None
    return value * scale + offset
