"""Mode-01 parameter table with standard decode formulas.

Each formula maps raw data bytes A, B, ... to a physical value in a
canonical unit. encode_value() is the inverse used by the dongle
emulator, quantizing to the nearest representable raw encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

from drivelab.model import units


@dataclass(frozen=True)
class PidSpec:
    mode: int
    pid: int
    name: str
    formula: str  # formula id, see _DECODERS
    unit: str
    response_bytes: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.mode, self.pid)


def _decode_a(data: list[int]) -> float:
    return float(data[0])


def _decode_a_minus_40(data: list[int]) -> float:
    return float(data[0]) - 40.0


def _decode_percent(data: list[int]) -> float:
    return data[0] * 100.0 / 255.0


def _decode_rpm(data: list[int]) -> float:
    return (256 * data[0] + data[1]) / 4.0


_DECODERS = {
    "A": _decode_a,
    "A-40": _decode_a_minus_40,
    "100A/255": _decode_percent,
    "(256A+B)/4": _decode_rpm,
}


def _encode_a(value: float) -> list[int]:
    return [int(round(min(max(value, 0.0), 255.0)))]


def _encode_a_minus_40(value: float) -> list[int]:
    return [int(round(min(max(value + 40.0, 0.0), 255.0)))]


def _encode_percent(value: float) -> list[int]:
    return [int(round(min(max(value, 0.0), 100.0) * 255.0 / 100.0))]


def _encode_rpm(value: float) -> list[int]:
    q = int(round(min(max(value, 0.0), 16383.75) * 4.0))
    return [q >> 8, q & 0xFF]


_ENCODERS = {
    "A": _encode_a,
    "A-40": _encode_a_minus_40,
    "100A/255": _encode_percent,
    "(256A+B)/4": _encode_rpm,
}

# quantization step of each formula (worst-case decode error after encode
# is half a step; the codec contract allows one full step)
FORMULA_STEP = {
    "A": 1.0,
    "A-40": 1.0,
    "100A/255": 100.0 / 255.0,
    "(256A+B)/4": 0.25,
}

# physical range representable by each formula
FORMULA_RANGE = {
    "A": (0.0, 255.0),
    "A-40": (-40.0, 215.0),
    "100A/255": (0.0, 100.0),
    "(256A+B)/4": (0.0, 16383.75),
}

ENGINE_LOAD = PidSpec(0x01, 0x04, "engine load", "100A/255", units.PERCENT, 1)
COOLANT_TEMP = PidSpec(0x01, 0x05, "coolant temperature", "A-40", units.CELSIUS, 1)
ENGINE_RPM = PidSpec(0x01, 0x0C, "engine speed", "(256A+B)/4", units.RPM, 2)
VEHICLE_SPEED = PidSpec(0x01, 0x0D, "vehicle speed", "A", units.KMH, 1)
THROTTLE = PidSpec(0x01, 0x11, "throttle position", "100A/255", units.PERCENT, 1)
SUPPORTED_PIDS = PidSpec(0x01, 0x00, "supported PIDs 01-20", "bitmap", "", 4)
VIN_SPEC = PidSpec(0x09, 0x02, "vehicle identification number", "vin", "", 20)

PID_TABLE: dict[tuple[int, int], PidSpec] = {
    spec.key: spec
    for spec in (ENGINE_LOAD, COOLANT_TEMP, ENGINE_RPM, VEHICLE_SPEED, THROTTLE)
}

# Default polling set for the vehicle stream.
DEFAULT_POLL_PIDS = (VEHICLE_SPEED, ENGINE_RPM)


def decode_value(spec: PidSpec, data: list[int]) -> float:
    if len(data) < spec.response_bytes:
        raise ValueError(f"{spec.name}: expected {spec.response_bytes} data bytes, got {len(data)}")
    # never read past response_bytes, even if the adapter padded the reply
    return _DECODERS[spec.formula](data[: spec.response_bytes])


def encode_value(spec: PidSpec, value: float) -> list[int]:
    """Quantize a physical value to raw data bytes (emulator side)."""
    return _ENCODERS[spec.formula](value)
