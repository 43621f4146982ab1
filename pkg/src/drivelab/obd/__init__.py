from drivelab.obd.braking import BrakingEvent, detect_braking
from drivelab.obd.pids import PID_TABLE, PidSpec, VIN_SPEC, decode_value, encode_value
from drivelab.obd.protocol import (
    AdapterError,
    AdapterSession,
    AdapterState,
    ObdClient,
    PollEvent,
    SocketTransport,
    Transport,
    decode_response,
    encode_request,
    handshake,
    poll,
)

__all__ = [
    "AdapterError",
    "AdapterSession",
    "AdapterState",
    "BrakingEvent",
    "ObdClient",
    "PID_TABLE",
    "PidSpec",
    "PollEvent",
    "SocketTransport",
    "Transport",
    "VIN_SPEC",
    "decode_response",
    "decode_value",
    "detect_braking",
    "encode_request",
    "encode_value",
    "handshake",
    "poll",
]
