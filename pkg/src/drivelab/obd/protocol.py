"""ELM327-style adapter client over an abstract duplex byte stream.

Commands are ASCII and CR-terminated; replies are ASCII hex byte pairs
separated by single spaces, terminated by CR and the ">" prompt. "NO
DATA" and "?" literals follow ELM327 practice.
"""

from __future__ import annotations

import logging
import socket
import threading
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from drivelab.clock import Clock
from drivelab.model.records import VehiclePidReading
from drivelab.obd.pids import PidSpec, VIN_SPEC, decode_value

logger = logging.getLogger(__name__)

PROMPT = b">"
CR = "\r"

CMD_RESET = "ATZ"
CMD_ECHO_OFF = "ATE0"
CMD_AUTO_PROTOCOL = "ATSP0"
PROBE_MODE, PROBE_PID = 0x01, 0x00

DEFAULT_COMMAND_TIMEOUT = 2.0  # seconds per command
HANDSHAKE_RETRIES = 3
HANDSHAKE_RETRY_SPACING = 0.5  # seconds between attempts


class AdapterState:
    DISCONNECTED = "Disconnected"
    HANDSHAKING = "Handshaking"
    CONNECTED = "Connected"
    FAILED = "Failed"


class AdapterError(Exception):
    """Protocol-level failure; `code` is one of NO_DATA, MALFORMED,
    PID_MISMATCH, TIMEOUT, DISCONNECTED."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


@dataclass
class AdapterSession:
    state: str = AdapterState.DISCONNECTED
    adapter_id: str = ""
    protocol_selected: str = ""


class Transport:
    """Duplex byte stream to the adapter. One command in flight at a time."""

    def send_command(self, command: str, timeout: float) -> str:
        """Write `command` + CR, read until the prompt, return the raw text."""
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class SocketTransport(Transport):
    def __init__(self, host: str, port: int, connect_timeout: float = 2.0):
        self._sock = socket.create_connection((host, port), timeout=connect_timeout)

    def send_command(self, command: str, timeout: float) -> str:
        self._sock.settimeout(timeout)
        try:
            self._sock.sendall((command + CR).encode("ascii"))
            buf = bytearray()
            while not buf.endswith(PROMPT):
                data = self._sock.recv(4096)
                if not data:
                    raise AdapterError("DISCONNECTED", "connection closed by adapter")
                buf.extend(data)
            return buf.decode("ascii", errors="replace")
        except socket.timeout:
            raise AdapterError("TIMEOUT", f"no reply to {command!r} within {timeout}s") from None
        except OSError as exc:
            raise AdapterError("DISCONNECTED", str(exc)) from None

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def encode_request(mode: int, pid: int) -> str:
    """Uppercase hex, no spaces, CR-terminated: (0x01, 0x0D) -> "010D\\r"."""
    if not (0 <= mode <= 0xFF and 0 <= pid <= 0xFF):
        raise ValueError(f"mode/pid out of byte range: {mode:#x}/{pid:#x}")
    return f"{mode:02X}{pid:02X}{CR}"


def _response_lines(raw: str, echo_of: Optional[str] = None) -> list[str]:
    lines = []
    for part in raw.replace(">", "").split(CR):
        line = part.strip()
        if not line or line == "SEARCHING...":
            continue
        if echo_of is not None and line.upper() == echo_of.upper():
            continue
        lines.append(line)
    return lines


def _parse_hex_bytes(line: str) -> list[int]:
    try:
        return [int(tok, 16) for tok in line.split()]
    except ValueError:
        raise AdapterError("MALFORMED", f"non-hex reply {line!r}") from None


def decode_response(raw: str, expected: PidSpec, t_ms: int = 0, echo_of: Optional[str] = None) -> VehiclePidReading:
    """Decode an adapter reply against the expected PidSpec.

    Tolerates command echo, surrounding whitespace, and the trailing
    prompt. Raises AdapterError(NO_DATA | MALFORMED | PID_MISMATCH).
    """
    lines = _response_lines(raw, echo_of=echo_of)
    if not lines:
        raise AdapterError("MALFORMED", "empty reply")
    if any(l.upper() == "NO DATA" for l in lines):
        raise AdapterError("NO_DATA", f"adapter has no data for {expected.name}")
    if any(l == "?" for l in lines):
        raise AdapterError("MALFORMED", "adapter rejected command")

    data = _parse_hex_bytes(lines[0])
    if len(data) < 2:
        raise AdapterError("MALFORMED", f"reply too short: {lines[0]!r}")
    if data[0] != expected.mode + 0x40 or data[1] != expected.pid:
        raise AdapterError(
            "PID_MISMATCH",
            f"reply {data[0]:02X} {data[1]:02X} does not match request {expected.mode:02X} {expected.pid:02X}",
        )
    payload = data[2:]
    if len(payload) < expected.response_bytes:
        raise AdapterError("MALFORMED", f"expected {expected.response_bytes} data bytes, got {len(payload)}")
    value = decode_value(expected, payload)
    return VehiclePidReading(
        t=t_ms,
        mode=expected.mode,
        pid=expected.pid,
        raw=payload[: expected.response_bytes],
        value=value,
        unit=expected.unit,
    )


def decode_vin_response(raw: str, echo_of: Optional[str] = None) -> str:
    """Decode the multi-line mode 09 PID 02 reply into the 17-char VIN."""
    lines = _response_lines(raw, echo_of=echo_of)
    if any(l.upper() == "NO DATA" for l in lines):
        raise AdapterError("NO_DATA", "adapter has no VIN")
    data: list[int] = []
    for line in lines:
        body = line
        if ":" in line:  # "0: 49 02 01 ..." line-index prefix
            prefix, body = line.split(":", 1)
            if not prefix.strip().isalnum():
                raise AdapterError("MALFORMED", f"bad line index {prefix!r}")
        else:
            # byte-count header line such as "014"
            if " " not in line.strip():
                continue
        data.extend(_parse_hex_bytes(body.strip()))
    if len(data) < 3 or data[0] != 0x49 or data[1] != 0x02:
        raise AdapterError("PID_MISMATCH", "reply is not a mode 09 PID 02 VIN record")
    vin_bytes = data[3:20]
    if len(vin_bytes) != 17:
        raise AdapterError("MALFORMED", f"VIN payload has {len(vin_bytes)} bytes, expected 17")
    return bytes(vin_bytes).decode("ascii", errors="replace")


class ObdClient:
    """Single-owner adapter session: all commands serialized on one lock.

    PID polling is only permitted in the Connected state; transitions
    follow Disconnected -> Handshaking -> (Connected | Failed).
    """

    def __init__(self, transport: Transport, clock: Clock | None = None,
                 command_timeout: float = DEFAULT_COMMAND_TIMEOUT):
        self.transport = transport
        self.clock = clock or Clock()
        self.command_timeout = command_timeout
        self.session = AdapterSession()
        self._lock = threading.Lock()

    @property
    def state(self) -> str:
        return self.session.state

    def _command(self, command: str) -> str:
        with self._lock:
            return self.transport.send_command(command, self.command_timeout)

    def handshake(self) -> AdapterSession:
        """Reset, disable echo, select auto protocol, probe mode 01 PID 00.

        Connected iff the probe decodes; Failed after 3 attempts with
        0.5 s spacing. Idempotent: re-running on a Connected session
        re-establishes Connected with the same adapter id.
        """
        self.session.state = AdapterState.HANDSHAKING
        last_error: Optional[Exception] = None
        for attempt in range(HANDSHAKE_RETRIES):
            if attempt:
                self.clock.sleep(HANDSHAKE_RETRY_SPACING)
            try:
                banner = self._command(CMD_RESET)
                banner_lines = _response_lines(banner, echo_of=CMD_RESET)
                adapter_id = next((l for l in banner_lines if "ELM327" in l), banner_lines[0] if banner_lines else "")
                self._command(CMD_ECHO_OFF)
                self._command(CMD_AUTO_PROTOCOL)
                probe = self._command(encode_request(PROBE_MODE, PROBE_PID).rstrip(CR))
                lines = _response_lines(probe)
                if not lines:
                    raise AdapterError("MALFORMED", "empty probe reply")
                data = _parse_hex_bytes(lines[0])
                if len(data) < 2 or data[0] != PROBE_MODE + 0x40 or data[1] != PROBE_PID:
                    raise AdapterError("NO_DATA", f"probe not answered: {lines[0]!r}")
                self.session.state = AdapterState.CONNECTED
                self.session.adapter_id = adapter_id
                self.session.protocol_selected = "auto"
                return self.session
            except AdapterError as exc:
                last_error = exc
                logger.warning("handshake attempt %d failed: %s", attempt + 1, exc)
        self.session.state = AdapterState.FAILED
        logger.error("handshake failed after %d attempts: %s", HANDSHAKE_RETRIES, last_error)
        return self.session

    def query(self, spec: PidSpec, t_ms: Optional[int] = None) -> VehiclePidReading:
        if self.session.state != AdapterState.CONNECTED:
            raise AdapterError("DISCONNECTED", f"cannot poll in state {self.session.state}")
        command = f"{spec.mode:02X}{spec.pid:02X}"
        try:
            raw = self._command(command)
        except AdapterError as exc:
            if exc.code in ("DISCONNECTED", "TIMEOUT"):
                self.session.state = AdapterState.DISCONNECTED
            raise
        stamp = t_ms if t_ms is not None else self.clock.now_ms()
        return decode_response(raw, spec, t_ms=stamp, echo_of=command)

    def request_vin(self) -> str:
        if self.session.state != AdapterState.CONNECTED:
            raise AdapterError("DISCONNECTED", f"cannot poll in state {self.session.state}")
        command = f"{VIN_SPEC.mode:02X}{VIN_SPEC.pid:02X}"
        raw = self._command(command)
        return decode_vin_response(raw, echo_of=command)

    def close(self) -> None:
        self.session.state = AdapterState.DISCONNECTED
        self.transport.close()


def handshake(transport: Transport, clock: Clock | None = None,
              command_timeout: float = DEFAULT_COMMAND_TIMEOUT) -> ObdClient:
    """Convenience: build a client on `transport` and run the handshake."""
    client = ObdClient(transport, clock=clock, command_timeout=command_timeout)
    client.handshake()
    return client


@dataclass(frozen=True)
class PollEvent:
    """One element of the polling stream."""

    kind: str  # "reading" | "error" | "disconnected"
    reading: Optional[VehiclePidReading] = None
    error: Optional[str] = None


def poll(
    client: ObdClient,
    pids: Sequence[PidSpec],
    frequency: float,
    stop: Optional[threading.Event] = None,
    max_cycles: Optional[int] = None,
    stamp_base_ms: Optional[int] = None,
) -> Iterator[PollEvent]:
    """Round-robin request cycles at `frequency` Hz.

    A failed decode emits an error event and polling continues; the
    stream ends with a terminal "disconnected" event when the session
    leaves Connected. When stamp_base_ms is set, reading j of cycle k is
    stamped stamp_base_ms + k/frequency + j (nominal tick, kept strictly
    increasing across the round-robin) instead of the clock, which keeps
    scripted runs reproducible.
    """
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    period_ms = 1000.0 / frequency
    clock = client.clock
    origin = clock.now_ms()
    cycle = 0
    while True:
        if stop is not None and stop.is_set():
            return
        if max_cycles is not None and cycle >= max_cycles:
            return
        clock.wait_until_ms(int(origin + cycle * period_ms))
        if stop is not None and stop.is_set():
            return
        for j, spec in enumerate(pids):
            nominal = None if stamp_base_ms is None else int(stamp_base_ms + cycle * period_ms) + j
            if client.session.state != AdapterState.CONNECTED:
                yield PollEvent(kind="disconnected", error="DISCONNECTED")
                return
            try:
                yield PollEvent(kind="reading", reading=client.query(spec, t_ms=nominal))
            except AdapterError as exc:
                if client.session.state != AdapterState.CONNECTED:
                    yield PollEvent(kind="disconnected", error="DISCONNECTED")
                    return
                yield PollEvent(kind="error", error=exc.code)
        cycle += 1
