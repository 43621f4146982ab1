"""ELM327 dongle emulator bound to a scenario.

Serves the adapter wire format over TCP, one client at a time. Speed and
RPM replies encode the scenario's ground truth at the (second-quantized)
time the request arrives; the quantization keeps scripted runs
reproducible under a scaled clock.
"""

from __future__ import annotations

import logging
import math
import socket
import threading
from typing import Optional

from drivelab.clock import Clock
from drivelab.obd import pids
from drivelab.sim.scenario import Scenario, TruthState, sample_truth

logger = logging.getLogger(__name__)

BANNER = "ELM327 v1.5"
PROMPT = "\r\r>"
IDLE_RPM = 800.0
SUPPORTED_BITMAP = [0xBE, 0x3E, 0xB8, 0x11]


def format_reply(mode: int, pid: int, data: list[int]) -> str:
    """Hex byte pairs separated by single spaces: (01, 0D, [60]) -> "41 0D 3C"."""
    return " ".join(f"{b:02X}" for b in [mode + 0x40, pid] + list(data))


def format_vin_reply(vin: str) -> str:
    """Multi-line mode 09 PID 02 reply carrying a 17-char VIN."""
    payload = [0x49, 0x02, 0x01] + list(vin.encode("ascii"))
    lines = [f"{len(payload):03X}"]
    chunks = [payload[0:6], payload[6:13], payload[13:20]]
    for i, chunk in enumerate(chunks):
        lines.append(f"{i}: " + " ".join(f"{b:02X}" for b in chunk))
    return "\r".join(lines)


def truth_pid_value(spec: pids.PidSpec, truth: TruthState) -> float:
    """Vehicle-side value for a PID given the kinematic ground truth."""
    if spec.key == pids.VEHICLE_SPEED.key:
        return truth.speed
    if spec.key == pids.ENGINE_RPM.key:
        return max(IDLE_RPM, truth.speed * 60.0)
    if spec.key == pids.THROTTLE.key:
        return min(100.0, max(8.0, 8.0 + truth.longitudinal_accel * 250.0))
    if spec.key == pids.COOLANT_TEMP.key:
        return 90.0
    if spec.key == pids.ENGINE_LOAD.key:
        return min(100.0, 15.0 + truth.speed * 0.5)
    raise KeyError(spec.key)


class DongleEmulator:
    """Serves one adapter client at a time on a TCP endpoint."""

    def __init__(self, scenario: Scenario, host: str = "127.0.0.1", port: int = 0,
                 clock: Optional[Clock] = None):
        self.scenario = scenario
        self.clock = clock or Clock()
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))  # propagate bind failures to the caller
        self._listener.listen(1)
        self.host, self.port = self._listener.getsockname()[:2]
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._t0_ms: Optional[int] = None
        self.requests_served = 0

    def start(self) -> "DongleEmulator":
        self._thread = threading.Thread(target=self._serve, name="dongle-emulator", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        if self._thread is not None:
            self._thread.join(timeout=5)

    @property
    def endpoint(self) -> tuple[str, int]:
        return (self.host, self.port)

    def _truth_now(self) -> TruthState:
        # quantize to whole seconds of session time so replies land on the
        # same tick the client scheduled, regardless of socket latency;
        # the timeline anchors at the first data (non-AT) request
        if self._t0_ms is None:
            self._t0_ms = self.clock.now_ms()
        rel = self.clock.now_ms() - self._t0_ms
        rel_q = int(math.floor(rel / 1000.0 + 0.5)) * 1000
        rel_q = min(max(rel_q, 0), self.scenario.duration_ms)
        return sample_truth(self.scenario, rel_q)

    def _serve(self) -> None:
        self._listener.settimeout(0.2)
        while not self._stop.is_set():
            try:
                conn, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            with conn:
                logger.debug("dongle client connected from %s", addr)
                try:
                    self._session(conn)
                except OSError:
                    pass

    def _session(self, conn: socket.socket) -> None:
        conn.settimeout(0.2)
        echo = True
        buf = bytearray()
        while not self._stop.is_set():
            try:
                data = conn.recv(1024)
            except socket.timeout:
                continue
            if not data:
                return
            buf.extend(data)
            while b"\r" in buf:
                line, _, rest = bytes(buf).partition(b"\r")
                buf = bytearray(rest)
                command = line.decode("ascii", errors="replace").strip()
                if not command:
                    continue
                reply, echo = self._handle(command, echo)
                out = (command + "\r" if echo else "") + reply + PROMPT
                conn.sendall(out.encode("ascii"))
                self.requests_served += 1

    def _handle(self, command: str, echo: bool) -> tuple[str, bool]:
        cmd = command.upper().replace(" ", "")
        if cmd.startswith("AT"):
            if cmd == "ATZ":
                return BANNER, True  # reset turns echo back on
            if cmd == "ATE0":
                return "OK", False
            if cmd == "ATE1":
                return "OK", True
            return "OK", echo

        try:
            body = bytes.fromhex(cmd)
        except ValueError:
            return "?", echo
        if len(body) < 2:
            return "?", echo
        mode, pid = body[0], body[1]
        if self._t0_ms is None:  # first data request anchors the timeline
            self._t0_ms = self.clock.now_ms()

        if mode == 0x09 and pid == 0x02:
            return format_vin_reply(self.scenario.vin), echo
        if mode == 0x01 and pid == 0x00:
            return format_reply(mode, pid, SUPPORTED_BITMAP), echo
        spec = pids.PID_TABLE.get((mode, pid))
        if spec is None:
            return "NO DATA", echo
        value = truth_pid_value(spec, self._truth_now())
        return format_reply(mode, pid, pids.encode_value(spec, value)), echo


def run_dongle_emulator(scenario: Scenario, endpoint: str = "127.0.0.1:0",
                        clock: Optional[Clock] = None) -> DongleEmulator:
    """Bind and start an emulator on HOST:PORT (port 0 = ephemeral)."""
    host, _, port = endpoint.rpartition(":")
    emulator = DongleEmulator(scenario, host=host or "127.0.0.1", port=int(port), clock=clock)
    return emulator.start()
