"""Wires a scenario's emitters into the recorder agent's source bundle."""

from __future__ import annotations

from typing import Optional

from drivelab.agent.recorder import DeviceSources, VehicleSource
from drivelab.model.records import UserSettings
from drivelab.obd.protocol import SocketTransport
from drivelab.sim import emitters
from drivelab.sim.scenario import Scenario


def scenario_sources(
    scenario: Scenario,
    settings: UserSettings,
    obd_endpoint: Optional[tuple[str, int]] = None,
    accuracy_target: float = 5.0,
    reference_time_ms: Optional[int] = None,
) -> DeviceSources:
    """Build DeviceSources for a scenario.

    The phone-side streams are in-process emitters; the vehicle stream,
    when an OBD endpoint is given, speaks the adapter wire protocol to
    it with a scenario-bounded polling plan so scripted runs reproduce
    exactly.
    """
    vehicle = None
    if obd_endpoint is not None:
        host, port = obd_endpoint
        vehicle = VehicleSource(
            transport_factory=lambda: SocketTransport(host, port),
            max_cycles=int(scenario.duration),
            stamp_base_ms=scenario.start_time_ms,
        )
    reference = reference_time_ms if reference_time_ms is not None else scenario.start_time_ms
    return DeviceSources(
        motion=emitters.emit_motion(scenario, settings.frequency),
        location=emitters.emit_location(scenario, accuracy_target),
        heart=emitters.emit_heart(scenario),
        video_front=emitters.emit_video(scenario, "front", settings.frameRate),
        video_back=emitters.emit_video(scenario, "back", settings.frameRate),
        vehicle=vehicle,
        health_history=emitters.health_history(scenario, reference),
        health_reference_ms=reference,
    )
