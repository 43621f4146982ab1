"""Stream emitters standing in for phone sensors, the smartwatch, and GPS.

Each emitter yields (rel_ms, record) pairs where rel_ms is the offset
from scenario start and record is the canonical JSON object with its
absolute timestamp already set. Streams are finite (scenario-bounded)
and bit-identical for identical (scenario, seed).
"""

from __future__ import annotations

import base64
import math
from typing import Iterator

from drivelab.model.records import SensorSample
from drivelab.sim.scenario import M_PER_DEG, Scenario, sample_truth

HEART_PERIOD_MS = 5000
LOCATION_PERIOD_MS = 1000
FRAME_BYTES = 2048
ACCURACY_BOUNDS = (5.0, 50.0)


def emit_motion(scenario: Scenario, frequency: float) -> Iterator[tuple[int, dict]]:
    """Motion samples at exact period 1/frequency, ticks in [0, duration).

    accelerationX carries the longitudinal truth plus seeded Gaussian
    noise; gravity is (0,0,1)+noise; the quaternion is the heading-only
    rotation, renormalized after noise so every sample passes validation.
    """
    if not (0.1 <= frequency <= 100.0):
        raise ValueError(f"frequency {frequency} outside [0.1, 100]")
    rng = scenario.rng_for("motion")
    sd_acc = scenario.noise["acceleration"]
    sd_grav = scenario.noise["gravity"]
    sd_gyro = scenario.noise["gyro"]
    sd_att = scenario.noise["attitude"]
    yaw = math.radians(scenario.heading)
    period_ms = 1000.0 / frequency
    i = 0
    while True:
        rel = int(round(i * period_ms))
        if rel >= scenario.duration_ms:
            return
        truth = sample_truth(scenario, rel)
        qz, qw = math.sin(yaw / 2.0), math.cos(yaw / 2.0)
        q = [
            rng.gauss(0.0, sd_att * 0.1),
            rng.gauss(0.0, sd_att * 0.1),
            qz + rng.gauss(0.0, sd_att * 0.1),
            qw + rng.gauss(0.0, sd_att * 0.1),
        ]
        norm = math.sqrt(sum(c * c for c in q)) or 1.0
        q = [c / norm for c in q]
        sample = SensorSample(
            t=scenario.start_time_ms + rel,
            accelerationX=truth.longitudinal_accel + rng.gauss(0.0, sd_acc),
            accelerationY=rng.gauss(0.0, sd_acc),
            accelerationZ=rng.gauss(0.0, sd_acc),
            gyroDataX=rng.gauss(0.0, sd_gyro),
            gyroDataY=rng.gauss(0.0, sd_gyro),
            gyroDataZ=rng.gauss(0.0, sd_gyro),
            pitchData=rng.gauss(0.0, sd_att),
            rollData=rng.gauss(0.0, sd_att),
            yawData=yaw + rng.gauss(0.0, sd_att),
            quaternionX=q[0],
            quaternionY=q[1],
            quaternionZ=q[2],
            quaternionW=q[3],
            gravityDataX=rng.gauss(0.0, sd_grav),
            gravityDataY=rng.gauss(0.0, sd_grav),
            gravityDataZ=1.0 + rng.gauss(0.0, sd_grav),
        )
        yield rel, sample.to_record()
        i += 1


def emit_heart(scenario: Scenario) -> Iterator[tuple[int, dict]]:
    """One reading every 5000 ms exactly; first tick at t=5 s, last at
    t<=duration. Rate follows the truth model plus optional noise."""
    rng = scenario.rng_for("heart")
    sd = scenario.noise["heart"]
    k = 1
    while True:
        rel = k * HEART_PERIOD_MS
        if rel > scenario.duration_ms:
            return
        truth = sample_truth(scenario, rel)
        bpm = truth.heart_rate + (rng.gauss(0.0, sd) if sd > 0 else 0.0)
        yield rel, {"t": scenario.start_time_ms + rel, "heartRate": bpm}
        k += 1


def emit_location(scenario: Scenario, accuracy_target: float) -> Iterator[tuple[int, dict]]:
    """1 Hz fixes with reported accuracy = accuracy_target and position
    noise of std-dev accuracy_target/2 per axis (scaled by the scenario's
    "location" noise factor; 0 means fixes sit exactly on truth)."""
    lo, hi = ACCURACY_BOUNDS
    if not lo <= accuracy_target <= hi:
        raise ValueError(f"accuracyTarget {accuracy_target} outside [{lo}, {hi}]")
    rng = scenario.rng_for("location")
    sd_m = accuracy_target / 2.0 * scenario.noise["location"]
    cos_lat = math.cos(math.radians(scenario.latitude))
    k = 0
    while True:
        rel = k * LOCATION_PERIOD_MS
        if rel >= scenario.duration_ms:
            return
        truth = sample_truth(scenario, rel)
        north = rng.gauss(0.0, sd_m) if sd_m > 0 else 0.0
        east = rng.gauss(0.0, sd_m) if sd_m > 0 else 0.0
        yield rel, {
            "t": scenario.start_time_ms + rel,
            "latitude": truth.latitude + north / M_PER_DEG,
            "longitude": truth.longitude + east / (M_PER_DEG * cos_lat),
            "locationAccuracy": accuracy_target,
        }
        k += 1


def emit_video(scenario: Scenario, camera: str, frame_rate: float) -> Iterator[tuple[int, dict]]:
    """Opaque synthetic frame-chunks at frame_rate: 2 KiB of seeded bytes
    per frame, indexed by frame number."""
    if not (1.0 <= frame_rate <= 60.0):
        raise ValueError(f"frameRate {frame_rate} outside [1, 60]")
    rng = scenario.rng_for(f"video:{camera}")
    period_ms = 1000.0 / frame_rate
    i = 0
    while True:
        rel = int(round(i * period_ms))
        if rel >= scenario.duration_ms:
            return
        frame = rng.randbytes(FRAME_BYTES)
        yield rel, {
            "t": scenario.start_time_ms + rel,
            "frameIndex": i,
            "byteLength": FRAME_BYTES,
            "data": base64.b64encode(frame).decode("ascii"),
        }
        i += 1


def health_history(scenario: Scenario, reference_time_ms: int, span_days: int = 7) -> dict[str, list[tuple[int, float]]]:
    """Synthetic pre-drive health series spanning `span_days` before the
    reference time (wider than the 5-day summary window on purpose)."""
    rng = scenario.rng_for("healthHistory")
    hour_ms = 3600 * 1000
    start = reference_time_ms - span_days * 24 * hour_ms
    heart, audio, distance, steps = [], [], [], []
    t = start
    hour = 0
    while t <= reference_time_ms:
        circadian = 10.0 * math.sin(2 * math.pi * (hour % 24) / 24.0)
        heart.append((t, max(40.0, scenario.heart_baseline + circadian + rng.gauss(0, 3))))
        audio.append((t, max(0.0, 55.0 + rng.gauss(0, 8))))
        distance.append((t, max(0.0, rng.gauss(180.0, 120.0))))
        steps.append((t, float(max(0, int(rng.gauss(240, 160))))))
        t += hour_ms
        hour += 1
    return {
        "heartRate": heart,
        "headphoneAudioExposure": audio,
        "distanceWalkingRunning": distance,
        "stepCount": steps,
    }


def connectivity_signal(scenario: Scenario) -> list[tuple[int, bool]]:
    """Online/offline transitions at dead-zone boundaries, as
    (rel_ms, online). Always begins with the state at t=0."""
    events: list[tuple[int, bool]] = [(0, scenario.online_at(0.0))]
    for t0, t1 in scenario.dead_zones:
        start, end = int(round(t0 * 1000)), int(round(t1 * 1000))
        if start > 0:
            events.append((start, False))
        if end < scenario.duration_ms:
            events.append((end, True))
    # drop no-op repeats while preserving order
    out: list[tuple[int, bool]] = []
    for ev in sorted(events):
        if not out or out[-1][1] != ev[1]:
            out.append(ev)
    return out
