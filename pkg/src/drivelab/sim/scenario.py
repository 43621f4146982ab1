"""Deterministic drive scenarios and the ground-truth kinematics they define.

A Scenario is a human-authorable JSON document: a piecewise-linear speed
profile along a fixed heading, a heart-rate baseline, connectivity dead
zones, and per-channel noise levels. Everything downstream (emitters,
dongle emulator) is a pure function of (scenario, t), so identical
scenarios produce bit-identical streams.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from drivelab.model.vin import is_valid_vin

EARTH_RADIUS_M = 6371000.0
M_PER_DEG = EARTH_RADIUS_M * math.pi / 180.0
G_MS2 = 9.80665

# Fixed epoch for default scenario timestamps: 2024-01-01T00:00:00Z.
DEFAULT_START_MS = 1704067200000

DEFAULT_NOISE = {
    "acceleration": 0.005,  # g
    "gravity": 0.002,       # g
    "gyro": 0.002,          # rad/s
    "attitude": 0.002,      # rad
    "heart": 0.0,           # bpm
    "location": 1.0,        # scale factor on accuracy-derived std-dev
}


@dataclass(frozen=True)
class SpeedSegment:
    t_start: float  # seconds
    t_end: float
    start_speed: float  # km/h
    end_speed: float

    def speed_at(self, t_s: float) -> float:
        if self.t_end == self.t_start:
            return self.start_speed
        frac = (t_s - self.t_start) / (self.t_end - self.t_start)
        return self.start_speed + frac * (self.end_speed - self.start_speed)

    @property
    def slope_kmh_per_s(self) -> float:
        if self.t_end == self.t_start:
            return 0.0
        return (self.end_speed - self.start_speed) / (self.t_end - self.t_start)

    def distance_m(self) -> float:
        # trapezoid is exact for a linear profile
        return (self.start_speed + self.end_speed) / 2.0 / 3.6 * (self.t_end - self.t_start)


@dataclass(frozen=True)
class TruthState:
    t: int  # ms since scenario start epoch
    speed: float  # km/h
    longitudinal_accel: float  # g
    latitude: float
    longitude: float
    heading: float  # degrees
    heart_rate: float  # bpm


@dataclass
class Scenario:
    seed: int
    duration: float  # seconds
    speed_profile: list[SpeedSegment]
    latitude: float
    longitude: float
    heading: float  # degrees clockwise from north
    heart_baseline: float = 60.0
    dead_zones: list[tuple[float, float]] = field(default_factory=list)
    noise: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_NOISE))
    vin: str = "1HGCM82633A004352"
    start_time_ms: int = DEFAULT_START_MS

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if not self.speed_profile:
            raise ValueError("speedProfile must not be empty")
        segs = self.speed_profile
        if segs[0].t_start != 0 or abs(segs[-1].t_end - self.duration) > 1e-9:
            raise ValueError("speedProfile must cover [0, duration]")
        for a, b in zip(segs, segs[1:]):
            if abs(b.t_start - a.t_end) > 1e-9:
                raise ValueError(f"speedProfile gap/overlap at t={a.t_end}")
            if abs(b.start_speed - a.end_speed) > 1e-9:
                raise ValueError(f"speed discontinuity at t={a.t_end}")
        if any(s.start_speed < 0 or s.end_speed < 0 for s in segs):
            raise ValueError("speeds must be >= 0")
        zones = sorted(self.dead_zones)
        for t0, t1 in zones:
            if t0 >= t1:
                raise ValueError(f"dead zone [{t0}, {t1}] is empty or inverted")
            if t0 < 0 or t1 > self.duration:
                raise ValueError(f"dead zone [{t0}, {t1}] outside [0, {self.duration}]")
        for a, b in zip(zones, zones[1:]):
            if b[0] < a[1]:
                raise ValueError(f"dead zones {a} and {b} overlap")
        self.dead_zones = zones
        merged = dict(DEFAULT_NOISE)
        merged.update(self.noise)
        self.noise = merged
        if not is_valid_vin(self.vin):
            raise ValueError(f"scenario VIN {self.vin!r} fails the check digit")
        # cumulative distance at each segment start, for exact integration
        dist = 0.0
        starts = []
        for seg in segs:
            starts.append(dist)
            dist += seg.distance_m()
        object.__setattr__(self, "_cum_dist_m", starts)

    @property
    def duration_ms(self) -> int:
        return int(round(self.duration * 1000))

    def rng_for(self, channel: str):
        """Deterministic per-channel RNG, stable across runs and platforms."""
        import random

        return random.Random((self.seed << 32) ^ zlib.crc32(channel.encode("utf-8")))

    def segment_at(self, t_s: float) -> SpeedSegment:
        for seg in self.speed_profile:
            if seg.t_start <= t_s <= seg.t_end:
                return seg
        raise ValueError(f"t={t_s}s outside scenario [0, {self.duration}]")

    def distance_at(self, t_s: float) -> float:
        """Meters traveled since t=0 (exact segment-wise integration)."""
        for seg, base in zip(self.speed_profile, self._cum_dist_m):
            if seg.t_start <= t_s <= seg.t_end:
                dt = t_s - seg.t_start
                v0 = seg.start_speed
                v_t = seg.speed_at(t_s)
                return base + (v0 + v_t) / 2.0 / 3.6 * dt
        raise ValueError(f"t={t_s}s outside scenario [0, {self.duration}]")

    def position_at(self, t_s: float) -> tuple[float, float]:
        d = self.distance_at(t_s)
        h = math.radians(self.heading)
        north = d * math.cos(h)
        east = d * math.sin(h)
        lat = self.latitude + north / M_PER_DEG
        lon = self.longitude + east / (M_PER_DEG * math.cos(math.radians(self.latitude)))
        return lat, lon

    def online_at(self, t_s: float) -> bool:
        return not any(t0 <= t_s < t1 for t0, t1 in self.dead_zones)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "duration": self.duration,
            "startTimeMs": self.start_time_ms,
            "route": {"latitude": self.latitude, "longitude": self.longitude, "heading": self.heading},
            "speedProfile": [
                {"tStart": s.t_start, "tEnd": s.t_end, "startSpeed": s.start_speed, "endSpeed": s.end_speed}
                for s in self.speed_profile
            ],
            "heartBaseline": self.heart_baseline,
            "deadZones": [{"tStart": t0, "tEnd": t1} for t0, t1 in self.dead_zones],
            "noise": dict(self.noise),
            "vin": self.vin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        route = d.get("route", {})
        return cls(
            seed=int(d["seed"]),
            duration=float(d["duration"]),
            speed_profile=[
                SpeedSegment(
                    t_start=float(s["tStart"]),
                    t_end=float(s["tEnd"]),
                    start_speed=float(s["startSpeed"]),
                    end_speed=float(s["endSpeed"]),
                )
                for s in d.get("speedProfile", [])
            ],
            latitude=float(route.get("latitude", 0.0)),
            longitude=float(route.get("longitude", 0.0)),
            heading=float(route.get("heading", 0.0)),
            heart_baseline=float(d.get("heartBaseline", 60.0)),
            dead_zones=[(float(z["tStart"]), float(z["tEnd"])) for z in d.get("deadZones", [])],
            noise=dict(d.get("noise", {})),
            vin=d.get("vin", "1HGCM82633A004352"),
            start_time_ms=int(d.get("startTimeMs", DEFAULT_START_MS)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def sample_truth(scenario: Scenario, t_ms: int) -> TruthState:
    """Ground truth at t_ms (relative to scenario start). OUT_OF_RANGE
    outside [0, duration]."""
    t_s = t_ms / 1000.0
    if t_s < 0 or t_s > scenario.duration:
        raise ValueError(f"OUT_OF_RANGE: t={t_s}s outside [0, {scenario.duration}]")
    seg = scenario.segment_at(t_s)
    speed = seg.speed_at(t_s)
    accel_g = seg.slope_kmh_per_s / 3.6 / G_MS2
    lat, lon = scenario.position_at(t_s)
    heart = scenario.heart_baseline + 0.2 * speed
    return TruthState(
        t=t_ms,
        speed=speed,
        longitudinal_accel=accel_g,
        latitude=lat,
        longitude=lon,
        heading=scenario.heading,
        heart_rate=heart,
    )


def default_scenario(seed: int = 7, duration: float = 60.0, **overrides) -> Scenario:
    """A plausible 60 s suburban hop: accelerate, cruise, brake, cruise, stop."""
    d = duration
    profile = [
        SpeedSegment(0.0, d * 1 / 6, 0.0, 50.0),
        SpeedSegment(d * 1 / 6, d * 3 / 6, 50.0, 50.0),
        SpeedSegment(d * 3 / 6, d * 3.5 / 6, 50.0, 20.0),
        SpeedSegment(d * 3.5 / 6, d * 5 / 6, 20.0, 45.0),
        SpeedSegment(d * 5 / 6, d, 45.0, 0.0),
    ]
    params = dict(
        seed=seed,
        duration=d,
        speed_profile=profile,
        latitude=41.99,
        longitude=-93.62,
        heading=90.0,
        heart_baseline=62.0,
    )
    params.update(overrides)
    return Scenario(**params)
