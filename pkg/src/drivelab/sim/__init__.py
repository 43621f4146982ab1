from drivelab.sim.dongle import DongleEmulator, format_reply, run_dongle_emulator
from drivelab.sim.emitters import (
    connectivity_signal,
    emit_heart,
    emit_location,
    emit_motion,
    emit_video,
    health_history,
)
from drivelab.sim.scenario import Scenario, SpeedSegment, TruthState, sample_truth

__all__ = [
    "DongleEmulator",
    "Scenario",
    "SpeedSegment",
    "TruthState",
    "connectivity_signal",
    "emit_heart",
    "emit_location",
    "emit_motion",
    "emit_video",
    "format_reply",
    "health_history",
    "run_dongle_emulator",
    "sample_truth",
]
