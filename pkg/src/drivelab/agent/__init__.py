from drivelab.agent.journal import JournalError, SessionJournal, local_chunk_reader, recover_session
from drivelab.agent.recorder import AgentError, DeviceSources, LiveStatus, RecorderAgent, VehicleSource

__all__ = [
    "AgentError",
    "DeviceSources",
    "JournalError",
    "LiveStatus",
    "RecorderAgent",
    "SessionJournal",
    "VehicleSource",
    "local_chunk_reader",
    "recover_session",
]
