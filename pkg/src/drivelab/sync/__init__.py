from drivelab.sync.client import HttpIngestClient, IngestClient, IngestError, TransportError
from drivelab.sync.engine import LocalStore, DirStore, SyncEngine, SyncError
from drivelab.sync.tasks import TaskState, UploadTask

__all__ = [
    "DirStore",
    "HttpIngestClient",
    "IngestClient",
    "IngestError",
    "LocalStore",
    "SyncEngine",
    "SyncError",
    "TaskState",
    "TransportError",
    "UploadTask",
]
