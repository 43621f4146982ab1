"""Resumable-upload task state machine with per-transition persistence.

Pause only suspends the transfer (client and server partial state stays
put); cancel is terminal and deletes the server-side partial upload.
Task records persist under <data_dir>/uploads/ so paused transfers
survive a process restart.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


class TaskState:
    QUEUED = "queued"
    RUNNING = "running"
    PAUSED = "paused"
    CANCELED = "canceled"
    COMPLETED = "completed"
    FAILED = "failed"


# cancel is allowed from every non-terminal state per the pause/cancel
# contract; failed tasks may be re-queued for retry
LEGAL_TRANSITIONS: dict[str, set[str]] = {
    TaskState.QUEUED: {TaskState.RUNNING, TaskState.CANCELED},
    TaskState.RUNNING: {TaskState.PAUSED, TaskState.CANCELED, TaskState.COMPLETED, TaskState.FAILED},
    TaskState.PAUSED: {TaskState.RUNNING, TaskState.CANCELED},
    TaskState.FAILED: {TaskState.QUEUED},
    TaskState.CANCELED: set(),
    TaskState.COMPLETED: set(),
}


class IllegalTransition(Exception):
    def __init__(self, current: str, target: str):
        super().__init__(f"INVALID_TRANSITION: {current} -> {target}")
        self.code = "INVALID_TRANSITION"
        self.current = current
        self.target = target


@dataclass
class UploadTask:
    task_id: str
    session_id: str
    mode: str  # "live" | "deferred"
    state: str = TaskState.QUEUED
    bytes_sent: int = 0
    bytes_total: int = 0
    next_chunk: Optional[tuple[str, int]] = None
    attempts: int = 0
    last_error: Optional[str] = None
    upload_id: Optional[str] = None
    created_at: int = 0
    history: list[str] = field(default_factory=lambda: [TaskState.QUEUED])

    def transition(self, target: str) -> None:
        if target not in LEGAL_TRANSITIONS[self.state]:
            raise IllegalTransition(self.state, target)
        self.state = target
        self.history.append(target)

    @property
    def fraction(self) -> float:
        return 0.0 if self.bytes_total == 0 else self.bytes_sent / self.bytes_total

    def to_dict(self) -> dict:
        return {
            "taskId": self.task_id,
            "sessionId": self.session_id,
            "mode": self.mode,
            "state": self.state,
            "bytesSent": self.bytes_sent,
            "bytesTotal": self.bytes_total,
            "nextChunk": list(self.next_chunk) if self.next_chunk else None,
            "attempts": self.attempts,
            "lastError": self.last_error,
            "uploadId": self.upload_id,
            "createdAt": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UploadTask":
        nc = d.get("nextChunk")
        return cls(
            task_id=d["taskId"],
            session_id=d["sessionId"],
            mode=d["mode"],
            state=d["state"],
            bytes_sent=int(d.get("bytesSent", 0)),
            bytes_total=int(d.get("bytesTotal", 0)),
            next_chunk=(nc[0], int(nc[1])) if nc else None,
            attempts=int(d.get("attempts", 0)),
            last_error=d.get("lastError"),
            upload_id=d.get("uploadId"),
            created_at=int(d.get("createdAt", 0)),
            history=[d["state"]],
        )

    @classmethod
    def new(cls, session_id: str, mode: str, created_at: int) -> "UploadTask":
        return cls(task_id=str(uuid.uuid4()), session_id=session_id, mode=mode, created_at=created_at)


class TaskDirectory:
    """JSON-file persistence for tasks, one file per task."""

    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir) / "uploads"
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def save(self, task: UploadTask) -> None:
        with self._lock:
            tmp = self.dir / f"{task.task_id}.json.tmp"
            tmp.write_text(json.dumps(task.to_dict(), indent=2))
            os.replace(tmp, self.dir / f"{task.task_id}.json")

    def load_all(self) -> list[UploadTask]:
        out = []
        for f in sorted(self.dir.glob("*.json")):
            out.append(UploadTask.from_dict(json.loads(f.read_text())))
        return out
