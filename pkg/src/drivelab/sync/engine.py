"""Connectivity-aware store-and-forward upload coordinator.

Live tasks ship chunks as the journal rotates them; deferred tasks ship
a finalized session oldest-first. While offline every task parks before
its next network call (externally still "running", progress stalled) and
resumes from the server-confirmed offset when connectivity returns.
All state transitions are serialized through one condition variable and
persisted after each change.
"""

from __future__ import annotations

import logging
import threading
from pathlib import Path
from typing import Optional, Protocol

from drivelab.clock import Clock
from drivelab.model.manifest import SessionManifest, SessionStatus
from drivelab.sync.client import IngestClient, IngestError, TransportError
from drivelab.sync.tasks import IllegalTransition, TaskDirectory, TaskState, UploadTask

logger = logging.getLogger(__name__)

BACKOFF_BASE_S = 1.0
BACKOFF_CAP_S = 60.0
LIVE_POLL_S = 0.1  # virtual seconds between live-manifest polls
GATE_WAIT_S = 0.1  # real seconds between gate re-checks


class SyncError(Exception):
    """Codes: NOT_FOUND, INVALID_STATE, INVALID_TRANSITION."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


class _Canceled(Exception):
    pass


class _Stopped(Exception):
    pass


class LocalStore(Protocol):
    def get_manifest(self, session_id: str) -> SessionManifest: ...

    def read_chunk(self, session_id: str, stream: str, index: int) -> bytes: ...


class DirStore:
    """Reads session manifests and chunks from an agent data directory."""

    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir) / "sessions"

    def get_manifest(self, session_id: str) -> SessionManifest:
        path = self.dir / session_id / "manifest.json"
        if not path.exists():
            raise KeyError(session_id)
        return SessionManifest.from_json(path.read_text())

    def read_chunk(self, session_id: str, stream: str, index: int) -> bytes:
        return (self.dir / session_id / f"{stream}.{index}.chunk").read_bytes()


class SyncEngine:
    def __init__(
        self,
        store: LocalStore,
        client: IngestClient,
        data_dir: str | Path,
        clock: Optional[Clock] = None,
        max_concurrent: int = 2,
        online: bool = True,
    ):
        self.store = store
        self.client = client
        self.clock = clock or Clock()
        self._persist = TaskDirectory(data_dir)
        self._cond = threading.Condition()
        self._tasks: dict[str, UploadTask] = {}
        self._workers: dict[str, threading.Thread] = {}
        self._semaphore = threading.BoundedSemaphore(max_concurrent)
        self._online = online
        self._stopping = False
        self._load()

    # -- lifecycle ---------------------------------------------------------

    def _load(self) -> None:
        for task in self._persist.load_all():
            if task.state == TaskState.RUNNING:
                # interrupted by a previous process; restart from the top,
                # the server's confirmed offset makes re-running safe
                task.state = TaskState.QUEUED
                task.history = [TaskState.QUEUED]
                self._persist.save(task)
            self._tasks[task.task_id] = task

    def start(self) -> "SyncEngine":
        for task in self._tasks.values():
            if task.state == TaskState.QUEUED:
                self._spawn(task)
        return self

    def shutdown(self, timeout: float = 10.0) -> None:
        with self._cond:
            self._stopping = True
            self._cond.notify_all()
        for worker in list(self._workers.values()):
            worker.join(timeout=timeout)

    # -- public operations ---------------------------------------------------

    def enqueue(self, session_id: str, mode: str = "deferred") -> UploadTask:
        if mode not in ("live", "deferred"):
            raise SyncError("INVALID_STATE", f"unknown mode {mode!r}")
        try:
            manifest = self.store.get_manifest(session_id)
        except KeyError:
            raise SyncError("NOT_FOUND", session_id) from None
        with self._cond:
            for task in self._tasks.values():
                if task.session_id == session_id and task.state != TaskState.CANCELED:
                    if task.state == TaskState.FAILED:
                        task.transition(TaskState.QUEUED)
                        self._persist.save(task)
                        self._spawn(task)
                    return task
            if mode == "live" and manifest.status != SessionStatus.RECORDING:
                raise SyncError("INVALID_STATE", "live upload requires a recording session")
            if mode == "deferred" and manifest.status != SessionStatus.FINALIZED:
                raise SyncError("INVALID_STATE", f"deferred upload requires a finalized session, not {manifest.status}")
            task = UploadTask.new(session_id, mode, self.clock.now_ms())
            task.bytes_total = manifest.total_bytes()
            self._tasks[task.task_id] = task
            self._persist.save(task)
            self._spawn(task)
            return task

    def get(self, task_id: str) -> UploadTask:
        task = self._tasks.get(task_id)
        if task is None:
            raise SyncError("NOT_FOUND", task_id)
        return task

    def list_tasks(self) -> list[UploadTask]:
        return sorted(self._tasks.values(), key=lambda t: t.created_at)

    def pause(self, task_id: str) -> UploadTask:
        with self._cond:
            task = self.get(task_id)
            self._transition(task, TaskState.PAUSED)
            self._cond.notify_all()
            return task

    def resume(self, task_id: str) -> UploadTask:
        with self._cond:
            task = self.get(task_id)
            self._transition(task, TaskState.RUNNING)
            self._cond.notify_all()
            self._spawn(task)
            return task

    def cancel(self, task_id: str) -> UploadTask:
        with self._cond:
            task = self.get(task_id)
            self._transition(task, TaskState.CANCELED)
            self._cond.notify_all()
            worker_alive = task.task_id in self._workers and self._workers[task.task_id].is_alive()
        if not worker_alive:
            self._abort_upload(task)
        return task

    def progress(self, task_id: str) -> tuple[int, int, float]:
        task = self.get(task_id)
        return task.bytes_sent, task.bytes_total, task.fraction

    def on_connectivity(self, online: bool) -> None:
        with self._cond:
            if online == self._online:
                return
            self._online = online
            self._cond.notify_all()
        logger.info("connectivity: %s", "online" if online else "offline")

    @property
    def online(self) -> bool:
        return self._online

    # -- internals ------------------------------------------------------------

    def _transition(self, task: UploadTask, target: str) -> None:
        try:
            task.transition(target)
        except IllegalTransition as exc:
            raise SyncError("INVALID_TRANSITION", str(exc)) from None
        self._persist.save(task)

    def _spawn(self, task: UploadTask) -> None:
        existing = self._workers.get(task.task_id)
        if existing is not None and existing.is_alive():
            return
        worker = threading.Thread(target=self._run, args=(task,), name=f"sync-{task.task_id[:8]}", daemon=True)
        self._workers[task.task_id] = worker
        worker.start()

    def _run(self, task: UploadTask) -> None:
        with self._semaphore:
            with self._cond:
                if task.state == TaskState.QUEUED:
                    try:
                        self._transition(task, TaskState.RUNNING)
                    except SyncError:
                        return
                elif task.state != TaskState.RUNNING:
                    return
            try:
                if task.mode == "live":
                    self._run_live(task)
                else:
                    self._run_deferred(task)
            except _Canceled:
                self._abort_upload(task)
            except _Stopped:
                pass
            except IngestError as exc:
                self._fail(task, f"{exc.code}: {exc}")
            except Exception as exc:
                logger.exception("task %s failed", task.task_id)
                self._fail(task, str(exc))

    def _fail(self, task: UploadTask, error: str) -> None:
        with self._cond:
            task.last_error = error
            if task.state == TaskState.RUNNING:
                self._transition(task, TaskState.FAILED)
            else:
                self._persist.save(task)
        logger.warning("task %s failed: %s", task.task_id, error)

    def _finish(self, task: UploadTask) -> None:
        """Mark completed. A cancel that raced the final complete() call
        still honors the cancel contract: the server copy is deleted."""
        with self._cond:
            if task.state == TaskState.RUNNING:
                self._transition(task, TaskState.COMPLETED)
                return
            canceled = task.state == TaskState.CANCELED
        if canceled:
            raise _Canceled()

    def _gate(self, task: UploadTask) -> bool:
        """Park while paused or offline. True if the task had to wait and
        should re-query the server's confirmed offset."""
        waited = False
        with self._cond:
            while True:
                if self._stopping:
                    raise _Stopped()
                if task.state == TaskState.CANCELED:
                    raise _Canceled()
                if task.state == TaskState.PAUSED or not self._online:
                    waited = True
                    self._cond.wait(GATE_WAIT_S)
                    continue
                if task.state != TaskState.RUNNING:
                    raise _Stopped()  # external state change; worker retires
                return waited

    def _call(self, task: UploadTask, fn, *args, **kwargs):
        """Gated network call with exponential backoff on transport errors."""
        backoff = BACKOFF_BASE_S
        while True:
            self._gate(task)
            try:
                return fn(*args, **kwargs)
            except TransportError as exc:
                with self._cond:
                    task.attempts += 1
                    task.last_error = str(exc)
                    self._persist.save(task)
                logger.debug("transport error (attempt %d): %s", task.attempts, exc)
                self._backoff_sleep(task, backoff)
                backoff = min(backoff * 2.0, BACKOFF_CAP_S)

    def _backoff_sleep(self, task: UploadTask, seconds: float) -> None:
        deadline = self.clock.now_ms() + int(seconds * 1000)
        while self.clock.now_ms() < deadline:
            if self._stopping or task.state == TaskState.CANCELED:
                return
            self.clock.sleep(min(0.1, max(0.001, (deadline - self.clock.now_ms()) / 1000)))

    def _refresh_offset(self, task: UploadTask, manifest: SessionManifest) -> set[tuple[str, int]]:
        confirmed = self._call(task, self.client.get_offset, task.upload_id)
        sizes = {(c.stream, c.index): c.byteLength for c in manifest.chunks}
        with self._cond:
            task.bytes_sent = sum(sizes.get(key, 0) for key in confirmed)
            self._persist.save(task)
        return confirmed

    def _ensure_upload(self, task: UploadTask, manifest: SessionManifest) -> None:
        if task.upload_id is None:
            task.upload_id = self._call(task, self.client.create_upload, manifest)
            self._persist.save(task)

    def _send_chunk(self, task: UploadTask, manifest: SessionManifest, ref) -> None:
        data = self.store.read_chunk(task.session_id, ref.stream, ref.index)
        with self._cond:
            task.next_chunk = (ref.stream, ref.index)
        self._call(task, self.client.put_chunk, task.upload_id, ref.stream, ref.index, data, ref.digest)
        with self._cond:
            task.bytes_sent += ref.byteLength
            task.next_chunk = None
            self._persist.save(task)

    def _run_deferred(self, task: UploadTask) -> None:
        manifest = self.store.get_manifest(task.session_id)
        with self._cond:
            task.bytes_total = manifest.total_bytes()
            self._persist.save(task)
        self._ensure_upload(task, manifest)
        confirmed = self._refresh_offset(task, manifest)
        for ref in manifest.chunks:  # manifest order == rotation order == oldest first
            key = (ref.stream, ref.index)
            if key in confirmed:
                continue
            if self._gate(task):
                confirmed = self._refresh_offset(task, manifest)
                if key in confirmed:
                    continue
            self._send_chunk(task, manifest, ref)
            confirmed.add(key)
        self._call(task, self.client.complete, task.upload_id)
        self._finish(task)

    def _run_live(self, task: UploadTask) -> None:
        confirmed: Optional[set[tuple[str, int]]] = None
        while True:
            waited = self._gate(task)
            manifest = self.store.get_manifest(task.session_id)
            with self._cond:
                task.bytes_total = manifest.total_bytes()
            self._ensure_upload(task, manifest)
            if waited or confirmed is None:
                confirmed = self._refresh_offset(task, manifest)

            outstanding = [c for c in manifest.chunks if (c.stream, c.index) not in confirmed]
            if outstanding:
                ref = outstanding[0]
                self._send_chunk(task, manifest, ref)
                confirmed.add((ref.stream, ref.index))
                continue

            if manifest.status == SessionStatus.FINALIZED:
                self._call(task, self.client.complete, task.upload_id, manifest)
                self._finish(task)
                return
            if manifest.status in (SessionStatus.FAILED,):
                self._fail(task, "session failed before upload completed")
                return
            self.clock.sleep(LIVE_POLL_S)

    def _abort_upload(self, task: UploadTask) -> None:
        """Best-effort server-side delete after cancel; local data untouched."""
        if task.upload_id is None:
            return
        for attempt in range(5):
            if self._stopping:
                return
            if not self._online:
                with self._cond:
                    self._cond.wait(GATE_WAIT_S)
                continue
            try:
                self.client.abort(task.upload_id)
                return
            except IngestError as exc:
                if exc.code in ("GONE", "UNKNOWN_UPLOAD"):
                    return
                logger.warning("abort of %s rejected: %s", task.upload_id, exc)
                return
            except TransportError:
                self._backoff_sleep(task, BACKOFF_BASE_S * (2**attempt))
        logger.warning("could not reach server to abort upload %s", task.upload_id)
