"""Local HTTP control surface for the recorder agent and sync engine.

This is what the CLI `uploads` subcommands and the web console drive.
While recording, status carries numbers only -- no preview payloads.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Optional

from drivelab.agent.journal import iter_stream_records, load_manifest, session_dir
from drivelab.agent.recorder import AgentError, DeviceSources, RecorderAgent
from drivelab.httpd import ApiError, HttpServer, Request, Response, Router
from drivelab.model.records import ConsentProfile, UserSettings
from drivelab.sync.engine import SyncEngine, SyncError

_AGENT_STATUS = {
    "ALREADY_RECORDING": 409,
    "NOT_RECORDING": 409,
    "CONSENT_DENIED": 403,
    "NOT_FOUND": 404,
    "SESSION_ACTIVE": 409,
    "DISK_FULL": 507,
}
_SYNC_STATUS = {"NOT_FOUND": 404, "INVALID_STATE": 409, "INVALID_TRANSITION": 409}

SourceFactory = Callable[[UserSettings], DeviceSources]


class AgentDaemon:
    """Recorder + sync engine behind one control API."""

    def __init__(self, agent: RecorderAgent, engine: Optional[SyncEngine],
                 source_factory: SourceFactory):
        self.agent = agent
        self.engine = engine
        self.source_factory = source_factory
        self._settings_path = Path(agent.data_dir) / "settings.json"
        if self._settings_path.exists():
            self.agent.settings = UserSettings.from_dict(json.loads(self._settings_path.read_text()))
        if engine is not None:
            agent.on_finalized = lambda manifest: engine.enqueue(manifest.sessionId, "deferred")

    def save_settings(self, settings: UserSettings) -> None:
        settings.validate()
        self.agent.settings = settings
        self._settings_path.write_text(json.dumps(settings.to_dict(), indent=2))

    def start_recording(self, settings: UserSettings, consent: ConsentProfile,
                        streams: Optional[list[str]] = None, live_upload: bool = False) -> dict:
        sources = self.source_factory(settings)
        session_id = self.agent.start_session(settings, consent, sources, streams=streams)
        task_id = None
        if live_upload and self.engine is not None:
            task_id = self.engine.enqueue(session_id, "live").task_id
        return {"sessionId": session_id, "liveTaskId": task_id}


def build_control_router(daemon: AgentDaemon) -> Router:
    router = Router()
    agent = daemon.agent

    def guarded(handler):
        def wrap(request: Request) -> Response:
            try:
                return handler(request)
            except AgentError as exc:
                raise ApiError(_AGENT_STATUS.get(exc.code, 400), exc.code, str(exc))
            except SyncError as exc:
                raise ApiError(_SYNC_STATUS.get(exc.code, 400), exc.code, str(exc))

        return wrap

    def route(method: str, pattern: str):
        def deco(handler):
            router.add(method, pattern, guarded(handler))
            return handler

        return deco

    def need_engine() -> SyncEngine:
        if daemon.engine is None:
            raise ApiError(503, "NO_SYNC", "agent is running without a sync engine")
        return daemon.engine

    @route("POST", "/control/record/start")
    def start(request: Request) -> Response:
        body = request.json()
        settings = UserSettings.from_dict(body["settings"]) if body.get("settings") else agent.settings
        consent = ConsentProfile.from_dict(body["consent"]) if body.get("consent") else ConsentProfile.grant_all()
        result = daemon.start_recording(
            settings, consent,
            streams=body.get("streams"),
            live_upload=bool(body.get("liveUpload", False)),
        )
        return Response(201, result)

    @route("POST", "/control/record/stop")
    def stop(request: Request) -> Response:
        manifest = agent.stop_session()
        return Response(200, {"manifest": manifest.to_dict()})

    @route("GET", "/control/status")
    def status(request: Request) -> Response:
        return Response(200, agent.live_status().to_dict())

    @route("GET", "/control/sessions")
    def sessions(request: Request) -> Response:
        return Response(200, {"sessions": [m.to_dict() for m in agent.list_sessions()]})

    @route("GET", "/control/sessions/{id}")
    def session_detail(request: Request) -> Response:
        manifest = agent.get_manifest(request.params["id"])
        d = session_dir(agent.data_dir, manifest.sessionId)
        counts = {}
        if manifest.status != "recording":
            for stream in manifest.streams:
                counts[stream] = sum(1 for _ in iter_stream_records(d, manifest, stream))
        return Response(200, {"manifest": manifest.to_dict(), "recordCounts": counts})

    @route("DELETE", "/control/sessions/{id}")
    def delete_session(request: Request) -> Response:
        agent.delete_session(request.params["id"])
        return Response(200, {"deleted": request.params["id"]})

    @route("POST", "/control/sessions/{id}/upload")
    def enqueue_upload(request: Request) -> Response:
        task = need_engine().enqueue(request.params["id"], request.json().get("mode", "deferred"))
        return Response(201, {"task": task.to_dict()})

    @route("GET", "/control/settings")
    def get_settings(request: Request) -> Response:
        return Response(200, agent.settings.to_dict())

    @route("PUT", "/control/settings")
    def put_settings(request: Request) -> Response:
        try:
            settings = UserSettings.from_dict(request.json())
        except ValueError as exc:
            raise ApiError(422, "BAD_SETTINGS", str(exc))
        daemon.save_settings(settings)
        return Response(200, settings.to_dict())

    @route("GET", "/control/uploads")
    def uploads(request: Request) -> Response:
        return Response(200, {"tasks": [t.to_dict() for t in need_engine().list_tasks()]})

    @route("GET", "/control/uploads/{id}")
    def upload_detail(request: Request) -> Response:
        return Response(200, {"task": need_engine().get(request.params["id"]).to_dict()})

    @route("POST", "/control/uploads/{id}/pause")
    def pause(request: Request) -> Response:
        return Response(200, {"task": need_engine().pause(request.params["id"]).to_dict()})

    @route("POST", "/control/uploads/{id}/resume")
    def resume(request: Request) -> Response:
        return Response(200, {"task": need_engine().resume(request.params["id"]).to_dict()})

    @route("POST", "/control/uploads/{id}/cancel")
    def cancel(request: Request) -> Response:
        return Response(200, {"task": need_engine().cancel(request.params["id"]).to_dict()})

    @route("GET", "/control/revalidate/{id}")
    def revalidate(request: Request) -> Response:
        return Response(200, agent.revalidate(request.params["id"]).to_dict())

    return router


def serve_control(daemon: AgentDaemon, host: str = "127.0.0.1", port: int = 0) -> HttpServer:
    return HttpServer(build_control_router(daemon), host=host, port=port).start()
