"""In-process composition of simulator, agent, sync engine, and server:
the scripted end-to-end drive used by `drivelab run` and the acceptance
suite."""

from __future__ import annotations

import json
import logging
import shutil
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import requests

from drivelab.agent.journal import iter_stream_records, load_manifest, local_chunk_reader, session_dir
from drivelab.agent.recorder import RecorderAgent
from drivelab.clock import Clock, ScaledClock
from drivelab.model.manifest import SessionManifest
from drivelab.model.records import ConsentProfile, UserSettings
from drivelab.model.revalidate import revalidate_manifest
from drivelab.server.api import serve as serve_ingestion
from drivelab.server.storage import master_key_from_hex
from drivelab.sim.devices import scenario_sources
from drivelab.sim.dongle import run_dongle_emulator
from drivelab.sim.emitters import connectivity_signal
from drivelab.sim.scenario import Scenario
from drivelab.sync.client import HttpIngestClient
from drivelab.sync.engine import DirStore, SyncEngine

logger = logging.getLogger(__name__)

TEST_ACCOUNT = ("operator@drivelab.test", "correct-horse-battery")


@dataclass
class RunResult:
    session_id: str
    manifest: SessionManifest
    counts: dict[str, int]
    task_state: str
    digests_match: bool
    revalidate_ok: bool
    server_session: Optional[dict]
    warnings: list[str] = field(default_factory=list)
    # per-stream (t, value) series of the default chart field, when asked for
    series: dict[str, list[tuple[float, float]]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.task_state == "completed" and self.digests_match and self.revalidate_ok


def register_confirm_login(base_url: str, server_dir: Path, email: str, password: str) -> str:
    """Create, confirm (via the outbox spool), and log in an account."""
    r = requests.post(f"{base_url}/v1/register", json={"email": email, "password": password}, timeout=10)
    r.raise_for_status()
    spool = sorted((server_dir / "outbox").glob("*.json"))
    code = None
    for mail in reversed(spool):
        payload = json.loads(mail.read_text())
        if payload["to"] == email.lower():
            code = payload["code"]
            break
    if code is None:
        raise RuntimeError("confirmation code never reached the outbox spool")
    requests.post(f"{base_url}/v1/confirm", json={"email": email, "code": code}, timeout=10).raise_for_status()
    r = requests.post(f"{base_url}/v1/login", json={"email": email, "password": password}, timeout=10)
    r.raise_for_status()
    return r.json()["token"]


def _drive_connectivity(engine: SyncEngine, scenario: Scenario, clock: Clock,
                        t0_ms: int, stop: threading.Event) -> None:
    for rel_ms, online in connectivity_signal(scenario):
        deadline = t0_ms + rel_ms
        while not stop.is_set() and clock.now_ms() < deadline:
            clock.sleep(min(0.05, max(0.001, (deadline - clock.now_ms()) / 1000)))
        if stop.is_set():
            return
        engine.on_connectivity(online)
    # back online after the drive so the queued backlog can drain
    deadline = t0_ms + scenario.duration_ms
    while not stop.is_set() and clock.now_ms() < deadline:
        clock.sleep(0.05)
    engine.on_connectivity(True)


def run_scenario(
    scenario: Scenario,
    time_scale: float = 10.0,
    base_dir: Optional[Path] = None,
    consent: Optional[ConsentProfile] = None,
    settings: Optional[UserSettings] = None,
    master_key_hex: str = "aa" * 32,
    drain_timeout_s: float = 120.0,
    collect_series: bool = False,
) -> RunResult:
    """Record the full scenario through the real wire protocols and
    verify end-to-end fidelity."""
    clock = ScaledClock(time_scale) if time_scale != 1.0 else Clock()
    consent = consent or ConsentProfile.grant_all()
    settings = settings or UserSettings()
    tmp = None
    if base_dir is None:
        tmp = tempfile.mkdtemp(prefix="drivelab-run-")
        base_dir = Path(tmp)
    base_dir = Path(base_dir)
    server_dir = base_dir / "server"
    agent_dir = base_dir / "agent"

    server, _service = serve_ingestion(server_dir, master_key_from_hex(master_key_hex), clock=clock)
    emulator = run_dongle_emulator(scenario, clock=clock)
    stop_flag = threading.Event()
    engine = None
    try:
        token = register_confirm_login(server.base_url, server_dir, *TEST_ACCOUNT)
        auth = {"Authorization": f"Bearer {token}"}
        requests.put(f"{server.base_url}/v1/consent", json=consent.to_dict(), headers=auth, timeout=10).raise_for_status()

        agent = RecorderAgent(agent_dir, clock=clock, user_id="operator@drivelab.test")
        online0 = connectivity_signal(scenario)[0][1]
        engine = SyncEngine(
            DirStore(agent_dir), HttpIngestClient(server.base_url, token), agent_dir,
            clock=clock, online=online0,
        ).start()

        sources = scenario_sources(scenario, settings, obd_endpoint=emulator.endpoint)
        session_id = agent.start_session(settings, consent, sources)
        session_t0 = clock.now_ms()
        task = engine.enqueue(session_id, "live")
        conn_thread = threading.Thread(
            target=_drive_connectivity,
            args=(engine, scenario, clock, session_t0, stop_flag),
            daemon=True,
        )
        conn_thread.start()

        if not agent.wait_for_sources(timeout_s=drain_timeout_s):
            logger.warning("some sources never finished; stopping anyway")
        manifest = agent.stop_session()

        deadline = time.monotonic() + drain_timeout_s
        while task.state not in ("completed", "failed", "canceled") and time.monotonic() < deadline:
            time.sleep(0.02)

        d = session_dir(agent_dir, session_id)
        counts = {
            stream: sum(1 for _ in iter_stream_records(d, manifest, stream))
            for stream in manifest.streams
        }
        report = revalidate_manifest(manifest, local_chunk_reader(d))

        series: dict[str, list[tuple[float, float]]] = {}
        if collect_series:
            from drivelab.report import DEFAULT_EXPORT_FIELD, extract_series

            for stream, field_name in DEFAULT_EXPORT_FIELD.items():
                if stream in manifest.streams:
                    series[stream] = extract_series(
                        iter_stream_records(d, manifest, stream), stream, field_name
                    )

        server_session = None
        digests_match = False
        r = requests.get(f"{server.base_url}/v1/sessions", headers=auth, timeout=10)
        if r.ok:
            for s in r.json()["sessions"]:
                if s["sessionId"] == session_id:
                    server_session = s
                    local = {(c.stream, c.index): c.digest for c in manifest.chunks}
                    remote = {(c["stream"], int(c["index"])): c["digest"] for c in s["chunks"]}
                    digests_match = local == remote and len(local) > 0

        return RunResult(
            session_id=session_id,
            manifest=manifest,
            counts=counts,
            task_state=task.state,
            digests_match=digests_match,
            revalidate_ok=report.ok,
            server_session=server_session,
            warnings=list(agent.live_status().warnings),
            series=series,
        )
    finally:
        stop_flag.set()
        if engine is not None:
            engine.shutdown()
        emulator.stop()
        server.stop()
        if tmp is not None:
            shutil.rmtree(tmp, ignore_errors=True)
