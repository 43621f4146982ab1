"""Agent control API: the surface the console and `uploads` CLI drive."""

import time

import pytest
import requests

from drivelab.agent.control_api import AgentDaemon, serve_control
from drivelab.agent.recorder import RecorderAgent
from drivelab.model.records import ConsentProfile, UserSettings
from drivelab.sim.devices import scenario_sources
from drivelab.sim.scenario import default_scenario
from drivelab.sync.client import HttpIngestClient
from drivelab.sync.engine import DirStore, SyncEngine


@pytest.fixture
def control(tmp_path, fast_clock, server):
    _, token = server.make_account()
    scenario = default_scenario(duration=15.0)
    agent = RecorderAgent(tmp_path / "agent", clock=fast_clock)
    engine = SyncEngine(DirStore(tmp_path / "agent"), HttpIngestClient(server.base, token),
                        tmp_path / "agent", clock=fast_clock).start()
    daemon = AgentDaemon(agent, engine, lambda settings: scenario_sources(scenario, settings))
    http = serve_control(daemon)
    yield http.base_url, agent, engine
    http.stop()
    engine.shutdown()


def _wait(predicate, timeout=15.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.02)
    return False


def test_status_before_start(control):
    base, _, _ = control
    body = requests.get(f"{base}/control/status").json()
    assert body["recording"] is False
    assert body["heartRate"] is None
    assert body["vehicleSpeed"] is None
    assert body["accelerationZ"] is None


def test_record_start_status_stop_cycle(control, fast_clock):
    base, agent, _ = control
    r = requests.post(f"{base}/control/record/start", json={})
    assert r.status_code == 201
    session_id = r.json()["sessionId"]

    assert _wait(lambda: requests.get(f"{base}/control/status").json()["accelerationZ"] is not None)
    body = requests.get(f"{base}/control/status").json()
    assert body["recording"] is True and body["sessionId"] == session_id
    assert body["elapsedMs"] >= 0

    r = requests.post(f"{base}/control/record/start", json={})
    assert r.status_code == 409
    assert r.json()["error"] == "ALREADY_RECORDING"

    agent.wait_for_sources(60)
    r = requests.post(f"{base}/control/record/stop")
    assert r.status_code == 200
    assert r.json()["manifest"]["status"] == "finalized"

    r = requests.post(f"{base}/control/record/stop")
    assert r.status_code == 409
    assert r.json()["error"] == "NOT_RECORDING"


def test_sessions_listing_detail_delete(control):
    base, agent, _ = control
    requests.post(f"{base}/control/record/start",
                  json={"settings": {"frameRate": 30, "frequency": 2, "automaticUpload": False}})
    agent.wait_for_sources(60)
    requests.post(f"{base}/control/record/stop")

    sessions = requests.get(f"{base}/control/sessions").json()["sessions"]
    assert len(sessions) == 1
    sid = sessions[0]["sessionId"]

    detail = requests.get(f"{base}/control/sessions/{sid}").json()
    assert detail["manifest"]["sessionId"] == sid
    assert detail["recordCounts"]["heart"] == 3  # 15s at 5s cadence

    r = requests.delete(f"{base}/control/sessions/{sid}")
    assert r.status_code == 200
    assert requests.get(f"{base}/control/sessions").json()["sessions"] == []
    assert requests.delete(f"{base}/control/sessions/{sid}").status_code == 404


def test_settings_round_trip(control):
    base, _, _ = control
    current = requests.get(f"{base}/control/settings").json()
    assert current == {"frameRate": 30.0, "frequency": 1.0, "automaticUpload": True}
    r = requests.put(f"{base}/control/settings",
                     json={"frameRate": 24, "frequency": 4, "automaticUpload": False})
    assert r.status_code == 200
    assert requests.get(f"{base}/control/settings").json()["frequency"] == 4.0
    r = requests.put(f"{base}/control/settings", json={"frameRate": 600, "frequency": 1})
    assert r.status_code == 422


def test_upload_lifecycle_over_control_api(control):
    base, agent, engine = control
    requests.post(f"{base}/control/record/start", json={"settings": {"automaticUpload": False}})
    agent.wait_for_sources(60)
    requests.post(f"{base}/control/record/stop")
    sid = requests.get(f"{base}/control/sessions").json()["sessions"][0]["sessionId"]

    engine.on_connectivity(False)  # hold the task so pause is deterministic
    r = requests.post(f"{base}/control/sessions/{sid}/upload", json={})
    assert r.status_code == 201
    task = r.json()["task"]

    tasks = requests.get(f"{base}/control/uploads").json()["tasks"]
    assert [t["taskId"] for t in tasks] == [task["taskId"]]

    r = requests.post(f"{base}/control/uploads/{task['taskId']}/pause")
    assert r.status_code == 200 and r.json()["task"]["state"] == "paused"

    r = requests.post(f"{base}/control/uploads/{task['taskId']}/pause")
    assert r.status_code == 409 and r.json()["error"] == "INVALID_TRANSITION"

    engine.on_connectivity(True)
    r = requests.post(f"{base}/control/uploads/{task['taskId']}/resume")
    assert r.status_code == 200
    assert _wait(lambda: requests.get(f"{base}/control/uploads/{task['taskId']}").json()["task"]["state"]
                 == "completed", timeout=30)

    r = requests.post(f"{base}/control/uploads/{task['taskId']}/cancel")
    assert r.status_code == 409  # completed is terminal


def test_consent_gating_via_api(control):
    base, agent, _ = control
    consent = {"motion": True, "location": True, "health": False, "video": True, "vehicle": True}
    r = requests.post(f"{base}/control/record/start", json={"consent": consent})
    assert r.status_code == 201
    agent.wait_for_sources(60)
    manifest = requests.post(f"{base}/control/record/stop").json()["manifest"]
    assert "heart" not in manifest["streams"]
    assert manifest["healthSnapshot"] is None


def test_unknown_route_404(control):
    base, _, _ = control
    assert requests.get(f"{base}/control/nope").status_code == 404
