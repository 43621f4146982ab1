import os
import threading

import pytest
import requests

from drivelab.clock import ScaledClock
from drivelab.model.records import ConsentProfile
from drivelab.server.api import serve as serve_ingestion

MASTER_KEY = bytes.fromhex("11" * 32)
PASSWORD = "a-long-enough-password"


class ServerHarness:
    """One live ingestion service + helpers to mint confirmed accounts."""

    def __init__(self, data_dir, clock=None):
        self.dir = data_dir
        self.http, self.service = serve_ingestion(data_dir, MASTER_KEY, clock=clock)
        self.base = self.http.base_url
        self._count = 0
        self._lock = threading.Lock()

    def stop(self):
        self.http.stop()

    def read_code(self, email):
        import json

        for f in sorted((self.dir / "outbox").glob("*.json"), reverse=True):
            mail = json.loads(f.read_text())
            if mail["to"] == email:
                return mail["code"]
        raise AssertionError(f"no spooled mail for {email}")

    def make_account(self, consent=None):
        with self._lock:
            self._count += 1
            email = f"driver{self._count}@example.test"
        r = requests.post(f"{self.base}/v1/register", json={"email": email, "password": PASSWORD})
        assert r.status_code == 201, r.text
        r = requests.post(f"{self.base}/v1/confirm", json={"email": email, "code": self.read_code(email)})
        assert r.status_code == 200, r.text
        r = requests.post(f"{self.base}/v1/login", json={"email": email, "password": PASSWORD})
        assert r.status_code == 200, r.text
        token = r.json()["token"]
        if consent is None:
            consent = ConsentProfile.grant_all()
        r = requests.put(f"{self.base}/v1/consent", json=consent.to_dict(),
                         headers=self.auth(token))
        assert r.status_code == 200, r.text
        return email, token

    @staticmethod
    def auth(token):
        return {"Authorization": f"Bearer {token}"}


@pytest.fixture
def server(tmp_path):
    harness = ServerHarness(tmp_path / "server")
    yield harness
    harness.stop()


@pytest.fixture
def fast_clock():
    return ScaledClock(float(os.environ.get("DRIVELAB_TEST_SPEED", "20")))


def record_scenario_session(tmp_path, scenario, clock, consent=None, settings=None,
                            with_obd=False, wait_s=120):
    """Record one full scenario into a fresh agent dir; returns
    (agent, session_id, manifest, emulator-or-None)."""
    from drivelab.agent.recorder import RecorderAgent
    from drivelab.model.records import UserSettings
    from drivelab.sim.devices import scenario_sources
    from drivelab.sim.dongle import run_dongle_emulator

    consent = consent or ConsentProfile.grant_all()
    settings = settings or UserSettings()
    emulator = run_dongle_emulator(scenario, clock=clock) if with_obd else None
    agent = RecorderAgent(tmp_path / "agent", clock=clock)
    sources = scenario_sources(
        scenario, settings,
        obd_endpoint=emulator.endpoint if emulator else None,
    )
    session_id = agent.start_session(settings, consent, sources)
    assert agent.wait_for_sources(wait_s)
    manifest = agent.stop_session()
    return agent, session_id, manifest, emulator
