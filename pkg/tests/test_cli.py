"""CLI surface: exit codes, formats, and the golden scenario run."""

import json

from drivelab.cli import EXIT_OK, EXIT_VALIDATION, main
from drivelab.sim.scenario import default_scenario

from conftest import record_scenario_session


def _record(tmp_path, fast_clock, duration=10.0):
    scenario = default_scenario(duration=duration)
    agent, sid, manifest, _ = record_scenario_session(tmp_path, scenario, fast_clock)
    return agent, sid, manifest


def test_validate_ok_exit_zero(tmp_path, fast_clock, capsys):
    agent, sid, _ = _record(tmp_path, fast_clock)
    session_dir = str(agent.data_dir / "sessions" / sid)
    assert main(["validate", session_dir]) == EXIT_OK
    assert "ok" in capsys.readouterr().out


def test_validate_tampered_exit_two_names_digest(tmp_path, fast_clock, capsys):
    agent, sid, manifest = _record(tmp_path, fast_clock)
    victim = agent.data_dir / "sessions" / sid / manifest.chunks[0].filename()
    blob = bytearray(victim.read_bytes())
    blob[8] ^= 0x01
    victim.write_bytes(bytes(blob))
    assert main(["validate", str(agent.data_dir / "sessions" / sid)]) == EXIT_VALIDATION
    out = capsys.readouterr().out
    assert "DIGEST_MISMATCH" in out


def test_validate_missing_manifest_usage_error(tmp_path):
    assert main(["validate", str(tmp_path)]) == 1


def test_export_csv_line_count(tmp_path, fast_clock, capsys):
    agent, sid, manifest = _record(tmp_path, fast_clock)
    out = tmp_path / "motion.csv"
    code = main([
        "export", "--data", str(agent.data_dir), "--session", sid,
        "--stream", "motion", "--format", "csv", "--out", str(out),
    ])
    assert code == EXIT_OK
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "t,accelerationZ"
    from drivelab.agent.journal import iter_stream_records, session_dir

    n = sum(1 for _ in iter_stream_records(session_dir(agent.data_dir, sid), manifest, "motion"))
    assert len(lines) == n + 1


def test_export_json_and_figure(tmp_path, fast_clock):
    agent, sid, _ = _record(tmp_path, fast_clock)
    out = tmp_path / "heart.json"
    plot = tmp_path / "heart.png"
    code = main([
        "export", "--data", str(agent.data_dir), "--session", sid,
        "--stream", "heart", "--format", "json", "--out", str(out),
        "--plot", str(plot),
    ])
    assert code == EXIT_OK
    records = json.loads(out.read_text())
    assert records and all("heartRate" in r for r in records)
    assert plot.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_export_unknown_session_conflict(tmp_path):
    assert main(["export", "--data", str(tmp_path), "--session", "nope",
                 "--stream", "motion"]) == 4


def test_export_plot_path_derived_from_out(tmp_path, fast_clock):
    agent, sid, _ = _record(tmp_path, fast_clock)
    out = tmp_path / "motion.csv"
    code = main([
        "export", "--data", str(agent.data_dir), "--session", sid,
        "--stream", "motion", "--out", str(out), "--plot",
    ])
    assert code == EXIT_OK
    assert (tmp_path / "motion.png").exists()


def test_run_golden_scenario_exit_zero(tmp_path, capsys):
    scenario = default_scenario(duration=12.0, dead_zones=[(4.0, 8.0)])
    path = tmp_path / "scenario.json"
    scenario.save(path)
    code = main(["run", "--scenario", str(path), "--time-scale", "20"])
    out = capsys.readouterr().out
    assert code == EXIT_OK, out
    assert "digest fidelity: ok" in out
    assert "motion" in out


def test_uploads_list_requires_reachable_agent(capsys):
    assert main(["uploads", "list", "--control", "127.0.0.1:1"]) == 3


def test_uploads_action_requires_task_id(capsys):
    assert main(["uploads", "pause", "--control", "127.0.0.1:1"]) == 1


def test_console_static_served_when_built(tmp_path):
    """The built console is servable at /console/ (skips if unbuilt)."""
    import pytest
    from pathlib import Path

    dist = Path(__file__).resolve().parent.parent / "frontend" / "dist"
    if not (dist / "index.html").exists():
        pytest.skip("console not built")

    import requests

    from drivelab.server.api import serve

    server, _ = serve(tmp_path / "server", b"\x11" * 32, console_dir=dist)
    try:
        r = requests.get(f"{server.base_url}/console/")
        assert r.status_code == 200
        assert "drivelab console" in r.text
        r = requests.get(f"{server.base_url}/console/main.js")
        assert r.status_code == 200
        assert "javascript" in r.headers["Content-Type"]
        r = requests.get(f"{server.base_url}/console/../secrets")
        assert r.status_code == 404
    finally:
        server.stop()
