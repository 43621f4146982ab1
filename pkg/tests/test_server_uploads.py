"""Resumable chunk ingestion protocol over HTTP."""

import json

import pytest
import requests

from drivelab.agent.journal import SessionJournal, session_dir
from drivelab.model.digest import checksum
from drivelab.model.manifest import SessionManifest
from drivelab.model.records import ConsentProfile, UserSettings


def make_session(tmp_path, session_id="sess-1", n=40, streams=("heart",), chunk_bytes=1024,
                 consent=None, user="u"):
    manifest = SessionManifest(
        sessionId=session_id, userId=user, createdAt=1_704_067_200_000,
        settings=UserSettings(), consent=consent or ConsentProfile.grant_all(),
        streams=list(streams),
    )
    journal = SessionJournal(tmp_path, manifest, chunk_bytes=chunk_bytes)
    for i in range(n):
        journal.append("heart", {"t": i + 1, "heartRate": 65.0 + (i % 10)})
    manifest = journal.finalize()
    return manifest, session_dir(tmp_path, session_id)


def upload_all(server, token, manifest, directory, skip=()):
    r = requests.post(f"{server.base}/v1/uploads", json={"manifest": manifest.to_dict()},
                      headers=server.auth(token))
    assert r.status_code == 201, r.text
    upload_id = r.json()["uploadId"]
    for ref in manifest.chunks:
        if (ref.stream, ref.index) in skip:
            continue
        data = (directory / ref.filename()).read_bytes()
        r = requests.put(
            f"{server.base}/v1/uploads/{upload_id}/chunks/{ref.stream}/{ref.index}",
            data=data,
            headers={**server.auth(token), "X-Content-Digest": ref.digest},
        )
        assert r.status_code == 200, r.text
    return upload_id


def test_happy_path_digests_match(server, tmp_path):
    _, token = server.make_account()
    manifest, d = make_session(tmp_path)
    upload_id = upload_all(server, token, manifest, d)
    r = requests.post(f"{server.base}/v1/uploads/{upload_id}/complete", headers=server.auth(token))
    assert r.status_code == 200, r.text
    assert r.json()["state"] == "complete"

    r = requests.get(f"{server.base}/v1/sessions", headers=server.auth(token))
    sessions = r.json()["sessions"]
    assert len(sessions) == 1
    remote = {(c["stream"], c["index"]): c["digest"] for c in sessions[0]["chunks"]}
    local = {(c.stream, c.index): c.digest for c in manifest.chunks}
    assert remote == local


def test_put_chunk_idempotent_five_times(server, tmp_path):
    _, token = server.make_account()
    manifest, d = make_session(tmp_path, n=5)
    r = requests.post(f"{server.base}/v1/uploads", json={"manifest": manifest.to_dict()},
                      headers=server.auth(token))
    upload_id = r.json()["uploadId"]
    ref = manifest.chunks[0]
    data = (d / ref.filename()).read_bytes()
    counts = []
    for _ in range(5):
        r = requests.put(
            f"{server.base}/v1/uploads/{upload_id}/chunks/{ref.stream}/{ref.index}",
            data=data, headers={**server.auth(token), "X-Content-Digest": ref.digest},
        )
        counts.append(r.json()["confirmed"])
    assert counts == [1, 1, 1, 1, 1]


def test_digest_mismatch_rejected_without_storing(server, tmp_path):
    _, token = server.make_account()
    manifest, d = make_session(tmp_path, n=5)
    r = requests.post(f"{server.base}/v1/uploads", json={"manifest": manifest.to_dict()},
                      headers=server.auth(token))
    upload_id = r.json()["uploadId"]
    ref = manifest.chunks[0]
    r = requests.put(
        f"{server.base}/v1/uploads/{upload_id}/chunks/{ref.stream}/{ref.index}",
        data=b"not the chunk", headers={**server.auth(token), "X-Content-Digest": ref.digest},
    )
    assert r.status_code == 422
    assert r.json()["error"] == "DIGEST_MISMATCH"
    r = requests.get(f"{server.base}/v1/uploads/{upload_id}/offset", headers=server.auth(token))
    assert r.json()["confirmed"] == []


def test_chunk_not_in_manifest(server, tmp_path):
    _, token = server.make_account()
    manifest, d = make_session(tmp_path, n=5)
    r = requests.post(f"{server.base}/v1/uploads", json={"manifest": manifest.to_dict()},
                      headers=server.auth(token))
    upload_id = r.json()["uploadId"]
    payload = b"rogue"
    r = requests.put(
        f"{server.base}/v1/uploads/{upload_id}/chunks/heart/99",
        data=payload, headers={**server.auth(token), "X-Content-Digest": checksum(payload)},
    )
    assert r.status_code == 422
    assert r.json()["error"] == "CHUNK_NOT_IN_MANIFEST"


def test_offset_reports_confirmed_set(server, tmp_path):
    _, token = server.make_account()
    manifest, d = make_session(tmp_path, n=40, chunk_bytes=512)
    assert len(manifest.chunks) >= 3
    skip = {(manifest.chunks[1].stream, manifest.chunks[1].index)}
    upload_id = upload_all(server, token, manifest, d, skip=skip)
    r = requests.get(f"{server.base}/v1/uploads/{upload_id}/offset", headers=server.auth(token))
    confirmed = {(s, i) for s, i in r.json()["confirmed"]}
    expected = {(c.stream, c.index) for c in manifest.chunks} - skip
    assert confirmed == expected


def test_complete_with_missing_chunk_rejected(server, tmp_path):
    _, token = server.make_account()
    manifest, d = make_session(tmp_path, n=40, chunk_bytes=512)
    skip = {(manifest.chunks[0].stream, manifest.chunks[0].index)}
    upload_id = upload_all(server, token, manifest, d, skip=skip)
    r = requests.post(f"{server.base}/v1/uploads/{upload_id}/complete", headers=server.auth(token))
    assert r.status_code == 422
    body = r.json()
    assert body["error"] == "VALIDATION_FAILED"
    codes = {e["code"] for e in body["report"]["errors"]}
    assert "MISSING_CHUNK" in codes
    # rejection is notified
    r = requests.get(f"{server.base}/v1/notifications", headers=server.auth(token))
    notes = r.json()["notifications"]
    assert notes and notes[-1]["kind"] == "data-submission-problem"


def test_consent_violation_rejected_at_create(server, tmp_path):
    _, token = server.make_account(consent=ConsentProfile(motion=True, location=True,
                                                          video=True, vehicle=True))
    manifest, d = make_session(tmp_path)  # has a heart stream
    r = requests.post(f"{server.base}/v1/uploads", json={"manifest": manifest.to_dict()},
                      headers=server.auth(token))
    assert r.status_code == 403
    body = r.json()
    assert body["error"] == "CONSENT_VIOLATION"
    assert any(e["code"] == "CONSENT_VIOLATION" for e in body["report"]["errors"])


def test_abort_then_offset_404(server, tmp_path):
    _, token = server.make_account()
    manifest, d = make_session(tmp_path, n=5)
    upload_id = upload_all(server, token, manifest, d)
    r = requests.delete(f"{server.base}/v1/uploads/{upload_id}", headers=server.auth(token))
    assert r.status_code == 200
    r = requests.get(f"{server.base}/v1/uploads/{upload_id}/offset", headers=server.auth(token))
    assert r.status_code == 404
    assert r.json()["error"] == "GONE"
    # stored chunks are gone from disk
    assert not (server.dir / "uploads" / upload_id).exists()


def test_cross_user_upload_forbidden(server, tmp_path):
    _, token_a = server.make_account()
    _, token_b = server.make_account()
    manifest, d = make_session(tmp_path, n=5)
    upload_id = upload_all(server, token_a, manifest, d)
    r = requests.get(f"{server.base}/v1/uploads/{upload_id}/offset", headers=server.auth(token_b))
    assert r.status_code == 403
    assert r.json()["error"] == "FORBIDDEN"


def test_cross_user_session_forbidden(server, tmp_path):
    _, token_a = server.make_account()
    _, token_b = server.make_account()
    manifest, d = make_session(tmp_path, n=5)
    upload_id = upload_all(server, token_a, manifest, d)
    requests.post(f"{server.base}/v1/uploads/{upload_id}/complete", headers=server.auth(token_a))
    r = requests.get(f"{server.base}/v1/sessions/{manifest.sessionId}/series/heart",
                     headers=server.auth(token_b))
    assert r.status_code == 403
    assert r.json()["error"] == "FORBIDDEN"


def test_unknown_upload_404(server, tmp_path):
    _, token = server.make_account()
    r = requests.get(f"{server.base}/v1/uploads/nope/offset", headers=server.auth(token))
    assert r.status_code == 404
    assert r.json()["error"] == "UNKNOWN_UPLOAD"


def test_duplicate_create_returns_same_open_upload(server, tmp_path):
    _, token = server.make_account()
    manifest, d = make_session(tmp_path, n=5)
    a = requests.post(f"{server.base}/v1/uploads", json={"manifest": manifest.to_dict()},
                      headers=server.auth(token)).json()["uploadId"]
    b = requests.post(f"{server.base}/v1/uploads", json={"manifest": manifest.to_dict()},
                      headers=server.auth(token)).json()["uploadId"]
    assert a == b


def test_noncanonical_units_rejected_on_complete(server, tmp_path):
    _, token = server.make_account()
    manifest = SessionManifest(
        sessionId="mph-sess", userId="u", createdAt=0,
        settings=UserSettings(), consent=ConsentProfile.grant_all(),
        streams=["vehicle"],
    )
    journal = SessionJournal(tmp_path, manifest)
    for i in range(3):
        journal.append("vehicle", {"t": i + 1, "mode": 1, "pid": 13, "raw": [60],
                                   "value": 37.28, "unit": "mph"})
    manifest = journal.finalize()
    d = session_dir(tmp_path, "mph-sess")
    upload_id = upload_all(server, token, manifest, d)
    r = requests.post(f"{server.base}/v1/uploads/{upload_id}/complete", headers=server.auth(token))
    assert r.status_code == 422
    codes = {e["code"] for e in r.json()["report"]["errors"]}
    assert "UNIT_NONCANONICAL" in codes


def test_uploads_survive_service_restart(server, tmp_path):
    from drivelab.server.service import IngestionService
    from conftest import MASTER_KEY

    _, token = server.make_account()
    manifest, d = make_session(tmp_path, n=5)
    upload_id = upload_all(server, token, manifest, d)
    requests.post(f"{server.base}/v1/uploads/{upload_id}/complete", headers=server.auth(token))

    reloaded = IngestionService(server.dir, MASTER_KEY)
    up = reloaded._uploads[upload_id]
    assert up.state == "complete"
    assert len(up.confirmed) == len(manifest.chunks)
