import base64
import json
import time

import pytest
from fastapi.testclient import TestClient

from agrivoice.service.app import create_app
from agrivoice.service.config import AccountSeed, ServiceConfig

BASELINE_TEXT = (
    "the tractor guidance keeps the rows straight and the soil sensor "
    "reports moisture for every field block"
)

SIDECAR = {
    "a-office": BASELINE_TEXT,
    "a-field": BASELINE_TEXT.replace("sensor", "zq1"),
    "b-office": BASELINE_TEXT.replace("soil", "zq1"),
    "b-field": BASELINE_TEXT.replace("rows straight", "zq1 zq2"),
    "free-1": "the app should remember my last field",
}

ACCOUNTS = (
    AccountSeed(name="anna", credential="anna-pw", role="farmer"),
    AccountSeed(name="bela", credential="bela-pw", role="farmer"),
    AccountSeed(name="sam", credential="sam-pw", role="support_personnel"),
    AccountSeed(name="rita", credential="rita-pw", role="requirements_engineer"),
)


def service_config(tmp_path, **overrides):
    baseline = tmp_path / "baseline.txt"
    if not baseline.exists():
        baseline.write_text(BASELINE_TEXT, "utf-8")
    sidecar = tmp_path / "sidecar.json"
    if not sidecar.exists():
        sidecar.write_text(json.dumps(SIDECAR), "utf-8")
    defaults = dict(
        store_path=str(tmp_path / "service.db"),
        baseline_path=str(baseline),
        sidecar_path=str(sidecar),
        accounts=ACCOUNTS,
        workers=2,
    )
    defaults.update(overrides)
    return ServiceConfig(**defaults)


@pytest.fixture()
def client(tmp_path):
    app = create_app(service_config(tmp_path))
    with TestClient(app) as test_client:
        yield test_client


def login(client, name="anna"):
    response = client.post("/v1/login", json={"name": name, "credential": f"{name}-pw"})
    assert response.status_code == 200
    return {"Authorization": f"Bearer {response.json()['token']}"}


def upload(client, headers, rec_id, *, mode="free_form", capture="speech_to_text",
           setting=None, run=None, audio=b"RIFF....", **extra):
    body = {
        "id": rec_id,
        "audio_b64": base64.b64encode(audio).decode(),
        "duration_seconds": 2.0,
        "language": "en",
        "mode": mode,
        "capture": capture,
        "setting": setting,
        "run": run,
    }
    body.update(extra)
    return client.post("/v1/recordings", json=body, headers=headers)


def wait_for(predicate, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(0.02)
    raise AssertionError("condition not met in time")


def wait_for_transcript(client, headers, rec_id):
    return wait_for(
        lambda: (
            lambda r: r.json() if r.status_code == 200 and r.json().get("status") == "ready" else None
        )(client.get(f"/v1/recordings/{rec_id}/transcript", headers=headers))
    )


# -- auth ------------------------------------------------------------------------

def test_health_is_open(client):
    assert client.get("/v1/health").json() == {"status": "ok"}


def test_every_endpoint_requires_session(client):
    probes = [
        ("POST", "/v1/recordings", {"json": {}}),
        ("GET", "/v1/recordings", {}),
        ("GET", "/v1/recordings/x/transcript", {}),
        ("PUT", "/v1/recordings/x/transcript", {"json": {"text": "t"}}),
        ("GET", "/v1/recordings/x/analysis", {}),
        ("POST", "/v1/submissions", {"json": {}}),
        ("GET", "/v1/submissions", {}),
        ("POST", "/v1/submissions/x/priority", {"json": {}}),
        ("GET", "/v1/reports/default", {}),
        ("DELETE", "/v1/data?scope=all", {}),
    ]
    for method, url, kwargs in probes:
        response = client.request(method, url, **kwargs)
        assert response.status_code == 401, f"{method} {url} not gated"
        assert response.json()["error"] == "Unauthenticated"


def test_wrong_password_and_unknown_name_uniform(client):
    wrong = client.post("/v1/login", json={"name": "anna", "credential": "nope"})
    unknown = client.post("/v1/login", json={"name": "ghost", "credential": "nope"})
    assert wrong.status_code == unknown.status_code == 401
    assert wrong.json()["error"] == unknown.json()["error"] == "InvalidCredentials"


def test_expired_session_rejected(tmp_path):
    app = create_app(service_config(tmp_path, session_ttl_seconds=-1))
    with TestClient(app) as client:
        token = client.post(
            "/v1/login", json={"name": "anna", "credential": "anna-pw"}
        ).json()["token"]
        response = client.get(
            "/v1/recordings", headers={"Authorization": f"Bearer {token}"}
        )
        assert response.status_code == 401


# -- upload ---------------------------------------------------------------------

def test_upload_idempotent(client):
    headers = login(client)
    first = upload(client, headers, "free-1")
    assert first.status_code == 201
    assert first.json()["created"] is True
    for _ in range(3):
        again = upload(client, headers, "free-1")
        assert again.status_code == 200
        assert again.json()["created"] is False
    rows = client.get("/v1/recordings", headers=headers).json()["recordings"]
    assert len([r for r in rows if r["id"] == "free-1"]) == 1


def test_upload_requires_farmer_role(client):
    headers = login(client, "sam")
    response = upload(client, headers, "nope")
    assert response.status_code == 403


def test_upload_validation_errors(client):
    headers = login(client)
    empty = upload(client, headers, "bad-1", audio=b"")
    assert empty.status_code == 422
    assert empty.json()["error"] == "EmptyAudio"

    bad_language = upload(client, headers, "bad-2", language="fr")
    assert bad_language.status_code == 422
    assert bad_language.json()["error"] == "UnsupportedLanguage"

    baseline_without_setting = upload(client, headers, "bad-3", mode="baseline")
    assert baseline_without_setting.status_code == 422
    assert baseline_without_setting.json()["error"] == "MissingSetting"

    bad_media = upload(client, headers, "bad-4", media_type="video/mp4")
    assert bad_media.status_code == 422
    assert bad_media.json()["error"] == "UnsupportedMediaType"

    ogg_ok = upload(client, headers, "ogg-1", media_type="audio/ogg")
    assert ogg_ok.status_code == 201


def test_oversize_payload_stores_nothing(tmp_path):
    app = create_app(service_config(tmp_path, max_audio_bytes=64))
    with TestClient(app) as client:
        headers = login(client)
        response = upload(client, headers, "big-1", audio=b"x" * 100)
        assert response.status_code == 413
        assert response.json()["error"] == "PayloadTooLarge"
        rows = client.get("/v1/recordings", headers=headers).json()["recordings"]
        assert rows == []


def test_baseline_upload_without_configured_baseline(tmp_path):
    config = service_config(tmp_path, baseline_path=None)
    with TestClient(create_app(config)) as client:
        headers = login(client)
        response = upload(client, headers, "b-1", mode="baseline", setting="office")
        assert response.status_code == 422
        assert response.json()["error"] == "MissingBaseline"


# -- transcription and analysis ----------------------------------------------------

def test_transcription_pipeline(client):
    headers = login(client)
    upload(client, headers, "free-1")
    ready = wait_for_transcript(client, headers, "free-1")
    assert ready["transcript"]["text"] == SIDECAR["free-1"]
    assert ready["transcript"]["engine_id"] == "mock-0"
    assert ready["transcript"]["edited"] is False

    analysis = wait_for(
        lambda: (
            lambda r: r.json() if r.json().get("status") == "ok" else None
        )(client.get("/v1/recordings/free-1/analysis", headers=headers))
    )
    assert "field" in analysis["analysis"]["keywords"]
    assert analysis["analysis"]["status"]["sentiment"] == "ok"


def test_emotion_only_for_asa_uploads(client):
    headers = login(client)
    upload(client, headers, "asa-1", capture="audio_sentiment")
    analysis = wait_for(
        lambda: (
            lambda r: r.json() if r.json().get("status") == "ok" else None
        )(client.get("/v1/recordings/asa-1/analysis", headers=headers))
    )
    assert analysis["analysis"]["emotion"] is not None
    assert analysis["analysis"]["keywords"] == []
    # No transcript is ever produced for the audio-sentiment module.
    transcript = client.get("/v1/recordings/asa-1/transcript", headers=headers)
    assert transcript.json()["status"] == "pending"


def test_edit_transcript(client):
    headers = login(client)
    upload(client, headers, "free-1")
    wait_for_transcript(client, headers, "free-1")
    response = client.put(
        "/v1/recordings/free-1/transcript",
        json={"text": "the app should remember my favourite field"},
        headers=headers,
    )
    assert response.status_code == 200
    ready = client.get("/v1/recordings/free-1/transcript", headers=headers).json()
    assert ready["transcript"]["edited"] is True
    assert "favourite" in ready["transcript"]["text"]


def test_edit_before_transcription_conflicts(tmp_path):
    config = service_config(tmp_path, engine="http", engine_url="http://127.0.0.1:1")
    with TestClient(create_app(config)) as client:
        headers = login(client)
        upload(client, headers, "stuck-1")
        response = client.put(
            "/v1/recordings/stuck-1/transcript", json={"text": "x"}, headers=headers
        )
        assert response.status_code == 409
        assert response.json()["error"] == "MissingTranscript"


def test_unreachable_engine_keeps_recording_pending(tmp_path):
    config = service_config(tmp_path, engine="http", engine_url="http://127.0.0.1:1")
    with TestClient(create_app(config)) as client:
        headers = login(client)
        upload(client, headers, "stuck-1")
        time.sleep(0.3)
        status = client.get("/v1/recordings/stuck-1/transcript", headers=headers).json()
        assert status["status"] == "pending"
        rows = client.get("/v1/recordings", headers=headers).json()["recordings"]
        assert rows[0]["id"] == "stuck-1"


# -- submissions -------------------------------------------------------------------

def test_submission_flow(client):
    farmer = login(client)
    upload(client, farmer, "free-1")
    wait_for_transcript(client, farmer, "free-1")

    submit = client.post(
        "/v1/submissions",
        json={"recording_id": "free-1", "choice": "transcript", "edited_text": "my edit"},
        headers=farmer,
    )
    assert submit.status_code == 201

    support = login(client, "sam")
    listed = client.get("/v1/submissions", headers=support).json()["submissions"]
    assert len(listed) == 1
    assert listed[0]["recording_id"] == "free-1"

    # The edited text was stored and flagged.
    transcript = client.get("/v1/recordings/free-1/transcript", headers=farmer).json()
    assert transcript["transcript"]["text"] == "my edit"
    assert transcript["transcript"]["edited"] is True

    priority = client.post(
        f"/v1/submissions/{listed[0]['id']}/priority", json={"priority": 2}, headers=support
    )
    assert priority.status_code == 200

    engineer = login(client, "rita")
    assert client.get("/v1/submissions", headers=engineer).status_code == 200
    denied = client.post(
        f"/v1/submissions/{listed[0]['id']}/priority", json={"priority": 1}, headers=engineer
    )
    assert denied.status_code == 403


def test_submit_audio_without_transcript_allowed(client):
    headers = login(client)
    upload(client, headers, "asa-9", capture="audio_sentiment")
    response = client.post(
        "/v1/submissions", json={"recording_id": "asa-9", "choice": "audio"}, headers=headers
    )
    assert response.status_code == 201


def test_submit_transcript_choice_requires_transcript(tmp_path):
    config = service_config(tmp_path, engine="http", engine_url="http://127.0.0.1:1")
    with TestClient(create_app(config)) as client:
        headers = login(client)
        upload(client, headers, "stuck-2")
        response = client.post(
            "/v1/submissions",
            json={"recording_id": "stuck-2", "choice": "transcript"},
            headers=headers,
        )
        assert response.status_code == 409
        assert response.json()["error"] == "MissingTranscript"


def test_support_cannot_submit(client):
    support = login(client, "sam")
    response = client.post(
        "/v1/submissions", json={"recording_id": "x", "choice": "audio"}, headers=support
    )
    assert response.status_code == 403


# -- reports --------------------------------------------------------------------------

def upload_baseline_run(client):
    anna = login(client, "anna")
    bela = login(client, "bela")
    for headers, prefix in ((anna, "a"), (bela, "b")):
        for setting in ("office", "field"):
            response = upload(
                client, headers, f"{prefix}-{setting}",
                mode="baseline", setting=setting, run="run-1",
            )
            assert response.status_code == 201
    for headers, prefix in ((anna, "a"), (bela, "b")):
        for setting in ("office", "field"):
            wait_for_transcript(client, headers, f"{prefix}-{setting}")
    return anna


def test_report_bytes_stable_and_correct(client):
    headers = upload_baseline_run(client)
    first = client.get("/v1/reports/run-1", headers=headers)
    second = client.get("/v1/reports/run-1", headers=headers)
    assert first.status_code == 200
    assert first.content == second.content

    payload = json.loads(first.content)
    assert payload["baseline"]["source_bytes"] == len(BASELINE_TEXT.encode())
    assert {row["participant"] for row in payload["rows"]} == {"anna", "bela"}
    assert len(payload["rows"]) == 4
    assert [c["metric"] for c in payload["comparisons"]] == [
        "wer", "levenshtein", "target_bytes", "target_characters",
    ]

    csv_first = client.get("/v1/reports/run-1?format=csv", headers=headers)
    csv_second = client.get("/v1/reports/run-1?format=csv", headers=headers)
    assert csv_first.content == csv_second.content
    assert csv_first.content.decode().splitlines()[0].startswith("participant,setting,wer")


def test_report_errors(client):
    headers = login(client)
    upload(client, headers, "free-1")
    wait_for_transcript(client, headers, "free-1")

    unknown = client.get("/v1/reports/run-missing", headers=headers)
    assert unknown.status_code == 404

    free_form = client.get("/v1/reports/free-1", headers=headers)
    assert free_form.status_code == 403
    assert free_form.json()["error"] == "ForbiddenForFreeForm"

    bad_format = client.get("/v1/reports/free-1?format=xml", headers=headers)
    assert bad_format.status_code == 422


def test_report_pending_run(tmp_path):
    config = service_config(tmp_path, engine="http", engine_url="http://127.0.0.1:1")
    with TestClient(create_app(config)) as client:
        headers = login(client)
        upload(client, headers, "b-slow", mode="baseline", setting="office", run="run-9")
        response = client.get("/v1/reports/run-9", headers=headers)
        assert response.status_code == 409
        assert response.json()["error"] == "ReportPending"


# -- deletion ---------------------------------------------------------------------------

def test_cascade_deletion(client):
    headers = login(client)
    upload(client, headers, "free-1")
    wait_for_transcript(client, headers, "free-1")
    client.post(
        "/v1/submissions", json={"recording_id": "free-1", "choice": "audio"}, headers=headers
    )

    receipt = client.request(
        "DELETE", "/v1/data?scope=recording:free-1", headers=headers
    )
    assert receipt.status_code == 200
    deleted = receipt.json()["deleted"]
    assert deleted["recordings"] == 1
    assert deleted["transcripts"] == 1
    assert deleted["submissions"] == 1

    store = client.app.state.service.store
    assert all(n == 0 for n in store.reference_counts("free-1").values())
    assert client.get("/v1/recordings/free-1/transcript", headers=headers).status_code == 404


def test_delete_all_my_data(client):
    headers = login(client)
    for rec_id in ("free-1", "asa-1"):
        upload(client, headers, rec_id)
    receipt = client.request("DELETE", "/v1/data?scope=all", headers=headers)
    assert receipt.status_code == 200
    assert receipt.json()["deleted"]["recordings"] == 2
    assert client.get("/v1/recordings", headers=headers).json()["recordings"] == []


def test_farmer_cannot_delete_foreign_data(client):
    anna = login(client, "anna")
    upload(client, anna, "free-1")
    bela = login(client, "bela")
    denied = client.request("DELETE", "/v1/data?scope=recording:free-1", headers=bela)
    assert denied.status_code == 403

    engineer = login(client, "rita")
    allowed = client.request("DELETE", "/v1/data?scope=recording:free-1", headers=engineer)
    assert allowed.status_code == 200
