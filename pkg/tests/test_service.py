import json
import threading
import time
from dataclasses import replace

import pytest
from fastapi.testclient import TestClient

from reportloom.agents import CountingBackend, RuleBackend
from reportloom.agents.schemas import GENERATE_SCHEMA
from reportloom.evaluation.corpus import base_snapshot
from reportloom.service import (
    Busy,
    EventStore,
    NothingToRedo,
    NothingToRefine,
    NothingToUndo,
    SessionNotFound,
    SessionService,
    StaleVersion,
    create_app,
)
from reportloom.service.sessions import JOB_DONE, JOB_FAILED
from reportloom.workspace import (
    Note,
    ValidationError,
    settings_from_payload,
    snapshot_from_payload,
    snapshot_to_payload,
    utc_now,
)


@pytest.fixture
def store(tmp_path):
    return EventStore(tmp_path / "data")


@pytest.fixture
def backend():
    return CountingBackend(RuleBackend())


@pytest.fixture
def service(store, backend):
    return SessionService(store, backend)


@pytest.fixture
def park_payload(park):
    return snapshot_to_payload(park)


def with_note(workspace_payload, text="Check the overtime budget before Friday"):
    snap = snapshot_from_payload(workspace_payload)
    bumped = replace(
        snap,
        notes=snap.notes + (Note("n-svc", text, (300.0, 200.0), (140.0, 90.0)),),
        version=snap.version + 1,
        timestamp=utc_now(),
    )
    return snapshot_to_payload(bumped)


def wait(service, session_id, job_id, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        status = service.job_status(session_id, job_id)
        if status["status"] in (JOB_DONE, JOB_FAILED):
            return status
        time.sleep(0.01)
    raise AssertionError("job did not settle in time")


# -- event store ---------------------------------------------------------------


def test_store_appends_sequential_events(store):
    first = store.append("abc123", "session_created", {"x": 1})
    second = store.append("abc123", "workspace_updated", {"x": 2})
    assert (first["seq"], second["seq"]) == (0, 1)
    events = store.read("abc123")
    assert [e["type"] for e in events] == ["session_created", "workspace_updated"]
    assert store.read("missing") == []
    assert store.exists("abc123") and not store.exists("missing")
    store.append("zzz", "session_created", {})
    assert store.list_sessions() == ["abc123", "zzz"]


def test_store_rejects_hostile_session_ids(store):
    for bad in ("", "../escape", "a/b", "a.b"):
        with pytest.raises(ValueError):
            store.append(bad, "session_created", {})


# -- session lifecycle -----------------------------------------------------------


def test_create_session_generates_once(service, backend, park_payload):
    desc = service.create_session(park_payload)
    assert desc["narrated_version"] == 1
    assert desc["history_length"] == 1 and desc["cursor"] == 0
    assert desc["busy"] is False and desc["active_job"] is None
    labels = [c["anchor"] or c["kind"] for c in desc["report"]["components"]]
    assert "f-ops" in labels
    assert backend.snapshot_counts() == {"total": 1, f"{GENERATE_SCHEMA}": 1}
    assert service.list_sessions() == [desc["session_id"]]


def test_non_trigger_calls_never_touch_the_backend(service, backend, park_payload):
    desc = service.create_session(park_payload)
    sid = desc["session_id"]
    baseline = backend.snapshot_counts()

    service.update_workspace(sid, with_note(desc["workspace"]))
    settings = settings_from_payload(desc["workspace"]["prompt_settings"])
    cooler = replace(settings, model_config=replace(settings.model_config, temperature=0.7))
    service.update_settings(sid, cooler)
    service.describe(sid)
    service.events(sid)
    with pytest.raises(NothingToUndo):
        service.undo(sid)

    assert backend.snapshot_counts() == baseline


def test_refine_lifecycle(service, backend, park_payload):
    desc = service.create_session(park_payload)
    sid = desc["session_id"]
    service.update_workspace(sid, with_note(desc["workspace"]))

    started = service.trigger_refine(sid)
    status = wait(service, sid, started["job_id"])
    assert status["status"] == JOB_DONE
    completion = status["completion"]
    assert completion["trigger_version"] == 2
    assert completion["delta"]["interactions"]
    assert completion["inferences"]
    assert completion["diff"]["changes"]
    assert completion["scope_violations"] == []

    after = service.describe(sid)
    assert after["narrated_version"] == 2
    assert after["history_length"] == 2 and after["cursor"] == 1
    flattened = json.dumps(after["report"])
    assert "overtime budget" in flattened

    counts = backend.snapshot_counts()
    assert counts["total"] == 3  # generate, intent, refine
    event_types = [e["type"] for e in service.events(sid)]
    assert event_types == [
        "session_created",
        "report_generated",
        "workspace_updated",
        "refine_started",
        "refine_completed",
    ]


def test_trigger_without_changes_is_refused(service, park_payload):
    desc = service.create_session(park_payload)
    with pytest.raises(NothingToRefine):
        service.trigger_refine(desc["session_id"])


def test_model_config_only_changes_are_not_narratable(service, park_payload):
    desc = service.create_session(park_payload)
    sid = desc["session_id"]
    settings = settings_from_payload(desc["workspace"]["prompt_settings"])
    warmer = replace(settings, model_config=replace(settings.model_config, temperature=0.9))
    service.update_settings(sid, warmer)
    with pytest.raises(NothingToRefine) as err:
        service.trigger_refine(sid)
    assert "model settings" in str(err.value)


def test_workspace_updates_must_advance_the_version(service, park_payload):
    desc = service.create_session(park_payload)
    with pytest.raises(StaleVersion):
        service.update_workspace(desc["session_id"], desc["workspace"])


def test_settings_cannot_sneak_through_the_workspace_endpoint(service, park_payload):
    desc = service.create_session(park_payload)
    tampered = json.loads(json.dumps(desc["workspace"]))
    tampered["version"] += 1
    tampered["prompt_settings"]["task_description"] = "Write a haiku instead."
    with pytest.raises(ValidationError) as err:
        service.update_workspace(desc["session_id"], tampered)
    assert any("settings endpoint" in str(v) for v in err.value.violations)


def test_report_edit_requires_sound_anchors(service, park_payload):
    desc = service.create_session(park_payload)
    sid = desc["session_id"]
    components = desc["report"]["components"]

    edited = json.loads(json.dumps(components))
    edited[0]["sentences"].append("A manual postscript.")
    service.edit_report(sid, edited)
    after = service.describe(sid)
    assert after["history_length"] == 2 and after["cursor"] == 1
    assert after["narrated_version"] == desc["narrated_version"]
    assert "A manual postscript." in after["report"]["components"][0]["sentences"]

    broken = json.loads(json.dumps(components))
    broken[1]["anchor"] = "f-imaginary"
    with pytest.raises(ValidationError):
        service.edit_report(sid, broken)


def test_undo_redo_walk_the_history(service, park_payload):
    desc = service.create_session(park_payload)
    sid = desc["session_id"]
    original = desc["report"]
    service.update_workspace(sid, with_note(desc["workspace"]))
    job = service.trigger_refine(sid)
    wait(service, sid, job["job_id"])

    undone = service.undo(sid)
    assert undone["cursor"] == 0
    assert undone["report"] == original
    assert service.describe(sid)["narrated_version"] == 1

    redone = service.redo(sid)
    assert redone["cursor"] == 1
    with pytest.raises(NothingToRedo):
        service.redo(sid)


def test_new_revision_truncates_the_redo_branch(service, park_payload):
    desc = service.create_session(park_payload)
    sid = desc["session_id"]
    service.update_workspace(sid, with_note(desc["workspace"]))
    job = service.trigger_refine(sid)
    wait(service, sid, job["job_id"])
    service.undo(sid)

    # a fresh revision from the undone position replaces the redo branch
    workspace = service.describe(sid)["workspace"]
    snap = snapshot_from_payload(workspace)
    bumped = replace(
        snap,
        notes=snap.notes + (Note("n-late", "Audit the closing shift handover", (-200.0, 100.0), (140.0, 90.0)),),
        version=snap.version + 1,
        timestamp=utc_now(),
    )
    service.update_workspace(sid, snapshot_to_payload(bumped))
    job = service.trigger_refine(sid)
    wait(service, sid, job["job_id"])

    after = service.describe(sid)
    assert after["history_length"] == 2 and after["cursor"] == 1
    assert "closing shift handover" in json.dumps(after["report"])
    with pytest.raises(NothingToRedo):
        service.redo(sid)


class GatedBackend:
    """Blocks every non-generation completion until released."""

    def __init__(self, inner):
        self.inner = inner
        self.entered = threading.Event()
        self.release = threading.Event()

    def complete(self, request):
        if request.schema_id != GENERATE_SCHEMA:
            self.entered.set()
            assert self.release.wait(timeout=10), "test forgot to release the gate"
        return self.inner.complete(request)


def test_session_is_busy_while_a_job_runs(store, park_payload):
    gated = GatedBackend(RuleBackend())
    service = SessionService(store, gated)
    desc = service.create_session(park_payload)
    sid = desc["session_id"]
    service.update_workspace(sid, with_note(desc["workspace"]))
    job = service.trigger_refine(sid)
    assert gated.entered.wait(timeout=10)

    assert service.describe(sid)["busy"] is True
    with pytest.raises(Busy):
        service.trigger_refine(sid)
    with pytest.raises(Busy):
        service.undo(sid)
    with pytest.raises(Busy):
        service.edit_report(sid, desc["report"]["components"])

    gated.release.set()
    assert wait(service, sid, job["job_id"])["status"] == JOB_DONE
    assert service.describe(sid)["busy"] is False


def test_state_survives_a_restart(store, park_payload):
    service = SessionService(store, CountingBackend(RuleBackend()))
    desc = service.create_session(park_payload)
    sid = desc["session_id"]
    service.update_workspace(sid, with_note(desc["workspace"]))
    job = service.trigger_refine(sid)
    wait(service, sid, job["job_id"])
    before = service.describe(sid)

    reborn = SessionService(store, CountingBackend(RuleBackend()))
    assert reborn.describe(sid) == before
    status = reborn.job_status(sid, job["job_id"])
    assert status["status"] == JOB_DONE
    assert status["completion"]["job_id"] == job["job_id"]
    with pytest.raises(SessionNotFound):
        reborn.job_status(sid, "nonexistent")


def test_replay_audit_reproduces_and_detects_tampering(store, service, park_payload):
    desc = service.create_session(park_payload)
    sid = desc["session_id"]
    service.update_workspace(sid, with_note(desc["workspace"]))
    job = service.trigger_refine(sid)
    wait(service, sid, job["job_id"])

    checks = service.verify_replay(sid)
    assert len(checks) == 1
    assert checks[0]["reproduced"] is True and checks[0]["mismatched_fields"] == []

    # rewrite the stored completion and expect the audit to flag it
    path = store._path(sid)
    lines = path.read_text(encoding="utf-8").splitlines()
    doctored = []
    for line in lines:
        event = json.loads(line)
        if event["type"] == "refine_completed":
            event["data"]["report"]["components"][0]["sentences"][0] += " Totally organic edit."
        doctored.append(json.dumps(event, sort_keys=True))
    path.write_text("\n".join(doctored) + "\n", encoding="utf-8")

    flagged = SessionService(store, CountingBackend(RuleBackend())).verify_replay(sid)
    assert flagged[0]["reproduced"] is False
    assert "report" in flagged[0]["mismatched_fields"]


def test_unknown_session_raises(service):
    with pytest.raises(SessionNotFound):
        service.describe("nope")


# -- HTTP surface ----------------------------------------------------------------


@pytest.fixture
def client(service):
    app = create_app(service=service)
    with TestClient(app) as http:
        yield http


def http_wait(client, sid, job_id, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        body = client.get(f"/sessions/{sid}/jobs/{job_id}").json()
        if body["status"] in (JOB_DONE, JOB_FAILED):
            return body
        time.sleep(0.01)
    raise AssertionError("job did not settle over HTTP")


def test_http_round_trip(client, park_payload):
    assert client.get("/healthz").json() == {"status": "ok"}

    created = client.post("/sessions", json={"workspace": park_payload})
    assert created.status_code == 201
    body = created.json()
    sid = body["session_id"]
    assert client.get("/sessions").json() == {"sessions": [sid]}

    stale = client.put(f"/sessions/{sid}/workspace", json={"workspace": body["workspace"]})
    assert stale.status_code == 409

    tampered = json.loads(json.dumps(body["workspace"]))
    tampered["version"] += 1
    tampered["prompt_settings"]["task_description"] = "Something else entirely."
    sneaky = client.put(f"/sessions/{sid}/workspace", json={"workspace": tampered})
    assert sneaky.status_code == 422
    assert sneaky.json()["violations"]

    premature = client.post(f"/sessions/{sid}/refine")
    assert premature.status_code == 400

    updated = client.put(
        f"/sessions/{sid}/workspace", json={"workspace": with_note(body["workspace"])}
    )
    assert updated.status_code == 200

    accepted = client.post(f"/sessions/{sid}/refine")
    assert accepted.status_code == 202
    job_id = accepted.json()["job_id"]
    done = http_wait(client, sid, job_id)
    assert done["status"] == JOB_DONE
    assert done["completion"]["diff"]["changes"]

    report = client.get(f"/sessions/{sid}/report").json()
    assert "overtime budget" in json.dumps(report)

    assert client.post(f"/sessions/{sid}/undo").status_code == 200
    assert client.post(f"/sessions/{sid}/redo").status_code == 200
    assert client.post(f"/sessions/{sid}/redo").status_code == 409

    events = client.get(f"/sessions/{sid}/events").json()["events"]
    assert [e["type"] for e in events][-2:] == ["undone", "redone"]

    replay = client.get(f"/sessions/{sid}/audit/replay").json()["checks"]
    assert all(check["reproduced"] for check in replay)

    usage = client.get("/usage").json()
    assert usage["total"] >= 3


def test_http_error_mapping(client, park_payload):
    assert client.get("/sessions/missing").status_code == 404
    assert client.post("/sessions", json={}).status_code == 400

    created = client.post("/sessions", json={"workspace": park_payload}).json()
    sid = created["session_id"]
    assert client.post(f"/sessions/{sid}/undo").status_code == 409

    broken = json.loads(json.dumps(created["report"]["components"]))
    broken[1]["anchor"] = "f-imaginary"
    edited = client.put(f"/sessions/{sid}/report", json={"components": broken})
    assert edited.status_code == 422

    good = json.loads(json.dumps(created["report"]["components"]))
    good[0]["sentences"].append("Reviewed by hand.")
    assert client.put(f"/sessions/{sid}/report", json={"components": good}).status_code == 200

    settings = json.loads(json.dumps(created["workspace"]["prompt_settings"]))
    settings["task_description"] = "Focus on vendor churn for the quarterly recap."
    changed = client.put(f"/sessions/{sid}/settings", json={"settings": settings})
    assert changed.status_code == 200
    accepted = client.post(f"/sessions/{sid}/refine")
    assert accepted.status_code == 202
    assert http_wait(client, sid, accepted.json()["job_id"])["status"] == JOB_DONE
