"""Session lifecycle and the trigger discipline.

A session tracks two snapshots: the one the current report narrates and the
latest working state of the canvas. Canvas and settings edits only move the
working snapshot; no model call happens until an explicit refine trigger,
which perceives the narrated-to-working delta, infers intent, refines, and
advances the narrated snapshot. Report history is an undo/redo list with
truncate-on-append semantics.

Everything durable lives in the event log; completions store their full
results, so rebuilding state (or auditing it) never needs a model.
"""

from __future__ import annotations

import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from ..agents.mock import RuleBackend
from ..agents.pipeline import generate_initial, infer_interactions, infer_system, refine
from ..agents.types import (
    IntentInference,
    RefinementResult,
    inference_to_payload,
)
from ..narrative import (
    Report,
    check_anchoring,
    component_from_payload,
    diff_to_payload,
    report_from_payload,
    report_to_payload,
    serialize_context,
)
from ..perception import InteractionDelta, delta_to_payload, perceive
from ..workspace import (
    PromptSettings,
    ValidationError,
    Violation,
    WorkspaceSnapshot,
    require_valid,
    settings_to_payload,
    snapshot_from_payload,
    snapshot_to_payload,
    utc_now,
)
from .store import EventStore

logger = logging.getLogger(__name__)


class SessionError(Exception):
    """Base for contract violations callers must handle."""


class SessionNotFound(SessionError):
    pass


class Busy(SessionError):
    """A refine job is already running for this session."""


class NothingToRefine(SessionError):
    """Triggered without any narrative-relevant change to act on."""


class NothingToUndo(SessionError):
    pass


class NothingToRedo(SessionError):
    pass


class StaleVersion(SessionError):
    """Workspace update with a version not newer than the current one."""


JOB_PENDING = "pending"
JOB_REASONING = "reasoning"
JOB_REFINING = "refining"
JOB_DONE = "done"
JOB_FAILED = "failed"


@dataclass(frozen=True)
class RevisionOutcome:
    delta: InteractionDelta
    inferences: tuple[IntentInference, ...]
    result: RefinementResult


def execute_revision(
    narrated: WorkspaceSnapshot,
    trigger: WorkspaceSnapshot,
    report: Report,
    backend,
    on_phase=None,
) -> RevisionOutcome:
    """The full perceive-reason-act pass shared by live jobs and audit
    replay. Deterministic for a deterministic backend."""
    notify = on_phase or (lambda phase: None)
    delta = perceive(narrated, trigger)
    context = serialize_context(trigger)
    notify(JOB_REASONING)
    inferences: list[IntentInference] = []
    if delta.interactions:
        inferences.extend(infer_interactions(delta, context, report, backend))
    adjustment = delta.prompt_adjustment
    if adjustment is not None and adjustment.has_narrative_change():
        inferences.append(infer_system(adjustment, context, report, backend))
    actionable = tuple(inf for inf in inferences if inf.plan)
    if not actionable:
        raise NothingToRefine("no actionable intent behind the observed changes")
    notify(JOB_REFINING)
    result = refine(report, actionable, context, backend)
    return RevisionOutcome(delta=delta, inferences=actionable, result=result)


def completion_payload(job_id: str, trigger_version: int, outcome: RevisionOutcome) -> dict:
    return {
        "job_id": job_id,
        "trigger_version": trigger_version,
        "delta": delta_to_payload(outcome.delta),
        "inferences": [inference_to_payload(i) for i in outcome.inferences],
        "report": report_to_payload(outcome.result.new_report),
        "diff": diff_to_payload(outcome.result.diff),
        "provenance": [list(tags) for tags in outcome.result.provenance],
        "scope_violations": list(outcome.result.scope_violations),
    }


class SessionState:
    """Replay of one session's event log."""

    def __init__(self, session_id: str):
        self.session_id = session_id
        self.snapshots: dict[int, dict] = {}
        self.working_version: int | None = None
        self.history: list[tuple[dict, int]] = []  # (report payload, narrated version)
        self.cursor: int = -1

    def apply(self, event: dict) -> None:
        etype = event["type"]
        data = event["data"]
        if etype in ("session_created", "workspace_updated", "settings_updated"):
            payload = data["snapshot"]
            self.snapshots[payload["version"]] = payload
            self.working_version = payload["version"]
        elif etype == "report_generated":
            assert self.working_version is not None
            self.history = [(data["report"], self.working_version)]
            self.cursor = 0
        elif etype == "refine_completed":
            del self.history[self.cursor + 1 :]
            self.history.append((data["report"], data["trigger_version"]))
            self.cursor += 1
        elif etype == "report_edited":
            narrated = self.history[self.cursor][1]
            del self.history[self.cursor + 1 :]
            self.history.append((data["report"], narrated))
            self.cursor += 1
        elif etype == "undone":
            self.cursor -= 1
        elif etype == "redone":
            self.cursor += 1
        # refine_started / refine_failed carry no state

    @property
    def working_payload(self) -> dict:
        assert self.working_version is not None
        return self.snapshots[self.working_version]

    @property
    def report_payload(self) -> dict:
        return self.history[self.cursor][0]

    @property
    def narrated_version(self) -> int:
        return self.history[self.cursor][1]

    @property
    def narrated_payload(self) -> dict:
        return self.snapshots[self.narrated_version]


class SessionService:
    def __init__(self, store: EventStore, backend, max_workers: int = 2):
        self._store = store
        self._backend = backend
        self._executor = ThreadPoolExecutor(
            max_workers=max_workers, thread_name_prefix="reportloom-job"
        )
        self._jobs: dict[str, dict] = {}
        self._jobs_lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}
        self._locks_lock = threading.Lock()

    # -- plumbing -----------------------------------------------------------

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_lock:
            return self._session_locks.setdefault(session_id, threading.Lock())

    def _state(self, session_id: str) -> SessionState:
        events = self._store.read(session_id)
        if not events:
            raise SessionNotFound(f"no session {session_id!r}")
        state = SessionState(session_id)
        for event in events:
            state.apply(event)
        return state

    def _active_job(self, session_id: str) -> dict | None:
        with self._jobs_lock:
            for job in self._jobs.values():
                if job["session_id"] == session_id and job["status"] not in (
                    JOB_DONE,
                    JOB_FAILED,
                ):
                    return dict(job)
        return None

    def _set_job(self, job_id: str, **fields) -> None:
        with self._jobs_lock:
            self._jobs[job_id].update(fields)

    # -- lifecycle ----------------------------------------------------------

    def create_session(self, snapshot_payload: dict) -> dict:
        snapshot = snapshot_from_payload(snapshot_payload)
        require_valid(snapshot)
        context = serialize_context(snapshot)
        report = generate_initial(context, self._backend)
        session_id = uuid.uuid4().hex[:12]
        self._store.append(session_id, "session_created", {"snapshot": snapshot_to_payload(snapshot)})
        self._store.append(
            session_id,
            "report_generated",
            {"report": report_to_payload(report), "fingerprint": context.fingerprint},
        )
        return self.describe(session_id)

    def describe(self, session_id: str) -> dict:
        state = self._state(session_id)
        active = self._active_job(session_id)
        return {
            "session_id": session_id,
            "workspace": state.working_payload,
            "report": state.report_payload,
            "narrated_version": state.narrated_version,
            "history_length": len(state.history),
            "cursor": state.cursor,
            "busy": active is not None,
            "active_job": None if active is None else active["job_id"],
        }

    def events(self, session_id: str) -> list[dict]:
        events = self._store.read(session_id)
        if not events:
            raise SessionNotFound(f"no session {session_id!r}")
        return events

    def list_sessions(self) -> list[str]:
        return self._store.list_sessions()

    # -- workspace mutations (no model involvement) -------------------------

    def update_workspace(self, session_id: str, snapshot_payload: dict) -> dict:
        snapshot = snapshot_from_payload(snapshot_payload)
        require_valid(snapshot)
        with self._lock_for(session_id):
            state = self._state(session_id)
            current = state.working_payload
            if snapshot.version <= current["version"]:
                raise StaleVersion(
                    f"version {snapshot.version} is not newer than {current['version']}"
                )
            if settings_to_payload(snapshot.prompt_settings) != current["prompt_settings"]:
                # Settings travel through their own endpoint so the
                # narrative-relevance split stays visible in the log.
                raise ValidationError(
                    [Violation("prompt_settings", "use the settings endpoint to change settings")]
                )
            self._store.append(
                session_id, "workspace_updated", {"snapshot": snapshot_to_payload(snapshot)}
            )
        return {"version": snapshot.version}

    def update_settings(self, session_id: str, settings: PromptSettings) -> dict:
        with self._lock_for(session_id):
            state = self._state(session_id)
            working = snapshot_from_payload(state.working_payload)
            updated = replace(
                working,
                prompt_settings=settings,
                version=working.version + 1,
                timestamp=utc_now(),
            )
            require_valid(updated)
            self._store.append(
                session_id, "settings_updated", {"snapshot": snapshot_to_payload(updated)}
            )
            return {"version": updated.version}

    # -- report history -----------------------------------------------------

    def edit_report(self, session_id: str, components_payload: list) -> dict:
        with self._lock_for(session_id):
            if self._active_job(session_id):
                raise Busy("a refine job is running; retry once it settles")
            state = self._state(session_id)
            current = report_from_payload(state.report_payload)
            edited = Report(
                version=current.version + 1,
                components=tuple(component_from_payload(c) for c in components_payload),
            )
            narrated = snapshot_from_payload(state.narrated_payload)
            violations = check_anchoring(edited, narrated)
            if violations:
                raise ValidationError(violations)
            self._store.append(
                session_id, "report_edited", {"report": report_to_payload(edited)}
            )
            return {"version": edited.version}

    def undo(self, session_id: str) -> dict:
        with self._lock_for(session_id):
            if self._active_job(session_id):
                raise Busy("a refine job is running; retry once it settles")
            state = self._state(session_id)
            if state.cursor <= 0:
                raise NothingToUndo("already at the oldest report")
            self._store.append(session_id, "undone", {})
            state.apply({"type": "undone", "data": {}})
            return {"cursor": state.cursor, "report": state.report_payload}

    def redo(self, session_id: str) -> dict:
        with self._lock_for(session_id):
            if self._active_job(session_id):
                raise Busy("a refine job is running; retry once it settles")
            state = self._state(session_id)
            if state.cursor >= len(state.history) - 1:
                raise NothingToRedo("already at the newest report")
            self._store.append(session_id, "redone", {})
            state.apply({"type": "redone", "data": {}})
            return {"cursor": state.cursor, "report": state.report_payload}

    # -- the trigger --------------------------------------------------------

    def trigger_refine(self, session_id: str) -> dict:
        with self._lock_for(session_id):
            if self._active_job(session_id):
                raise Busy("a refine job is already running for this session")
            state = self._state(session_id)
            if state.narrated_version == state.working_version:
                raise NothingToRefine("workspace unchanged since the last revision")
            narrated = snapshot_from_payload(state.narrated_payload)
            working = snapshot_from_payload(state.working_payload)
            delta = perceive(narrated, working)
            if delta.is_empty():
                raise NothingToRefine("workspace unchanged since the last revision")
            if not delta.interactions and (
                delta.prompt_adjustment is None
                or not delta.prompt_adjustment.has_narrative_change()
            ):
                raise NothingToRefine("only model settings changed; nothing to narrate")
            report = report_from_payload(state.report_payload)
            job_id = uuid.uuid4().hex[:12]
            self._store.append(
                session_id,
                "refine_started",
                {
                    "job_id": job_id,
                    "base_version": narrated.version,
                    "trigger_version": working.version,
                },
            )
            with self._jobs_lock:
                self._jobs[job_id] = {
                    "job_id": job_id,
                    "session_id": session_id,
                    "status": JOB_PENDING,
                    "error": None,
                }
        self._executor.submit(self._run_job, session_id, job_id, narrated, working, report)
        return {"job_id": job_id, "status": JOB_PENDING}

    def _run_job(
        self,
        session_id: str,
        job_id: str,
        narrated: WorkspaceSnapshot,
        trigger: WorkspaceSnapshot,
        report: Report,
    ) -> None:
        try:
            outcome = execute_revision(
                narrated,
                trigger,
                report,
                self._backend,
                on_phase=lambda phase: self._set_job(job_id, status=phase),
            )
            data = completion_payload(job_id, trigger.version, outcome)
            with self._lock_for(session_id):
                self._store.append(session_id, "refine_completed", data)
            self._set_job(job_id, status=JOB_DONE)
        except Exception as exc:  # noqa: BLE001 - job boundary, everything is reported
            logger.exception("refine job %s failed", job_id)
            with self._lock_for(session_id):
                self._store.append(
                    session_id, "refine_failed", {"job_id": job_id, "error": str(exc)}
                )
            self._set_job(job_id, status=JOB_FAILED, error=str(exc))

    def job_status(self, session_id: str, job_id: str) -> dict:
        with self._jobs_lock:
            job = self._jobs.get(job_id)
            if job is not None and job["session_id"] == session_id:
                job = dict(job)
            else:
                job = None
        if job is None:
            # Not in memory (restart); reconstruct the verdict from the log.
            job = self._job_from_log(session_id, job_id)
        result = {"job_id": job_id, "status": job["status"], "error": job.get("error")}
        if job["status"] == JOB_DONE:
            result["completion"] = self._completion_from_log(session_id, job_id)
        return result

    def _job_from_log(self, session_id: str, job_id: str) -> dict:
        started = False
        for event in self._store.read(session_id):
            if event["data"].get("job_id") != job_id:
                continue
            if event["type"] == "refine_started":
                started = True
            elif event["type"] == "refine_completed":
                return {"status": JOB_DONE, "error": None}
            elif event["type"] == "refine_failed":
                return {"status": JOB_FAILED, "error": event["data"].get("error")}
        if started:
            return {"status": JOB_FAILED, "error": "interrupted before completion"}
        raise SessionNotFound(f"no job {job_id!r} in session {session_id!r}")

    def _completion_from_log(self, session_id: str, job_id: str) -> dict:
        for event in self._store.read(session_id):
            if event["type"] == "refine_completed" and event["data"]["job_id"] == job_id:
                return event["data"]
        raise SessionNotFound(f"no completion for job {job_id!r}")

    # -- audit --------------------------------------------------------------

    def verify_replay(self, session_id: str, backend=None) -> list[dict]:
        """Recompute every completed refinement at its trigger position with
        a deterministic backend and compare against the stored results.

        With the rule backend serving the live session this must reproduce
        byte-for-byte; any mismatch names the diverging fields.
        """
        audit_backend = backend if backend is not None else RuleBackend()
        events = self._store.read(session_id)
        if not events:
            raise SessionNotFound(f"no session {session_id!r}")
        state = SessionState(session_id)
        started: dict[str, dict] = {}
        checks: list[dict] = []
        for event in events:
            if event["type"] == "refine_started":
                started[event["data"]["job_id"]] = event["data"]
            elif event["type"] == "refine_completed":
                data = event["data"]
                job_id = data["job_id"]
                meta = started[job_id]
                narrated = snapshot_from_payload(state.snapshots[meta["base_version"]])
                trigger = snapshot_from_payload(state.snapshots[meta["trigger_version"]])
                report = report_from_payload(state.report_payload)
                outcome = execute_revision(narrated, trigger, report, audit_backend)
                recomputed = completion_payload(job_id, trigger.version, outcome)
                mismatched = [
                    key
                    for key in (
                        "delta",
                        "inferences",
                        "report",
                        "diff",
                        "provenance",
                        "scope_violations",
                    )
                    if recomputed[key] != data[key]
                ]
                checks.append(
                    {
                        "job_id": job_id,
                        "reproduced": not mismatched,
                        "mismatched_fields": mismatched,
                    }
                )
            state.apply(event)
        return checks
