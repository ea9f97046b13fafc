#!/usr/bin/env python3
"""Scripted walkthrough of one session: generate, edit the canvas, refine,
inspect the diff, undo. Uses the deterministic rule backend and a throwaway
data directory, so it runs offline and prints the same thing every time the
inputs are the same.

    python scripts/demo_session.py
"""

from __future__ import annotations

import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

from reportloom.evaluation.corpus import base_snapshot
from reportloom.service import EventStore, ServiceConfig, SessionService, build_backend
from reportloom.workspace import Note, snapshot_from_payload, snapshot_to_payload, utc_now


def show_report(report_payload: dict) -> None:
    for comp in report_payload["components"]:
        anchor = f" [{comp['anchor']}]" if comp.get("anchor") else ""
        print(f"  == {comp['heading']}{anchor}")
        for sentence in comp["sentences"]:
            print(f"     {sentence}")


def wait_for(service: SessionService, sid: str, job_id: str) -> dict:
    for _ in range(200):
        status = service.job_status(sid, job_id)
        if status["status"] in ("done", "failed"):
            return status
        time.sleep(0.02)
    raise TimeoutError(job_id)


def main() -> int:
    data_dir = Path(tempfile.mkdtemp(prefix="reportloom-demo-"))
    service = SessionService(
        EventStore(data_dir), build_backend(ServiceConfig(data_dir=data_dir))
    )

    state = service.create_session(snapshot_to_payload(base_snapshot()))
    sid = state["session_id"]
    print(f"session {sid}, initial report:")
    show_report(state["report"])

    # Pin a new note inside the operations frame, then trigger.
    working = snapshot_from_payload(state["workspace"])
    note = Note("n-demo", "Confirm the generator fuel contract", (300.0, 200.0), (140.0, 90.0))
    edited = replace(
        working,
        notes=working.notes + (note,),
        version=working.version + 1,
        timestamp=utc_now(),
    )
    service.update_workspace(sid, snapshot_to_payload(edited))
    print("\ncanvas edit: pinned a note in the operations frame")

    job = service.trigger_refine(sid)
    status = wait_for(service, sid, job["job_id"])
    completion = status["completion"]
    print(f"refine job {job['job_id']} -> {status['status']}")
    for inference in completion["inferences"]:
        print(f"  reasoning: {inference['why']}")
    for change, tags in zip(completion["diff"]["changes"], completion["provenance"]):
        text = change["after"] if change["after"] is not None else change["before"]
        print(f"  {change['change']:>8} @{change['component']}: {text!r}  (from {tags})")

    print("\nundo:")
    undone = service.undo(sid)
    print(f"  cursor back to {undone['cursor']}")
    redone = service.redo(sid)
    print(f"  cursor forward to {redone['cursor']}")

    checks = service.verify_replay(sid)
    print("\naudit replay:")
    for check in checks:
        verdict = "reproduced" if check["reproduced"] else f"MISMATCH {check['mismatched_fields']}"
        print(f"  job {check['job_id']}: {verdict}")
    return 0 if all(c["reproduced"] for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
