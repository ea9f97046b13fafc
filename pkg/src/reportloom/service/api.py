"""HTTP surface over the session service.

Endpoints speak plain JSON dicts (the payload shapes used on disk) rather
than pydantic models; the payload converters already do the validation that
matters and the frontend consumes the same shapes verbatim.
"""

from __future__ import annotations

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse

from ..agents.errors import AgentError
from ..workspace import ValidationError, settings_from_payload
from .config import ServiceConfig, build_backend
from .sessions import (
    Busy,
    NothingToRedo,
    NothingToRefine,
    NothingToUndo,
    SessionError,
    SessionNotFound,
    SessionService,
    StaleVersion,
)
from .store import EventStore

_STATUS_FOR = {
    SessionNotFound: 404,
    Busy: 409,
    NothingToRefine: 400,
    NothingToUndo: 409,
    NothingToRedo: 409,
    StaleVersion: 409,
}


def create_app(service: SessionService | None = None, config: ServiceConfig | None = None) -> FastAPI:
    if service is None:
        config = config or ServiceConfig.from_env()
        service = SessionService(EventStore(config.data_dir), build_backend(config))
    app = FastAPI(title="reportloom")

    @app.exception_handler(SessionError)
    async def _session_error(request, exc: SessionError):
        status = _STATUS_FOR.get(type(exc), 400)
        return JSONResponse(
            status_code=status, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.exception_handler(ValidationError)
    async def _validation_error(request, exc: ValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "error": "ValidationError",
                "detail": str(exc),
                "violations": [
                    {"subject": v.subject, "reason": v.reason} for v in exc.violations
                ],
            },
        )

    @app.exception_handler(AgentError)
    async def _agent_error(request, exc: AgentError):
        return JSONResponse(
            status_code=502, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.exception_handler(ValueError)
    async def _value_error(request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": "BadRequest", "detail": str(exc)})

    @app.exception_handler(KeyError)
    async def _key_error(request, exc: KeyError):
        return JSONResponse(
            status_code=400, content={"error": "BadRequest", "detail": f"missing field {exc}"}
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/usage")
    def usage():
        counts = getattr(service._backend, "snapshot_counts", None)
        return counts() if counts is not None else {"total_calls": None, "calls_by_schema": {}}

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        return service.create_session(payload["workspace"])

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": service.list_sessions()}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return service.describe(session_id)

    @app.put("/sessions/{session_id}/workspace")
    def put_workspace(session_id: str, payload: dict = Body(...)):
        return service.update_workspace(session_id, payload["workspace"])

    @app.put("/sessions/{session_id}/settings")
    def put_settings(session_id: str, payload: dict = Body(...)):
        return service.update_settings(session_id, settings_from_payload(payload["settings"]))

    @app.post("/sessions/{session_id}/refine", status_code=202)
    def refine(session_id: str):
        return service.trigger_refine(session_id)

    @app.get("/sessions/{session_id}/jobs/{job_id}")
    def job(session_id: str, job_id: str):
        return service.job_status(session_id, job_id)

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str):
        return service.undo(session_id)

    @app.post("/sessions/{session_id}/redo")
    def redo(session_id: str):
        return service.redo(session_id)

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        state = service.describe(session_id)
        return {"report": state["report"], "narrated_version": state["narrated_version"]}

    @app.put("/sessions/{session_id}/report")
    def put_report(session_id: str, payload: dict = Body(...)):
        return service.edit_report(session_id, payload["components"])

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str):
        return {"events": service.events(session_id)}

    @app.get("/sessions/{session_id}/audit/replay")
    def audit_replay(session_id: str):
        return {"checks": service.verify_replay(session_id)}

    return app
