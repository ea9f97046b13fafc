from .api import create_app
from .config import BACKEND_MOCK, BACKEND_REMOTE, ServiceConfig, build_backend
from .sessions import (
    Busy,
    NothingToRedo,
    NothingToRefine,
    NothingToUndo,
    RevisionOutcome,
    SessionError,
    SessionNotFound,
    SessionService,
    SessionState,
    StaleVersion,
    completion_payload,
    execute_revision,
)
from .store import EventStore

__all__ = [
    "BACKEND_MOCK",
    "BACKEND_REMOTE",
    "Busy",
    "EventStore",
    "NothingToRedo",
    "NothingToRefine",
    "NothingToUndo",
    "RevisionOutcome",
    "ServiceConfig",
    "SessionError",
    "SessionNotFound",
    "SessionService",
    "SessionState",
    "StaleVersion",
    "build_backend",
    "completion_payload",
    "create_app",
    "execute_revision",
]
