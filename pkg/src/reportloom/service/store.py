"""Append-only session event log.

One JSONL file per session. Every state transition is an event; session
state is always rebuilt by replaying the file, so the log is the single
source of truth and crash recovery is just rereading it.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from pathlib import Path

_SAFE_ID = set("abcdefghijklmnopqrstuvwxyz0123456789-")


class EventStore:
    def __init__(self, data_dir: Path):
        self._dir = Path(data_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        if not session_id or set(session_id) - _SAFE_ID:
            raise ValueError(f"invalid session id {session_id!r}")
        return self._dir / f"{session_id}.jsonl"

    def append(self, session_id: str, event_type: str, data: dict) -> dict:
        """Append one event and return it (with seq and timestamp filled in)."""
        with self._lock:
            path = self._path(session_id)
            seq = 0
            if path.exists():
                with path.open("r", encoding="utf-8") as fh:
                    seq = sum(1 for _ in fh)
            event = {
                "seq": seq,
                "at": datetime.now(timezone.utc).isoformat(),
                "type": event_type,
                "data": data,
            }
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
            return event

    def read(self, session_id: str) -> list[dict]:
        path = self._path(session_id)
        if not path.exists():
            return []
        events = []
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in self._dir.glob("*.jsonl"))
