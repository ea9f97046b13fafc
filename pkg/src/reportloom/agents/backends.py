"""Completion backends.

The pipeline only ever sees the LLMBackend protocol, so tests swap in the
deterministic rule backend and the service can count calls without the
pipeline knowing.
"""

from __future__ import annotations

import abc
import json
import os
import threading
import time

import httpx

from .errors import BackendError, SchemaError
from .types import LLMRequest, LLMResponse

DEFAULT_BASE_URL = "https://api.openai.com/v1"

# Transient HTTP statuses worth one more attempt before giving up.
_RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}


class LLMBackend(abc.ABC):
    @abc.abstractmethod
    def complete(self, request: LLMRequest) -> LLMResponse:
        """Run one completion.  Must raise BackendError on transport failure
        and SchemaError when the reply is not a JSON object."""


def _extract_json(text: str) -> dict:
    """Parse a model reply that should be a bare JSON object.

    Tolerates a fenced ``` block around the object, nothing else.
    """
    stripped = text.strip()
    if stripped.startswith("```"):
        first_newline = stripped.find("\n")
        if first_newline != -1 and stripped.endswith("```"):
            stripped = stripped[first_newline + 1 : -3].strip()
    try:
        payload = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"reply is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError("reply must be a JSON object")
    return payload


class RemoteBackend(LLMBackend):
    """Talks to any chat-completions endpoint with the common wire shape."""

    def __init__(
        self,
        base_url: str = DEFAULT_BASE_URL,
        api_key: str = "",
        timeout: float = 90.0,
        max_attempts: int = 3,
        client: httpx.Client | None = None,
    ):
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._max_attempts = max_attempts
        self._client = client or httpx.Client(
            base_url=base_url.rstrip("/"), headers=headers, timeout=timeout
        )

    @classmethod
    def from_env(cls) -> "RemoteBackend":
        return cls(
            base_url=os.environ.get("REPORTLOOM_LLM_BASE_URL", DEFAULT_BASE_URL),
            api_key=os.environ.get("REPORTLOOM_LLM_API_KEY", ""),
        )

    def complete(self, request: LLMRequest) -> LLMResponse:
        body = {
            "model": request.model_config.model_name,
            "temperature": request.model_config.temperature,
            "max_tokens": request.model_config.max_tokens,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
        }
        last_error: Exception | None = None
        for attempt in range(self._max_attempts):
            if attempt:
                time.sleep(min(2.0**attempt, 8.0))
            try:
                response = self._client.post("/chat/completions", json=body)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code in _RETRYABLE_STATUS:
                last_error = BackendError(
                    f"provider returned {response.status_code}: {response.text[:200]}"
                )
                continue
            if response.status_code != 200:
                raise BackendError(
                    f"provider returned {response.status_code}: {response.text[:200]}"
                )
            return self._parse(response.json())
        raise BackendError(f"completion failed after {self._max_attempts} attempts: {last_error}")

    @staticmethod
    def _parse(data: dict) -> LLMResponse:
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion envelope: {exc}") from exc
        usage = data.get("usage") or {}
        return LLMResponse(
            payload=_extract_json(text),
            raw_text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )

    def close(self) -> None:
        self._client.close()


class CountingBackend(LLMBackend):
    """Wraps another backend and tallies calls, for no-surprise-calls tests
    and for the service's usage endpoint."""

    def __init__(self, inner: LLMBackend):
        self._inner = inner
        self._lock = threading.Lock()
        self.total_calls = 0
        self.calls_by_schema: dict[str, int] = {}

    def complete(self, request: LLMRequest) -> LLMResponse:
        with self._lock:
            self.total_calls += 1
            self.calls_by_schema[request.schema_id] = (
                self.calls_by_schema.get(request.schema_id, 0) + 1
            )
        return self._inner.complete(request)

    def snapshot_counts(self) -> dict[str, int]:
        with self._lock:
            return dict(self.calls_by_schema, total=self.total_calls)
