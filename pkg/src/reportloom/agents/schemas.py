"""Versioned response schemas for every model call.

Each request names the schema its reply must satisfy; the transport retries
on violations, so a schema bump here is a protocol change and must come with
a new version suffix rather than an in-place edit.
"""

from __future__ import annotations

import jsonschema

from .errors import SchemaError
from .types import PLAN_ACTIONS

GENERATE_SCHEMA = "report.generate/1"
SYSTEM_INTENT_SCHEMA = "intent.system/1"
INTERACTION_INTENT_SCHEMA = "intent.interactions/1"
REFINE_SCHEMA = "report.refine/1"

_COMPONENT = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["summary", "body", "conclusion"]},
        "anchor": {"type": ["string", "null"], "minLength": 1},
        "heading": {"type": "string", "minLength": 1},
        "sentences": {
            "type": "array",
            "items": {"type": "string", "minLength": 1},
        },
    },
    "required": ["kind", "anchor", "heading", "sentences"],
    "additionalProperties": False,
}

_COMPONENT_LIST = {
    "type": "object",
    "properties": {
        "components": {"type": "array", "items": _COMPONENT, "minItems": 1},
    },
    "required": ["components"],
    "additionalProperties": False,
}

_PLAN_STEP = {
    "type": "object",
    "properties": {
        "target": {"type": "string", "minLength": 1},
        "action": {"enum": sorted(PLAN_ACTIONS)},
        "instruction": {"type": "string", "minLength": 1},
    },
    "required": ["target", "action", "instruction"],
    "additionalProperties": False,
}


def _inference(source_schema: dict) -> dict:
    return {
        "type": "object",
        "properties": {
            "source": source_schema,
            "why": {"type": "string", "minLength": 1},
            "plan": {"type": "array", "items": _PLAN_STEP, "minItems": 1},
        },
        "required": ["source", "why", "plan"],
        "additionalProperties": False,
    }


def _inference_list(source_schema: dict) -> dict:
    return {
        "type": "object",
        "properties": {
            "inferences": {
                "type": "array",
                "items": _inference(source_schema),
                "minItems": 1,
            },
        },
        "required": ["inferences"],
        "additionalProperties": False,
    }


_SCHEMAS: dict[str, dict] = {
    GENERATE_SCHEMA: _COMPONENT_LIST,
    REFINE_SCHEMA: _COMPONENT_LIST,
    SYSTEM_INTENT_SCHEMA: _inference_list({"const": "prompt"}),
    INTERACTION_INTENT_SCHEMA: _inference_list(
        {
            "type": "array",
            "items": {"type": "integer", "minimum": 0},
            "minItems": 1,
        }
    ),
}

_VALIDATORS = {
    schema_id: jsonschema.Draft202012Validator(schema)
    for schema_id, schema in _SCHEMAS.items()
}


def schema_for(schema_id: str) -> dict:
    try:
        return _SCHEMAS[schema_id]
    except KeyError:
        raise SchemaError(f"unknown schema id {schema_id!r}") from None


def validate_response(schema_id: str, payload: object) -> None:
    """Raise SchemaError when payload does not satisfy the named schema."""
    if schema_id not in _VALIDATORS:
        raise SchemaError(f"unknown schema id {schema_id!r}")
    errors = sorted(
        _VALIDATORS[schema_id].iter_errors(payload),
        key=lambda e: list(e.absolute_path),
    )
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise SchemaError(f"{schema_id}: {first.message} (at {where})")
