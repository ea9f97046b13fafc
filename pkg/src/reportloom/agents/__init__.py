"""Reasoning layer: backends, intent inference, and scoped refinement."""

from .backends import CountingBackend, LLMBackend, RemoteBackend
from .errors import AgentError, AnchoringError, BackendError, CoverageError, SchemaError
from .mock import RuleBackend
from .pipeline import generate_initial, infer_interactions, infer_system, refine
from .types import (
    IntentInference,
    LLMRequest,
    LLMResponse,
    Message,
    PlanStep,
    RefinementResult,
)

__all__ = [
    "AgentError",
    "AnchoringError",
    "BackendError",
    "CountingBackend",
    "CoverageError",
    "IntentInference",
    "LLMBackend",
    "LLMRequest",
    "LLMResponse",
    "Message",
    "PlanStep",
    "RefinementResult",
    "RemoteBackend",
    "RuleBackend",
    "SchemaError",
    "generate_initial",
    "infer_interactions",
    "infer_system",
    "refine",
]
