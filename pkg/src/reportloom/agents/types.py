"""Shared value types for the reasoning layer.

A plan is deliberately coarse: a list of (target, action, instruction)
triples.  Targets name report components, not sentences, so the edit scope
can be enforced after the fact without trusting the model.  Instructions are
imperative English; the only machine-read parts are quoted spans and the
``Replace "X" with "Y"`` form, which the deterministic backend executes
literally and remote models are prompted to honor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..narrative import Report, RevisionDiff
from ..workspace import ModelConfig

# Component targets that are not body-paragraph anchors.
TARGET_SUMMARY = "summary"
TARGET_CONCLUSION = "conclusion"
# Pseudo-target for report-wide restructuring (task reframing, section
# reordering).  A plan step targeting it licenses modification of every
# component, so it is reserved for prompt-settings changes.
TARGET_STRUCTURE = "structure"

ACTION_INSERT = "insert"
ACTION_DELETE = "delete"
ACTION_MODIFY = "modify"
ACTION_EMPHASIZE = "emphasize"
ACTION_DEEMPHASIZE = "deemphasize"
ACTION_ADD_PARAGRAPH = "add_paragraph"
ACTION_REMOVE_PARAGRAPH = "remove_paragraph"
ACTION_RENAME_HEADING = "rename_heading"
ACTION_RELOCATE = "relocate_section"

PLAN_ACTIONS = frozenset(
    {
        ACTION_INSERT,
        ACTION_DELETE,
        ACTION_MODIFY,
        ACTION_EMPHASIZE,
        ACTION_DEEMPHASIZE,
        ACTION_ADD_PARAGRAPH,
        ACTION_REMOVE_PARAGRAPH,
        ACTION_RENAME_HEADING,
        ACTION_RELOCATE,
    }
)

# Sentinel source for inferences driven by prompt-settings changes rather
# than canvas interactions.
PROMPT_SOURCE = "prompt"


@dataclass(frozen=True)
class Message:
    role: str  # "system" | "user" | "assistant"
    content: str


@dataclass(frozen=True)
class LLMRequest:
    schema_id: str
    messages: tuple[Message, ...]
    model_config: ModelConfig


@dataclass(frozen=True)
class LLMResponse:
    payload: dict
    raw_text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class PlanStep:
    target: str  # body anchor, "summary", "conclusion", or "structure"
    action: str
    instruction: str


@dataclass(frozen=True)
class IntentInference:
    """One explained revision: which interactions, why, and what to edit.

    ``source`` is either a tuple of interaction orders or the literal
    string "prompt" for settings-driven inferences.
    """

    source: tuple[int, ...] | str
    why: str
    plan: tuple[PlanStep, ...]

    def source_tags(self) -> tuple[int | str, ...]:
        if isinstance(self.source, str):
            return (self.source,)
        return self.source


@dataclass(frozen=True)
class RefinementResult:
    new_report: Report
    diff: RevisionDiff
    reasoning: tuple[IntentInference, ...]
    # Aligned with diff.changes: which inference sources motivated each
    # sentence change.  Ints are interaction orders, "prompt" marks
    # settings-driven edits.
    provenance: tuple[tuple[int | str, ...], ...]
    scope_violations: tuple[str, ...] = field(default=())


def plan_step_to_payload(step: PlanStep) -> dict:
    return {
        "target": step.target,
        "action": step.action,
        "instruction": step.instruction,
    }


def plan_step_from_payload(payload: dict) -> PlanStep:
    return PlanStep(
        target=payload["target"],
        action=payload["action"],
        instruction=payload["instruction"],
    )


def inference_to_payload(inference: IntentInference) -> dict:
    source: list[int] | str
    if isinstance(inference.source, str):
        source = inference.source
    else:
        source = list(inference.source)
    return {
        "source": source,
        "why": inference.why,
        "plan": [plan_step_to_payload(s) for s in inference.plan],
    }


def inference_from_payload(payload: dict) -> IntentInference:
    raw = payload["source"]
    source: tuple[int, ...] | str
    if isinstance(raw, str):
        source = raw
    else:
        source = tuple(int(o) for o in raw)
    return IntentInference(
        source=source,
        why=payload["why"],
        plan=tuple(plan_step_from_payload(s) for s in payload["plan"]),
    )
