"""Reasoning and acting over reports.

Four entry points, one per model call site: ``generate_initial`` writes the
first report from a workspace context, ``infer_interactions`` and
``infer_system`` turn perceived changes into explained revision plans, and
``refine`` executes plans and enforces that nothing outside the planned
targets changed.

Scope enforcement is deliberately post-hoc: the backend gets the whole
report (models revise better with full context), and any component it
touched without a plan step naming that component is restored byte for byte.
Violations are logged and reported on the result, never silently accepted.
"""

from __future__ import annotations

import json
import logging
from dataclasses import replace

from ..narrative import (
    CHANGE_DELETED,
    UNASSIGNED_ANCHOR,
    GenerationContext,
    Report,
    ReportComponent,
    check_anchoring_context,
    component_from_payload,
    context_to_payload,
    diff_reports,
    report_to_payload,
)
from ..perception import InteractionDelta, PromptAdjustment, adjustment_to_payload, delta_to_payload
from ..workspace import KIND_BODY, KIND_CONCLUSION, KIND_SUMMARY, ModelConfig
from .backends import LLMBackend
from .errors import AnchoringError, CoverageError, SchemaError
from .prompts import load_prompt
from .schemas import (
    GENERATE_SCHEMA,
    INTERACTION_INTENT_SCHEMA,
    REFINE_SCHEMA,
    SYSTEM_INTENT_SCHEMA,
    validate_response,
)
from .types import (
    ACTION_ADD_PARAGRAPH,
    ACTION_REMOVE_PARAGRAPH,
    IntentInference,
    LLMRequest,
    Message,
    PROMPT_SOURCE,
    RefinementResult,
    TARGET_CONCLUSION,
    TARGET_STRUCTURE,
    TARGET_SUMMARY,
    inference_from_payload,
    inference_to_payload,
)

logger = logging.getLogger(__name__)

# Schema-invalid replies get this many additional attempts, each carrying the
# rejected reply and the reason back to the model.
MAX_SCHEMA_RETRIES = 2

_PROMPT_FOR_SCHEMA = {
    GENERATE_SCHEMA: "generation",
    SYSTEM_INTENT_SCHEMA: "intent_system",
    INTERACTION_INTENT_SCHEMA: "intent_interactions",
    REFINE_SCHEMA: "refinement",
}


def build_request(schema_id: str, payload: dict, model_config: ModelConfig) -> LLMRequest:
    return LLMRequest(
        schema_id=schema_id,
        messages=(
            Message("system", load_prompt(_PROMPT_FOR_SCHEMA[schema_id])),
            Message("user", json.dumps(payload, sort_keys=True)),
        ),
        model_config=model_config,
    )


def _complete_checked(backend: LLMBackend, request: LLMRequest, check=None) -> dict:
    """Run a completion, validating the reply against its schema and the
    optional semantic ``check``; rejected replies are re-prompted with the
    failure reason, up to MAX_SCHEMA_RETRIES extra rounds."""
    messages = request.messages
    last_error: Exception | None = None
    for _ in range(MAX_SCHEMA_RETRIES + 1):
        response = backend.complete(replace(request, messages=messages))
        try:
            validate_response(request.schema_id, response.payload)
            if check is not None:
                check(response.payload)
            return response.payload
        except (SchemaError, CoverageError) as exc:
            last_error = exc
            messages = messages + (
                Message("assistant", response.raw_text),
                Message(
                    "user",
                    f"The previous reply was rejected: {exc}. "
                    f"Reply again with JSON satisfying schema {request.schema_id}.",
                ),
            )
    assert last_error is not None
    raise last_error


# ---------------------------------------------------------------------------
# generation


def generate_initial(context: GenerationContext, backend: LLMBackend) -> Report:
    """First full report for a workspace. Raises AnchoringError when the
    backend cannot produce well-anchored components even after one corrective
    round."""
    if not context.frames and not context.unassigned_documents and not context.unassigned_notes:
        raise ValueError("workspace has no content to report on")
    payload = {"context": context_to_payload(context)}
    request = build_request(GENERATE_SCHEMA, payload, context.model_config)
    data = _complete_checked(backend, request)
    report = Report(
        version=1,
        components=tuple(component_from_payload(c) for c in data["components"]),
    )
    violations = check_anchoring_context(report, context)
    if not violations:
        return report

    # One corrective round: tell the model exactly what failed to anchor.
    complaint = "; ".join(f"{v.subject}: {v.reason}" for v in violations)
    corrective = replace(
        request,
        messages=request.messages
        + (
            Message("assistant", json.dumps(data, sort_keys=True)),
            Message(
                "user",
                "The report failed anchoring checks: "
                f"{complaint}. Every top-level frame needs exactly one body "
                "paragraph whose anchor is that frame's id.",
            ),
        ),
    )
    data = _complete_checked(backend, corrective)
    report = Report(
        version=1,
        components=tuple(component_from_payload(c) for c in data["components"]),
    )
    violations = check_anchoring_context(report, context)
    if violations:
        raise AnchoringError(
            "; ".join(f"{v.subject}: {v.reason}" for v in violations)
        )
    return report


# ---------------------------------------------------------------------------
# intent inference


def _valid_targets(report: Report, context: GenerationContext) -> set[str]:
    targets = {c.label() for c in report.components}
    targets.update(f.id for f in context.frames)
    targets.update((TARGET_SUMMARY, TARGET_CONCLUSION, TARGET_STRUCTURE, UNASSIGNED_ANCHOR))
    return targets


def infer_interactions(
    delta: InteractionDelta,
    context: GenerationContext,
    report: Report,
    backend: LLMBackend,
) -> tuple[IntentInference, ...]:
    """Explain every canvas interaction in ``delta`` as revision plans.

    ``context`` must describe the workspace the delta leads to (its current
    state). The union of inference sources must equal the set of interaction
    orders; anything else raises CoverageError after bounded retries.
    """
    if not delta.interactions:
        raise ValueError("delta carries no interactions to infer from")
    expected_orders = {i.order for i in delta.interactions}
    allowed_targets = _valid_targets(report, context)

    def check(payload: dict) -> None:
        covered: set[int] = set()
        for inf in payload["inferences"]:
            covered.update(inf["source"])
            for step in inf["plan"]:
                if step["target"] not in allowed_targets:
                    raise SchemaError(
                        f"plan step targets unknown component {step['target']!r}"
                    )
        missing = expected_orders - covered
        unknown = covered - expected_orders
        if missing or unknown:
            parts = []
            if missing:
                parts.append(f"uncovered interaction orders {sorted(missing)}")
            if unknown:
                parts.append(f"nonexistent interaction orders {sorted(unknown)}")
            raise CoverageError("; ".join(parts))

    payload = {
        "delta": delta_to_payload(delta),
        "context": context_to_payload(context),
        "report": report_to_payload(report),
    }
    request = build_request(INTERACTION_INTENT_SCHEMA, payload, context.model_config)
    data = _complete_checked(backend, request, check)
    inferences = [inference_from_payload(p) for p in data["inferences"]]
    inferences.sort(key=lambda inf: min(inf.source_tags(), key=lambda t: (isinstance(t, str), t)))
    return tuple(inferences)


def infer_system(
    adjustment: PromptAdjustment,
    context: GenerationContext,
    report: Report,
    backend: LLMBackend,
) -> IntentInference:
    """Explain a prompt-settings change as a revision plan. ``context`` must
    reflect the new settings."""
    if not adjustment.has_narrative_change():
        raise ValueError("adjustment carries no narrative-relevant change")
    allowed_targets = _valid_targets(report, context)

    def check(payload: dict) -> None:
        for inf in payload["inferences"]:
            for step in inf["plan"]:
                if step["target"] not in allowed_targets:
                    raise SchemaError(
                        f"plan step targets unknown component {step['target']!r}"
                    )

    payload = {
        "adjustment": adjustment_to_payload(adjustment),
        "context": context_to_payload(context),
        "report": report_to_payload(report),
    }
    request = build_request(SYSTEM_INTENT_SCHEMA, payload, context.model_config)
    data = _complete_checked(backend, request, check)
    return inference_from_payload(data["inferences"][0])


# ---------------------------------------------------------------------------
# refinement


def _canonical_order(
    by_label: dict[str, ReportComponent], context: GenerationContext
) -> list[ReportComponent]:
    """Settings order, with the body slot expanded to main frames in context
    order followed by the unassigned section. Labels the context does not
    know about go last; the anchoring check deals with them."""
    remaining = dict(by_label)
    ordered: list[ReportComponent] = []
    for spec in context.components:
        if spec.kind == KIND_BODY:
            for frame in context.frames:
                if frame.id in remaining:
                    ordered.append(remaining.pop(frame.id))
            if UNASSIGNED_ANCHOR in remaining:
                ordered.append(remaining.pop(UNASSIGNED_ANCHOR))
        elif spec.kind in remaining:
            ordered.append(remaining.pop(spec.kind))
    ordered.extend(remaining[label] for label in sorted(remaining))
    return ordered


def _enforce_scope(
    old_report: Report,
    candidate: list[ReportComponent],
    inferences: tuple[IntentInference, ...],
    context: GenerationContext,
) -> tuple[list[ReportComponent], list[str]]:
    steps = [step for inf in inferences for step in inf.plan]
    allowed = {step.target for step in steps}
    global_license = TARGET_STRUCTURE in allowed
    removable = {s.target for s in steps if s.action == ACTION_REMOVE_PARAGRAPH}
    addable = {s.target for s in steps if s.action == ACTION_ADD_PARAGRAPH}
    violations: list[str] = []

    new_by_label: dict[str, ReportComponent] = {}
    for comp in candidate:
        label = comp.label()
        if label in new_by_label:
            violations.append(f"duplicate component {label!r} in output; kept the first")
            continue
        new_by_label[label] = comp

    old_by_label = {c.label(): c for c in old_report.components}
    result: dict[str, ReportComponent] = {}
    for label, old_comp in old_by_label.items():
        new_comp = new_by_label.get(label)
        if new_comp is None:
            if label in removable:
                continue
            violations.append(f"component {label!r} vanished without a removal step; restored")
            result[label] = old_comp
        elif label in allowed or global_license:
            result[label] = new_comp
        elif new_comp != old_comp:
            violations.append(f"component {label!r} changed outside the plan scope; restored")
            result[label] = old_comp
        else:
            result[label] = old_comp
    for label, new_comp in new_by_label.items():
        if label in old_by_label:
            continue
        if label in addable:
            result[label] = new_comp
        else:
            violations.append(f"component {label!r} appeared without an addition step; dropped")

    return _canonical_order(result, context), violations


def _provenance(
    diff_changes,
    old_report: Report,
    new_report: Report,
    inferences: tuple[IntentInference, ...],
) -> tuple[tuple[int | str, ...], ...]:
    label_tags: dict[str, list] = {}
    global_tags: list = []
    for inf in inferences:
        tags = list(inf.source_tags())
        for step in inf.plan:
            if step.target == TARGET_STRUCTURE:
                global_tags.extend(tags)
            else:
                label_tags.setdefault(step.target, []).extend(tags)

    def tags_for(label: str) -> tuple[int | str, ...]:
        raw = label_tags.get(label, []) + global_tags
        ints = sorted({t for t in raw if isinstance(t, int)})
        strs = sorted({t for t in raw if isinstance(t, str)})
        return tuple(ints) + tuple(strs)

    out = []
    for change in diff_changes:
        report = old_report if change.change == CHANGE_DELETED else new_report
        out.append(tags_for(report.components[change.component].label()))
    return tuple(out)


def refine(
    report: Report,
    inferences: tuple[IntentInference, ...],
    context: GenerationContext,
    backend: LLMBackend,
) -> RefinementResult:
    """Execute revision plans against ``report``.

    The returned report is scope-enforced: only components named as plan
    targets may differ (plus everything under a ``structure`` license), and
    paragraph addition/removal requires the corresponding step. The diff and
    its per-change provenance are computed here so every caller tells the
    same story.
    """
    if not inferences:
        raise ValueError("no inferences to apply")
    payload = {
        "report": report_to_payload(report),
        "inferences": [inference_to_payload(i) for i in inferences],
        "context": context_to_payload(context),
    }
    request = build_request(REFINE_SCHEMA, payload, context.model_config)
    data = _complete_checked(backend, request)
    candidate = [component_from_payload(c) for c in data["components"]]
    enforced, scope_violations = _enforce_scope(report, candidate, inferences, context)
    for violation in scope_violations:
        logger.warning("scope violation: %s", violation)

    new_report = Report(version=report.version + 1, components=tuple(enforced))
    anchor_violations = check_anchoring_context(new_report, context)
    if anchor_violations:
        raise AnchoringError(
            "; ".join(f"{v.subject}: {v.reason}" for v in anchor_violations)
        )
    diff = diff_reports(report, new_report)
    return RefinementResult(
        new_report=new_report,
        diff=diff,
        reasoning=tuple(inferences),
        provenance=_provenance(diff.changes, report, new_report, inferences),
        scope_violations=tuple(scope_violations),
    )
