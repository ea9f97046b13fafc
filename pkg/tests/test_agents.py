import copy
import json
from dataclasses import dataclass, field, replace

import pytest

from reportloom.agents import (
    AnchoringError,
    CountingBackend,
    CoverageError,
    RuleBackend,
    SchemaError,
    generate_initial,
    infer_interactions,
    infer_system,
    refine,
)
from reportloom.agents.backends import LLMBackend, _extract_json
from reportloom.agents.pipeline import MAX_SCHEMA_RETRIES, build_request
from reportloom.agents.prompts import load_prompt
from reportloom.agents.schemas import GENERATE_SCHEMA, schema_for
from reportloom.agents.types import (
    IntentInference,
    LLMResponse,
    PlanStep,
)
from reportloom.evaluation.corpus import _evolve
from reportloom.narrative import report_to_payload, serialize_context
from reportloom.perception import perceive


@dataclass
class Scripted(LLMBackend):
    """Canned replies, one per call; the last reply repeats when exhausted."""

    replies: list
    requests: list = field(default_factory=list)

    def complete(self, request):
        self.requests.append(request)
        payload = self.replies[min(len(self.requests) - 1, len(self.replies) - 1)]
        return LLMResponse(payload=payload, raw_text=json.dumps(payload, sort_keys=True))


def test_rule_backend_is_deterministic(park):
    ctx = serialize_context(park)
    a = RuleBackend()
    b = RuleBackend()
    assert report_to_payload(generate_initial(ctx, a)) == report_to_payload(
        generate_initial(ctx, b)
    )


def test_generate_initial_layout_and_anchors(park):
    ctx = serialize_context(park)
    report = generate_initial(ctx, RuleBackend())
    labels = [c.label() for c in report.components]
    assert labels == ["summary", "f-ops", "f-safety", "f-vendor", "unassigned", "conclusion"]
    assert ctx.fingerprint in report.components[0].sentences[0]
    headings = {c.label(): c.heading for c in report.components}
    assert headings["f-ops"] == "Daily Operations"


def test_generate_initial_rejects_empty_workspace(park):
    empty = replace(park, frames=(), documents=(), highlights=(), notes=())
    with pytest.raises(ValueError):
        generate_initial(serialize_context(empty), RuleBackend())


def test_schema_rejection_gets_corrective_retries(park):
    ctx = serialize_context(park)
    good = {"components": report_to_payload(generate_initial(ctx, RuleBackend()))["components"]}
    backend = Scripted(replies=[{"nonsense": True}, good])
    report = generate_initial(ctx, backend)
    assert len(backend.requests) == 2
    retry_messages = backend.requests[1].messages
    assert retry_messages[-1].role == "user"
    assert "rejected" in retry_messages[-1].content
    assert [c.label() for c in report.components][0] == "summary"


def test_schema_rejection_exhausts_retries(park):
    ctx = serialize_context(park)
    backend = Scripted(replies=[{"nonsense": True}])
    with pytest.raises(SchemaError):
        generate_initial(ctx, backend)
    assert len(backend.requests) == MAX_SCHEMA_RETRIES + 1


def test_anchoring_failure_gets_one_corrective_round(park):
    ctx = serialize_context(park)
    good = {"components": report_to_payload(generate_initial(ctx, RuleBackend()))["components"]}
    # schema-valid but missing every body paragraph
    bad = {"components": [c for c in good["components"] if c["kind"] != "body"]}
    backend = Scripted(replies=[bad, good])
    report = generate_initial(ctx, backend)
    assert any(c.anchor == "f-ops" for c in report.components)
    assert "anchoring" in backend.requests[1].messages[-1].content

    stubborn = Scripted(replies=[bad])
    with pytest.raises(AnchoringError):
        generate_initial(ctx, stubborn)


def test_interactions_sharing_a_section_group_into_one_inference(park):
    after = _evolve(
        park,
        documents=tuple(
            replace(d, position={"d-gate": (1250.0, 300.0), "d-staff": (1350.0, 300.0)}[d.id])
            if d.id in ("d-gate", "d-staff")
            else d
            for d in park.documents
        ),
    )
    delta = perceive(park, after)
    assert len(delta.interactions) == 2
    report = generate_initial(serialize_context(park), RuleBackend())
    inferences = infer_interactions(delta, serialize_context(after), report, RuleBackend())
    assert len(inferences) == 1
    assert set(inferences[0].source) == {0, 1}
    assert inferences[0].why
    assert inferences[0].plan


def test_inference_coverage_is_enforced(park):
    after = _evolve(
        park,
        notes=(),
        highlights=tuple(h for h in park.highlights if h.id != "h-permits"),
        documents=tuple(
            replace(d, highlights=()) if d.id == "d-food" else d for d in park.documents
        ),
    )
    delta = perceive(park, after)
    assert len(delta.interactions) == 2
    report = generate_initial(serialize_context(park), RuleBackend())
    partial = {
        "inferences": [
            {
                "source": [0],
                "why": "only half the story",
                "plan": [{"target": "f-ops", "action": "modify", "instruction": "Revisit."}],
            }
        ]
    }
    backend = Scripted(replies=[partial])
    with pytest.raises(CoverageError) as err:
        infer_interactions(delta, serialize_context(after), report, backend)
    assert "uncovered interaction orders [1]" in str(err.value)
    assert len(backend.requests) == MAX_SCHEMA_RETRIES + 1


def test_inference_targets_must_exist(park):
    after = _evolve(park, notes=())
    delta = perceive(park, after)
    report = generate_initial(serialize_context(park), RuleBackend())
    rogue = {
        "inferences": [
            {
                "source": [0],
                "why": "aimed at nothing",
                "plan": [{"target": "f-nowhere", "action": "insert", "instruction": "Hm."}],
            }
        ]
    }
    with pytest.raises(SchemaError) as err:
        infer_interactions(delta, serialize_context(after), report, Scripted(replies=[rogue]))
    assert "unknown component" in str(err.value)


def test_infer_system_needs_a_narrative_change(park):
    from reportloom.workspace import ModelConfig

    config_only = _evolve(
        park,
        prompt_settings=replace(
            park.prompt_settings, model_config=ModelConfig("bigger", temperature=0.5)
        ),
    )
    adjustment = perceive(park, config_only).prompt_adjustment
    report = generate_initial(serialize_context(park), RuleBackend())
    with pytest.raises(ValueError):
        infer_system(adjustment, serialize_context(config_only), report, RuleBackend())


def test_infer_system_task_change_targets_structure(park):
    retasked = _evolve(
        park,
        prompt_settings=replace(
            park.prompt_settings, task_description="Draft the quarterly safety digest."
        ),
    )
    adjustment = perceive(park, retasked).prompt_adjustment
    report = generate_initial(serialize_context(park), RuleBackend())
    inference = infer_system(adjustment, serialize_context(retasked), report, RuleBackend())
    assert inference.source == "prompt"
    assert any(step.target == "structure" for step in inference.plan)


# -- refine scope discipline ---------------------------------------------------


def _refine_fixture(park):
    ctx = serialize_context(park)
    report = generate_initial(ctx, RuleBackend())
    components = report_to_payload(report)["components"]
    return ctx, report, components


def test_refine_restores_components_touched_outside_plan(park):
    ctx, report, components = _refine_fixture(park)
    tampered = copy.deepcopy(components)
    for comp in tampered:
        if comp["anchor"] == "f-ops":
            comp["sentences"] = comp["sentences"] + ["A fresh remark lands here."]
        if comp["anchor"] == "f-safety":
            comp["sentences"] = ["Everything is fine now."]
    inference = IntentInference(
        source=(0,),
        why="the user pinned a remark",
        plan=(PlanStep("f-ops", "insert", "Add the remark."),),
    )
    result = refine(report, (inference,), ctx, Scripted(replies=[{"components": tampered}]))
    new = {c.label(): c for c in result.new_report.components}
    old = {c.label(): c for c in report.components}
    assert new["f-safety"] == old["f-safety"]
    assert new["f-ops"] != old["f-ops"]
    assert result.diff.changed_anchors == frozenset({"f-ops"})
    assert any("f-safety" in v for v in result.scope_violations)
    assert result.provenance == ((0,),)


def test_refine_drops_uninvited_components(park):
    ctx, report, components = _refine_fixture(park)
    padded = copy.deepcopy(components)
    padded.append(
        {"kind": "body", "anchor": "f-bogus", "heading": "Sneaky", "sentences": ["Hello."]}
    )
    inference = IntentInference(
        source=(0,),
        why="nothing should change",
        plan=(PlanStep("f-ops", "modify", "Leave it alone."),),
    )
    result = refine(report, (inference,), ctx, Scripted(replies=[{"components": padded}]))
    assert "f-bogus" not in {c.label() for c in result.new_report.components}
    assert any("f-bogus" in v for v in result.scope_violations)
    assert not result.diff.changes


def test_refine_removal_requires_a_step(park):
    ctx, report, components = _refine_fixture(park)
    without = [c for c in components if c["anchor"] != "unassigned"]

    silent = IntentInference(
        source=(0,), why="no removal intended", plan=(PlanStep("f-ops", "modify", "Noop."),)
    )
    restored = refine(report, (silent,), ctx, Scripted(replies=[{"components": without}]))
    assert "unassigned" in {c.label() for c in restored.new_report.components}
    assert any("vanished" in v for v in restored.scope_violations)

    explicit = IntentInference(
        source=(0,),
        why="the leftovers section is obsolete",
        plan=(PlanStep("unassigned", "remove_paragraph", "Drop the leftovers section."),),
    )
    removed = refine(report, (explicit,), ctx, Scripted(replies=[{"components": without}]))
    assert "unassigned" not in {c.label() for c in removed.new_report.components}
    assert removed.scope_violations == ()
    assert all(c.change == "deleted" for c in removed.diff.changes)


def test_refine_requires_inferences(park):
    ctx, report, _ = _refine_fixture(park)
    with pytest.raises(ValueError):
        refine(report, (), ctx, RuleBackend())


# -- plumbing ------------------------------------------------------------------


def test_prompts_exist_for_every_schema():
    for name in ("generation", "intent_interactions", "intent_system", "refinement"):
        text = load_prompt(name)
        assert "JSON" in text


def test_build_request_embeds_sorted_payload(park):
    ctx = serialize_context(park)
    request = build_request(GENERATE_SCHEMA, {"b": 1, "a": 2}, ctx.model_config)
    assert request.messages[1].content == '{"a": 2, "b": 1}'
    assert schema_for(GENERATE_SCHEMA)["type"] == "object"


def test_extract_json_tolerates_one_fenced_block():
    assert _extract_json('```json\n{"x": 1}\n```') == {"x": 1}
    assert _extract_json('{"x": 1}') == {"x": 1}
    with pytest.raises(SchemaError):
        _extract_json("not json at all")
    with pytest.raises(SchemaError):
        _extract_json("[1, 2]")


def test_counting_backend_tallies_by_schema(park):
    ctx = serialize_context(park)
    backend = CountingBackend(RuleBackend())
    generate_initial(ctx, backend)
    generate_initial(ctx, backend)
    counts = backend.snapshot_counts()
    assert counts["total"] == 2
    assert counts["report.generate/1"] == 2
