"""Hand-authored evaluation suite.

One fictional amusement-park operations workspace, mutated 21 ways so every
interaction kind (and the settings-driven paths) appears at least once.
Expected markers are written against the rule backend's sentence templates;
geometry is chosen so center-point membership resolves exactly as stated in
each case title.
"""

from __future__ import annotations

from dataclasses import replace
from datetime import datetime, timezone

from ..agents.mock import note_sentence
from ..workspace import (
    ComponentSpec,
    DocumentCard,
    Frame,
    Highlight,
    KIND_BODY,
    KIND_CONCLUSION,
    KIND_SUMMARY,
    ModelConfig,
    Note,
    POLARITY_EMPHASIZE,
    POLARITY_REJECT,
    PromptSettings,
    WorkspaceSnapshot,
    require_valid,
)
from .cases import EvalCase

TOP_SIZE = (840.0, 840.0)
CHILD_SIZE = (240.0, 240.0)
DOC_SIZE = (160.0, 100.0)
NOTE_SIZE = (140.0, 90.0)

_BODIES = {
    "d-gate": "Weekday gate counts fell eight percent after the schedule change.",
    "d-staff": "Two supervisors swapped onto the closing shift without handover notes.",
    "d-incident": "The coaster platform logged two minor injuries during the holiday rush.",
    "d-harness": "Quarterly harness inspections passed on every gated ride.",
    "d-food": "Three stalls operated with expired permits at the north concourse.",
    "d-memo": "The liability carrier asks for an updated incident reporting workflow.",
}

NOTE_TEXT = "Flag anything affecting weekend staffing"
TASK = "Summarize park operations risk for the monthly board meeting."


def _span(doc_id: str, fragment: str) -> tuple[int, int]:
    start = _BODIES[doc_id].index(fragment)
    return (start, start + len(fragment))


def _highlight(hid: str, doc_id: str, fragment: str, count: int = 1, polarity: str = POLARITY_EMPHASIZE) -> Highlight:
    return Highlight(
        id=hid,
        document=doc_id,
        span=_span(doc_id, fragment),
        text=fragment,
        count=count,
        polarity=polarity,
    )


def base_snapshot() -> WorkspaceSnapshot:
    frames = (
        Frame("f-ops", "Daily Operations", (0.0, 0.0), TOP_SIZE, created_seq=1),
        Frame("f-safety", "Safety Review", (1000.0, 0.0), TOP_SIZE, created_seq=2),
        Frame("f-vendor", "Vendor Compliance", (2000.0, 0.0), TOP_SIZE, created_seq=3),
        Frame("f-rides", "Ride Checks", (1100.0, 100.0), CHILD_SIZE, parent="f-safety", created_seq=4),
    )
    documents = (
        DocumentCard("d-gate", "Gate Counts", _BODIES["d-gate"], (100.0, 300.0), DOC_SIZE),
        DocumentCard("d-staff", "Staff Rotation", _BODIES["d-staff"], (400.0, 300.0), DOC_SIZE),
        DocumentCard(
            "d-incident",
            "Incident Log",
            _BODIES["d-incident"],
            (1400.0, 400.0),
            DOC_SIZE,
            highlights=("h-injuries",),
        ),
        DocumentCard("d-harness", "Harness Inspections", _BODIES["d-harness"], (1130.0, 150.0), DOC_SIZE),
        DocumentCard(
            "d-food",
            "Food Stall Audit",
            _BODIES["d-food"],
            (2100.0, 300.0),
            DOC_SIZE,
            highlights=("h-permits",),
        ),
        DocumentCard("d-memo", "Insurance Memo", _BODIES["d-memo"], (500.0, 2000.0), DOC_SIZE),
    )
    highlights = (
        _highlight("h-injuries", "d-incident", "two minor injuries"),
        _highlight("h-permits", "d-food", "expired permits", count=2),
    )
    notes = (Note("n-flag", NOTE_TEXT, (100.0, 350.0), NOTE_SIZE),)
    settings = PromptSettings(
        task_description=TASK,
        components=(
            ComponentSpec("Summary", KIND_SUMMARY),
            ComponentSpec("Findings", KIND_BODY),
            ComponentSpec("Outlook", KIND_CONCLUSION),
        ),
        model_config=ModelConfig("default"),
    )
    snapshot = WorkspaceSnapshot(
        version=1,
        timestamp=datetime(2026, 3, 2, 9, 0, tzinfo=timezone.utc),
        frames=frames,
        documents=documents,
        highlights=highlights,
        notes=notes,
        prompt_settings=settings,
    )
    require_valid(snapshot)
    return snapshot


def _evolve(before: WorkspaceSnapshot, **changes) -> WorkspaceSnapshot:
    after = replace(
        before,
        version=before.version + 1,
        timestamp=datetime(2026, 3, 2, 9, 5, tzinfo=timezone.utc),
        **changes,
    )
    require_valid(after)
    return after


def _without(items, item_id: str):
    return tuple(i for i in items if i.id != item_id)


def _swap(items, item_id: str, **field_changes):
    return tuple(replace(i, **field_changes) if i.id == item_id else i for i in items)


def _shift(position: tuple[float, float], dx: float, dy: float) -> tuple[float, float]:
    return (position[0] + dx, position[1] + dy)


def build_suite() -> list[EvalCase]:
    cases = [
        _note_added(),
        _note_removed(),
        _note_edited(),
        _note_reassigned(),
        _highlight_added(),
        _highlight_added_rejected(),
        _highlight_removed(),
        _highlight_count_edited(),
        _highlight_polarity_toggled(),
        _frame_added_empty(),
        _frame_added_captures_doc(),
        _frame_removed(),
        _frame_renamed_main(),
        _frame_renamed_child(),
        _frame_moved_vacuous(),
        _document_reassigned(),
        _frame_reparented_across(),
        _frame_reparented_promoted(),
        _task_changed(),
        _components_reordered(),
        _conclusion_dropped(),
    ]
    assert len({c.id for c in cases}) == len(cases)
    return cases


def _note_added() -> EvalCase:
    before = base_snapshot()
    text = "Check the storm drainage before reopening the river ride"
    after = _evolve(
        before,
        notes=before.notes + (Note("n-storm", text, (400.0, 350.0), NOTE_SIZE),),
    )
    return EvalCase(
        id="note_added",
        title="A note dropped into Daily Operations lands in that paragraph",
        kinds=("NOTE_ADDED",),
        before=before,
        after=after,
        target_anchors=("f-ops",),
        expected=(
            {"type": "sentence_added", "component": "f-ops", "text": note_sentence(text)},
        ),
    )


def _note_removed() -> EvalCase:
    before = base_snapshot()
    after = _evolve(before, notes=_without(before.notes, "n-flag"))
    return EvalCase(
        id="note_removed",
        title="Deleting a note removes its sentence and nothing else",
        kinds=("NOTE_REMOVED",),
        before=before,
        after=after,
        target_anchors=("f-ops",),
        expected=(
            {"type": "sentence_removed", "component": "f-ops", "text": NOTE_TEXT},
        ),
    )


def _note_edited() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        notes=_swap(before.notes, "n-flag", text="Flag anything affecting holiday staffing"),
    )
    return EvalCase(
        id="note_edited",
        title="Editing note text rewords the note sentence in place",
        kinds=("NOTE_EDITED",),
        before=before,
        after=after,
        target_anchors=("f-ops",),
        expected=(
            {
                "type": "text_replaced",
                "component": "f-ops",
                "old": "weekend staffing",
                "new": "holiday staffing",
            },
        ),
    )


def _note_reassigned() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        notes=_swap(before.notes, "n-flag", position=(1300.0, 300.0)),
    )
    return EvalCase(
        id="note_reassigned",
        title="Dragging a note into Safety Review moves its sentence",
        kinds=("NOTE_REASSIGNED",),
        before=before,
        after=after,
        target_anchors=("f-ops", "f-safety"),
        expected=(
            {"type": "sentence_removed", "component": "f-ops", "text": NOTE_TEXT},
            {
                "type": "sentence_added",
                "component": "f-safety",
                "text": note_sentence(NOTE_TEXT),
            },
        ),
    )


def _highlight_added() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        highlights=before.highlights + (_highlight("h-gate", "d-gate", "eight percent"),),
        documents=_swap(before.documents, "d-gate", highlights=("h-gate",)),
    )
    return EvalCase(
        id="highlight_added",
        title="Highlighting a detail emphasizes it in the owning paragraph",
        kinds=("HIGHLIGHT_ADDED",),
        before=before,
        after=after,
        target_anchors=("f-ops",),
        expected=(
            {"type": "emphasis_set", "component": "f-ops", "text": "eight percent", "mentions": 1},
        ),
    )


def _highlight_added_rejected() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        highlights=before.highlights
        + (_highlight("h-handover", "d-staff", "without handover notes", polarity=POLARITY_REJECT),),
        documents=_swap(before.documents, "d-staff", highlights=("h-handover",)),
    )
    return EvalCase(
        id="highlight_added_rejected",
        title="A rejected highlight must not change the report",
        kinds=("HIGHLIGHT_ADDED",),
        before=before,
        after=after,
        target_anchors=(),
        expected=(),
    )


def _highlight_removed() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        highlights=_without(before.highlights, "h-permits"),
        documents=_swap(before.documents, "d-food", highlights=()),
    )
    return EvalCase(
        id="highlight_removed",
        title="Removing a highlight clears its emphasis call-out",
        kinds=("HIGHLIGHT_REMOVED",),
        before=before,
        after=after,
        target_anchors=("f-vendor",),
        expected=(
            {
                "type": "sentence_removed",
                "component": "f-vendor",
                "text": 'The detail "expired permits"',
            },
        ),
    )


def _highlight_count_edited() -> EvalCase:
    before = base_snapshot()
    after = _evolve(before, highlights=_swap(before.highlights, "h-injuries", count=3))
    return EvalCase(
        id="highlight_count_edited",
        title="Raising a highlight count strengthens the emphasis",
        kinds=("HIGHLIGHT_COUNT_EDITED",),
        before=before,
        after=after,
        target_anchors=("f-safety",),
        expected=(
            {
                "type": "emphasis_set",
                "component": "f-safety",
                "text": "two minor injuries",
                "mentions": 2,
            },
        ),
    )


def _highlight_polarity_toggled() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        highlights=_swap(before.highlights, "h-permits", polarity=POLARITY_REJECT),
    )
    return EvalCase(
        id="highlight_polarity_toggled",
        title="Toggling a highlight to reject withdraws its emphasis",
        kinds=("HIGHLIGHT_POLARITY_TOGGLED",),
        before=before,
        after=after,
        target_anchors=("f-vendor",),
        expected=(
            {
                "type": "sentence_removed",
                "component": "f-vendor",
                "text": 'The detail "expired permits"',
            },
        ),
    )


def _frame_added_empty() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        frames=before.frames
        + (Frame("f-night", "Night Shift", (3000.0, 0.0), TOP_SIZE, created_seq=5),),
    )
    return EvalCase(
        id="frame_added_empty",
        title="A new empty group gets its own paragraph",
        kinds=("FRAME_ADDED",),
        before=before,
        after=after,
        target_anchors=("f-night",),
        expected=(
            {"type": "paragraph_added", "anchor": "f-night"},
            {
                "type": "sentence_contains",
                "component": "f-night",
                "text": '"Night Shift" cluster groups 0 document(s)',
            },
        ),
    )


def _frame_added_captures_doc() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        frames=before.frames
        + (Frame("f-claims", "Claims Review", (300.0, 1700.0), TOP_SIZE, created_seq=5),),
    )
    return EvalCase(
        id="frame_added_captures_doc",
        title="Framing a loose document moves it out of Unassigned",
        kinds=("DOCUMENT_REASSIGNED", "FRAME_ADDED"),
        before=before,
        after=after,
        target_anchors=("unassigned", "f-claims"),
        expected=(
            {"type": "paragraph_added", "anchor": "f-claims"},
            {"type": "sentence_removed", "component": "unassigned", "text": "Insurance Memo"},
            {"type": "sentence_contains", "component": "f-claims", "text": "Insurance Memo"},
        ),
    )


def _frame_removed() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        frames=_without(before.frames, "f-vendor"),
    )
    return EvalCase(
        id="frame_removed",
        title="Dissolving a group drops its paragraph; content falls to Unassigned",
        kinds=("DOCUMENT_REASSIGNED", "FRAME_REMOVED"),
        before=before,
        after=after,
        target_anchors=("f-vendor", "unassigned"),
        expected=(
            {"type": "paragraph_removed", "anchor": "f-vendor"},
            {"type": "sentence_contains", "component": "unassigned", "text": "Food Stall Audit"},
        ),
    )


def _frame_renamed_main() -> EvalCase:
    before = base_snapshot()
    after = _evolve(before, frames=_swap(before.frames, "f-ops", name="Morning Operations"))
    return EvalCase(
        id="frame_renamed_main",
        title="Renaming a top group renames its section and summary mention",
        kinds=("FRAME_RENAMED",),
        before=before,
        after=after,
        target_anchors=("f-ops", "summary"),
        expected=(
            {"type": "heading_renamed", "component": "f-ops", "to": "Morning Operations"},
            {
                "type": "text_replaced",
                "component": "f-ops",
                "old": "Daily Operations",
                "new": "Morning Operations",
            },
            {
                "type": "text_replaced",
                "component": "summary",
                "old": "Daily Operations",
                "new": "Morning Operations",
            },
        ),
    )


def _frame_renamed_child() -> EvalCase:
    before = base_snapshot()
    after = _evolve(before, frames=_swap(before.frames, "f-rides", name="Ride Maintenance"))
    return EvalCase(
        id="frame_renamed_child",
        title="Renaming a nested group rewords the subgroup mention",
        kinds=("FRAME_RENAMED",),
        before=before,
        after=after,
        target_anchors=("f-safety",),
        expected=(
            {
                "type": "text_replaced",
                "component": "f-safety",
                "old": "Ride Checks",
                "new": "Ride Maintenance",
            },
        ),
    )


def _frame_moved_vacuous() -> EvalCase:
    before = base_snapshot()
    dx, dy = 0.0, 1100.0
    after = _evolve(
        before,
        frames=_swap(before.frames, "f-ops", position=_shift((0.0, 0.0), dx, dy)),
        documents=_swap(
            _swap(before.documents, "d-gate", position=_shift((100.0, 300.0), dx, dy)),
            "d-staff",
            position=_shift((400.0, 300.0), dx, dy),
        ),
        notes=_swap(before.notes, "n-flag", position=_shift((100.0, 350.0), dx, dy)),
    )
    return EvalCase(
        id="frame_moved_vacuous",
        title="Translating a group with its contents changes no text",
        kinds=("DOCUMENT_MOVED", "FRAME_MOVED"),
        before=before,
        after=after,
        target_anchors=(),
        expected=(),
    )


def _document_reassigned() -> EvalCase:
    before = base_snapshot()
    after = _evolve(
        before,
        documents=_swap(before.documents, "d-staff", position=(1300.0, 200.0)),
    )
    return EvalCase(
        id="document_reassigned",
        title="Dragging a document between groups moves its sentence",
        kinds=("DOCUMENT_REASSIGNED",),
        before=before,
        after=after,
        target_anchors=("f-ops", "f-safety"),
        expected=(
            {"type": "sentence_removed", "component": "f-ops", "text": "Staff Rotation"},
            {"type": "sentence_contains", "component": "f-safety", "text": "Staff Rotation"},
        ),
    )


def _frame_reparented_across() -> EvalCase:
    before = base_snapshot()
    dx, dy = 1000.0, 0.0
    after = _evolve(
        before,
        frames=_swap(
            before.frames,
            "f-rides",
            parent="f-vendor",
            position=_shift((1100.0, 100.0), dx, dy),
        ),
        documents=_swap(before.documents, "d-harness", position=_shift((1130.0, 150.0), dx, dy)),
    )
    return EvalCase(
        id="frame_reparented_across",
        title="Moving a subgroup to another parent relocates its material",
        kinds=("DOCUMENT_MOVED", "FRAME_MOVED", "FRAME_REPARENTED"),
        before=before,
        after=after,
        target_anchors=("f-safety", "f-vendor"),
        expected=(
            {"type": "sentence_removed", "component": "f-safety", "text": "Ride Checks"},
            {"type": "sentence_removed", "component": "f-safety", "text": "Harness Inspections"},
            {"type": "sentence_contains", "component": "f-vendor", "text": "Ride Checks"},
            {"type": "sentence_contains", "component": "f-vendor", "text": "Harness Inspections"},
            {
                "type": "sentence_contains",
                "component": "f-vendor",
                "text": "cluster groups 2 document(s)",
            },
        ),
    )


def _frame_reparented_promoted() -> EvalCase:
    before = base_snapshot()
    dx, dy = 1900.0, 900.0
    after = _evolve(
        before,
        frames=_swap(
            before.frames,
            "f-rides",
            parent=None,
            position=_shift((1100.0, 100.0), dx, dy),
        ),
        documents=_swap(before.documents, "d-harness", position=_shift((1130.0, 150.0), dx, dy)),
    )
    return EvalCase(
        id="frame_reparented_promoted",
        title="Promoting a subgroup to top level earns it a paragraph",
        kinds=("DOCUMENT_MOVED", "FRAME_MOVED", "FRAME_REPARENTED"),
        before=before,
        after=after,
        target_anchors=("f-safety", "f-rides"),
        expected=(
            {"type": "paragraph_added", "anchor": "f-rides"},
            {"type": "sentence_removed", "component": "f-safety", "text": "Ride Checks"},
            {"type": "sentence_contains", "component": "f-rides", "text": "Harness Inspections"},
        ),
    )


def _task_changed() -> EvalCase:
    before = base_snapshot()
    new_task = "Brief the insurance carrier on open operational risks."
    after = _evolve(
        before,
        prompt_settings=replace(before.prompt_settings, task_description=new_task),
    )
    return EvalCase(
        id="task_changed",
        title="A new task description reframes the summary only",
        kinds=(),
        before=before,
        after=after,
        target_anchors=("summary",),
        expected=(
            {"type": "sentence_contains", "component": "summary", "text": new_task},
        ),
    )


def _components_reordered() -> EvalCase:
    before = base_snapshot()
    reordered = (
        ComponentSpec("Findings", KIND_BODY),
        ComponentSpec("Summary", KIND_SUMMARY),
        ComponentSpec("Outlook", KIND_CONCLUSION),
    )
    after = _evolve(
        before,
        prompt_settings=replace(before.prompt_settings, components=reordered),
    )
    return EvalCase(
        id="components_reordered",
        title="Reordering sections moves components without rewriting them",
        kinds=(),
        before=before,
        after=after,
        target_anchors=(),
        expected=(
            {
                "type": "component_order",
                "labels": ["f-ops", "f-safety", "f-vendor", "unassigned", "summary", "conclusion"],
            },
        ),
    )


def _conclusion_dropped() -> EvalCase:
    before = base_snapshot()
    trimmed = (
        ComponentSpec("Summary", KIND_SUMMARY),
        ComponentSpec("Findings", KIND_BODY),
    )
    after = _evolve(
        before,
        prompt_settings=replace(before.prompt_settings, components=trimmed),
    )
    return EvalCase(
        id="conclusion_dropped",
        title="Removing the conclusion slot drops that component",
        kinds=(),
        before=before,
        after=after,
        target_anchors=("conclusion",),
        expected=({"type": "paragraph_removed", "anchor": "conclusion"},),
    )
