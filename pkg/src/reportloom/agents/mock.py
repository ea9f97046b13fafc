"""Deterministic rule backend.

Implements all four completion schemas with closed-form rules so the full
pipeline runs offline, in tests, and in the evaluation harness without a
model in the loop.  Everything here is a pure function of the request
payload; two identical requests always produce byte-identical replies.

Text is produced from a small set of sentence templates.  The same templates
are what plan execution matches against, so instructions authored by the
inference rules can be applied literally:

* ``insert`` appends the instruction verbatim as a new sentence,
* ``delete`` drops sentences containing the instruction's first quoted span
  (the quotes included, so substrings of other words never match),
* ``modify`` only acts on the form ``Replace "X" with "Y"`` and rewrites
  quoted occurrences; any other modify instruction is a deliberate no-op,
  which is how layout-only interactions stay acknowledged but inert,
* ``emphasize``/``deemphasize`` manage the emphasis template for the quoted
  detail; ``(emphasis N)`` in the instruction carries the weight,
* ``add_paragraph`` regenerates the targeted section from the context, which
  makes it safe to combine with finer steps on the same target (those are
  subsumed and dropped when plans are assembled).

Known limitation: the summary's group roster sentence goes stale when groups
are added or removed; it refreshes on renames (quoted replace) and on full
regeneration only.
"""

from __future__ import annotations

import json
import re

from ..narrative import (
    UNASSIGNED_ANCHOR,
    UNASSIGNED_HEADING,
    ContextDocument,
    ContextFrame,
    GenerationContext,
    Report,
    context_from_payload,
    report_from_payload,
)
from ..perception import InteractionDelta, InteractionKind, SemanticInteraction, delta_from_payload
from ..workspace import KIND_BODY, KIND_CONCLUSION, KIND_SUMMARY, POLARITY_EMPHASIZE
from .backends import LLMBackend
from .errors import BackendError
from .schemas import (
    GENERATE_SCHEMA,
    INTERACTION_INTENT_SCHEMA,
    REFINE_SCHEMA,
    SYSTEM_INTENT_SCHEMA,
)
from .types import (
    ACTION_ADD_PARAGRAPH,
    ACTION_DEEMPHASIZE,
    ACTION_DELETE,
    ACTION_EMPHASIZE,
    ACTION_INSERT,
    ACTION_MODIFY,
    ACTION_RELOCATE,
    ACTION_REMOVE_PARAGRAPH,
    ACTION_RENAME_HEADING,
    LLMRequest,
    LLMResponse,
    PROMPT_SOURCE,
    TARGET_CONCLUSION,
    TARGET_STRUCTURE,
    TARGET_SUMMARY,
)

_QUOTED = re.compile(r'"([^"]+)"')
_REPLACE = re.compile(r'Replace "([^"]+)" with "([^"]+)"')
_EMPHASIS_WEIGHT = re.compile(r"\(emphasis (\d+)\)")

_EMPHASIS_CAP = 2  # repeated mentions saturate; see emphasis_sentence


# ---------------------------------------------------------------------------
# sentence templates


def summary_lead(task_description: str, fingerprint: str) -> str:
    return f"This report addresses: {task_description} (workspace {fingerprint})."


def paragraph_lead(name: str, document_count: int, fingerprint: str) -> str:
    return f'The "{name}" cluster groups {document_count} document(s) (workspace {fingerprint}).'


def unassigned_lead(document_count: int, fingerprint: str) -> str:
    return f"Unassigned material spans {document_count} document(s) (workspace {fingerprint})."


def conclusion_sentence(fingerprint: str) -> str:
    return (
        "In sum, the grouped evidence reflects the current workspace "
        f"organization (workspace {fingerprint})."
    )


def document_sentence(doc: ContextDocument) -> str:
    body = doc.body.strip()
    if body and body[-1] not in ".!?":
        body += "."
    return f'The record "{doc.title}" notes: {body}'


def note_sentence(text: str) -> str:
    return f'A workspace note adds: "{text}".'


def subgroup_sentence(name: str) -> str:
    return f'Subgroup "{name}" refines this cluster.'


def emphasis_sentence(text: str, count: int) -> str:
    weight = min(max(count, 1), _EMPHASIS_CAP)
    base = f'The detail "{text}" stands out in this cluster'
    if weight == 1:
        return base + "."
    return base + f', and "{text}" recurs across the sources.'


def _emphasis_prefix(text: str) -> str:
    return f'The detail "{text}"'


def _content_sentences(frame: ContextFrame) -> list[str]:
    out = [document_sentence(d) for d in frame.documents]
    for d in frame.documents:
        for h in d.highlights:
            if h.polarity == POLARITY_EMPHASIZE:
                out.append(emphasis_sentence(h.text, h.count))
    out.extend(note_sentence(n.text) for n in frame.notes)
    return out


def _descend_sentences(frame: ContextFrame) -> list[str]:
    out: list[str] = []
    for child in frame.children:
        out.append(subgroup_sentence(child.name))
        out.extend(_content_sentences(child))
        out.extend(_descend_sentences(child))
    return out


def _subtree_documents(frame: ContextFrame) -> list[ContextDocument]:
    docs = list(frame.documents)
    for child in frame.children:
        docs.extend(_subtree_documents(child))
    return docs


def _subtree_notes(frame: ContextFrame) -> list:
    notes = list(frame.notes)
    for child in frame.children:
        notes.extend(_subtree_notes(child))
    return notes


def _nested_frames(frame: ContextFrame) -> list[ContextFrame]:
    out: list[ContextFrame] = []
    for child in frame.children:
        out.append(child)
        out.extend(_nested_frames(child))
    return out


def body_sentences(frame: ContextFrame, fingerprint: str) -> list[str]:
    total = len(_subtree_documents(frame))
    sentences = [paragraph_lead(frame.name, total, fingerprint)]
    sentences.extend(_content_sentences(frame))
    sentences.extend(_descend_sentences(frame))
    return sentences


def unassigned_sentences(context: GenerationContext) -> list[str]:
    out = [unassigned_lead(len(context.unassigned_documents), context.fingerprint)]
    out.extend(document_sentence(d) for d in context.unassigned_documents)
    for d in context.unassigned_documents:
        for h in d.highlights:
            if h.polarity == POLARITY_EMPHASIZE:
                out.append(emphasis_sentence(h.text, h.count))
    out.extend(note_sentence(n.text) for n in context.unassigned_notes)
    return out


def summary_sentences(context: GenerationContext) -> list[str]:
    out = [summary_lead(context.task_description, context.fingerprint)]
    if context.frames:
        names = ", ".join(f'"{f.name}"' for f in context.frames)
        out.append(f"It spans {len(context.frames)} group(s): {names}.")
    else:
        out.append("It spans no groups yet.")
    if context.unassigned_documents:
        out.append(
            f"{len(context.unassigned_documents)} document(s) remain outside any group."
        )
    return out


def _body_component(frame: ContextFrame, fingerprint: str) -> dict:
    return {
        "kind": KIND_BODY,
        "anchor": frame.id,
        "heading": frame.name,
        "sentences": body_sentences(frame, fingerprint),
    }


def _unassigned_component(context: GenerationContext) -> dict:
    return {
        "kind": KIND_BODY,
        "anchor": UNASSIGNED_ANCHOR,
        "heading": UNASSIGNED_HEADING,
        "sentences": unassigned_sentences(context),
    }


def generate_components(context: GenerationContext) -> list[dict]:
    components: list[dict] = []
    for spec in context.components:
        if spec.kind == KIND_SUMMARY:
            components.append(
                {
                    "kind": KIND_SUMMARY,
                    "anchor": None,
                    "heading": spec.name,
                    "sentences": summary_sentences(context),
                }
            )
        elif spec.kind == KIND_BODY:
            components.extend(_body_component(f, context.fingerprint) for f in context.frames)
            if context.unassigned_documents or context.unassigned_notes:
                components.append(_unassigned_component(context))
        else:
            components.append(
                {
                    "kind": KIND_CONCLUSION,
                    "anchor": None,
                    "heading": spec.name,
                    "sentences": [conclusion_sentence(context.fingerprint)],
                }
            )
    return components


# ---------------------------------------------------------------------------
# interaction -> plan rules

_KIND_PHRASES = {
    InteractionKind.FRAME_ADDED: "a new group",
    InteractionKind.FRAME_REMOVED: "a dissolved group",
    InteractionKind.FRAME_RENAMED: "a renamed group",
    InteractionKind.FRAME_MOVED: "a repositioned group",
    InteractionKind.FRAME_REPARENTED: "a regrouped cluster",
    InteractionKind.DOCUMENT_REASSIGNED: "a relocated document",
    InteractionKind.DOCUMENT_MOVED: "a repositioned document",
    InteractionKind.NOTE_ADDED: "a new note",
    InteractionKind.NOTE_REMOVED: "a removed note",
    InteractionKind.NOTE_EDITED: "an edited note",
    InteractionKind.NOTE_REASSIGNED: "a relocated note",
    InteractionKind.HIGHLIGHT_ADDED: "a new highlight",
    InteractionKind.HIGHLIGHT_REMOVED: "a removed highlight",
    InteractionKind.HIGHLIGHT_COUNT_EDITED: "an adjusted highlight weight",
    InteractionKind.HIGHLIGHT_POLARITY_TOGGLED: "a flipped highlight polarity",
}

_PARAGRAPH_ACTIONS = (ACTION_ADD_PARAGRAPH, ACTION_REMOVE_PARAGRAPH)


class _ContextIndex:
    """Lookup tables over the current context plus the delta's record of
    frames that no longer exist (their old parents matter when cleaning up)."""

    def __init__(self, context: GenerationContext, delta: InteractionDelta, report: Report):
        self.context = context
        self.main_of: dict[str, str] = {}
        self.frame_by_id: dict[str, ContextFrame] = {}
        self.doc_by_id: dict[str, ContextDocument] = {}
        self.doc_main: dict[str, str | None] = {}
        self.note_text: dict[str, str] = {}
        self.note_main: dict[str, str | None] = {}
        self.hl_by_id: dict[str, tuple[str, int, str, str]] = {}  # text, count, polarity, doc
        for frame in context.frames:
            self._walk(frame, frame.id)
        for d in context.unassigned_documents:
            self._index_doc(d, None)
        for n in context.unassigned_notes:
            self.note_text[n.id] = n.text
            self.note_main[n.id] = None
        self.report_labels = {c.label() for c in report.components}
        self.report = report
        # Old parent of frames removed or detached this delta, for resolving
        # where their content used to be narrated.
        self.gone_parent: dict[str, str | None] = {}
        for inter in delta.interactions:
            if inter.kind in (InteractionKind.FRAME_REMOVED, InteractionKind.FRAME_REPARENTED):
                self.gone_parent[inter.subject] = (inter.before or {}).get("parent")

    def _walk(self, frame: ContextFrame, main_id: str) -> None:
        self.main_of[frame.id] = main_id
        self.frame_by_id[frame.id] = frame
        for d in frame.documents:
            self._index_doc(d, main_id)
        for n in frame.notes:
            self.note_text[n.id] = n.text
            self.note_main[n.id] = main_id
        for child in frame.children:
            self._walk(child, main_id)

    def _index_doc(self, doc: ContextDocument, main_id: str | None) -> None:
        self.doc_by_id[doc.id] = doc
        self.doc_main[doc.id] = main_id
        for h in doc.highlights:
            self.hl_by_id[h.id] = (h.text, h.count, h.polarity, doc.id)

    def current_anchor(self, owner: str | None) -> str:
        """Narrative anchor for a frame id taken from a current-side payload."""
        if owner is None:
            return UNASSIGNED_ANCHOR
        return self.main_of.get(owner, UNASSIGNED_ANCHOR)

    def old_anchor(self, owner: str | None) -> str | None:
        """Best-effort anchor for a previous-side owner; None when the trail
        is cold (the caller falls back to scanning the report)."""
        if owner is None:
            return UNASSIGNED_ANCHOR if UNASSIGNED_ANCHOR in self.report_labels else None
        seen: set[str] = set()
        cursor: str | None = owner
        while cursor is not None and cursor not in seen:
            seen.add(cursor)
            if cursor in self.main_of:
                return self.main_of[cursor]
            if cursor in self.report_labels:
                return cursor
            if cursor not in self.gone_parent:
                return None
            cursor = self.gone_parent[cursor]
        return None

    def anchors_mentioning(self, quoted: str) -> list[str]:
        needle = f'"{quoted}"'
        return [
            c.label()
            for c in self.report.components
            if any(needle in s for s in c.sentences)
        ]

    def has_unassigned_paragraph(self) -> bool:
        return UNASSIGNED_ANCHOR in self.report_labels

    def section_name(self, anchor_key: str) -> str:
        for c in self.report.components:
            if c.label() == anchor_key:
                return c.heading
        frame = self.frame_by_id.get(anchor_key)
        if frame is not None:
            return frame.name
        if anchor_key == UNASSIGNED_ANCHOR:
            return UNASSIGNED_HEADING
        return anchor_key.capitalize()


def _step(target: str, action: str, instruction: str) -> dict:
    return {"target": target, "action": action, "instruction": instruction}


def _noop(target: str, reason: str) -> dict:
    # A modify without the Replace form never changes text; it records that
    # the interaction was considered and found to carry no narrative intent.
    return _step(target, ACTION_MODIFY, reason)


def _arrival_steps(index: _ContextIndex, anchor: str, sentence: str) -> list[dict]:
    """Insert a sentence at ``anchor``, materializing the unassigned section
    first when content lands outside every group and no such section exists."""
    if anchor == UNASSIGNED_ANCHOR and not index.has_unassigned_paragraph():
        return [
            _step(
                UNASSIGNED_ANCHOR,
                ACTION_ADD_PARAGRAPH,
                "Collect material that sits outside every group into its own section.",
            )
        ]
    return [_step(anchor, ACTION_INSERT, sentence)]


def _departure_steps(
    index: _ContextIndex, old_anchor: str | None, quoted: str, instruction: str
) -> list[dict]:
    anchors = [old_anchor] if old_anchor is not None else index.anchors_mentioning(quoted)
    return [_step(a, ACTION_DELETE, instruction) for a in anchors]


def _rule_frame_added(inter: SemanticInteraction, index: _ContextIndex):
    after = inter.after or {}
    name = after.get("name", inter.subject)
    if after.get("parent") is None:
        return inter.subject, [
            _step(
                inter.subject,
                ACTION_ADD_PARAGRAPH,
                f'Write a paragraph for the new group "{name}".',
            )
        ]
    anchor = index.current_anchor(after.get("parent"))
    return anchor, [_step(anchor, ACTION_INSERT, subgroup_sentence(name))]


def _rule_frame_removed(inter: SemanticInteraction, index: _ContextIndex):
    before = inter.before or {}
    name = before.get("name", inter.subject)
    if inter.subject in index.report_labels:
        return inter.subject, [
            _step(
                inter.subject,
                ACTION_REMOVE_PARAGRAPH,
                f'Remove the paragraph for the dissolved group "{name}".',
            )
        ]
    old = index.old_anchor(before.get("parent"))
    steps = _departure_steps(index, old, name, f'Remove the subgroup mention "{name}".')
    return old or TARGET_SUMMARY, steps


def _rule_frame_renamed(inter: SemanticInteraction, index: _ContextIndex):
    old_name = (inter.before or {}).get("name", "")
    new_name = (inter.after or {}).get("name", "")
    is_main = index.main_of.get(inter.subject) == inter.subject
    if is_main or inter.subject in index.report_labels:
        steps = [
            _step(
                inter.subject,
                ACTION_RENAME_HEADING,
                f'Rename this section to "{new_name}".',
            ),
            _step(
                inter.subject,
                ACTION_MODIFY,
                f'Replace "{old_name}" with "{new_name}" in the paragraph text.',
            ),
        ]
        roster_mentions = any(
            f'"{old_name}"' in s
            for c in index.report.components
            if c.label() == TARGET_SUMMARY
            for s in c.sentences
        )
        if roster_mentions:
            steps.append(
                _step(
                    TARGET_SUMMARY,
                    ACTION_MODIFY,
                    f'Replace "{old_name}" with "{new_name}" to track the renamed group.',
                )
            )
        return inter.subject, steps
    anchor = index.current_anchor(inter.subject)
    return anchor, [
        _step(
            anchor,
            ACTION_MODIFY,
            f'Replace "{old_name}" with "{new_name}" to track the renamed subgroup.',
        )
    ]


def _rule_frame_moved(inter: SemanticInteraction, index: _ContextIndex):
    anchor = index.current_anchor(inter.subject)
    return anchor, [_noop(anchor, "Layout-only change; keep this section unchanged.")]


def _rule_frame_reparented(inter: SemanticInteraction, index: _ContextIndex):
    frame = index.frame_by_id.get(inter.subject)
    new_anchor = index.current_anchor(inter.subject)
    old_parent = (inter.before or {}).get("parent")
    old_anchor = inter.subject if old_parent is None else index.old_anchor(old_parent)
    name = frame.name if frame is not None else inter.subject
    steps: list[dict] = []
    if old_anchor == inter.subject and new_anchor != inter.subject:
        # Demoted from a top-level group: its own section folds away.
        steps.append(
            _step(
                inter.subject,
                ACTION_REMOVE_PARAGRAPH,
                f'Fold the former group "{name}" into its new parent.',
            )
        )
    elif old_anchor is not None and old_anchor != new_anchor:
        steps.append(
            _step(old_anchor, ACTION_DELETE, f'Remove the subgroup mention "{name}".')
        )
        if frame is not None:
            for nested in _nested_frames(frame):
                steps.append(
                    _step(
                        old_anchor,
                        ACTION_DELETE,
                        f'Remove the subgroup mention "{nested.name}".',
                    )
                )
            for doc in _subtree_documents(frame):
                steps.append(
                    _step(
                        old_anchor,
                        ACTION_DELETE,
                        f'Drop the record "{doc.title}" moved with its subgroup.',
                    )
                )
            for note in _subtree_notes(frame):
                steps.append(
                    _step(
                        old_anchor,
                        ACTION_DELETE,
                        f'Drop the note "{note.text}" moved with its subgroup.',
                    )
                )
            for doc in _subtree_documents(frame):
                for h in doc.highlights:
                    steps.append(
                        _step(
                            old_anchor,
                            ACTION_DELETE,
                            f'Drop the detail mention "{h.text}" moved with its subgroup.',
                        )
                    )
    target_name = index.section_name(new_anchor)
    steps.append(
        _step(
            new_anchor,
            ACTION_ADD_PARAGRAPH,
            f'Regroup "{name}" under the "{target_name}" section.',
        )
    )
    return new_anchor, steps


def _rule_document_reassigned(inter: SemanticInteraction, index: _ContextIndex):
    doc = index.doc_by_id.get(inter.subject)
    title = doc.title if doc is not None else inter.subject
    old = index.old_anchor((inter.before or {}).get("owner"))
    new = index.current_anchor((inter.after or {}).get("owner"))
    if old == new:
        return new, [
            _noop(new, f'The record "{title}" stays within this group; no text change.')
        ]
    steps = _departure_steps(
        index, old, title, f'Drop the relocated record "{title}" from this section.'
    )
    if doc is not None:
        steps.extend(_arrival_steps(index, new, document_sentence(doc)))
    return new, steps


def _rule_document_moved(inter: SemanticInteraction, index: _ContextIndex):
    anchor = index.doc_main.get(inter.subject) or UNASSIGNED_ANCHOR
    if anchor == UNASSIGNED_ANCHOR and not index.has_unassigned_paragraph():
        anchor = TARGET_SUMMARY
    return anchor, [_noop(anchor, "Position change only; keep the narrative as is.")]


def _rule_note_added(inter: SemanticInteraction, index: _ContextIndex):
    after = inter.after or {}
    text = after.get("text", "")
    anchor = index.current_anchor(after.get("owner"))
    return anchor, _arrival_steps(index, anchor, note_sentence(text))


def _rule_note_removed(inter: SemanticInteraction, index: _ContextIndex):
    before = inter.before or {}
    text = before.get("text", "")
    old = index.old_anchor(before.get("owner"))
    steps = _departure_steps(index, old, text, f'Remove the note "{text}" from this section.')
    return old or TARGET_SUMMARY, steps


def _rule_note_edited(inter: SemanticInteraction, index: _ContextIndex):
    old_text = (inter.before or {}).get("text", "")
    new_text = (inter.after or {}).get("text", "")
    anchor = index.note_main.get(inter.subject) or UNASSIGNED_ANCHOR
    if anchor == UNASSIGNED_ANCHOR and not index.has_unassigned_paragraph():
        anchor = TARGET_SUMMARY
    return anchor, [
        _step(
            anchor,
            ACTION_MODIFY,
            f'Replace "{old_text}" with "{new_text}" in the noted guidance.',
        )
    ]


def _rule_note_reassigned(inter: SemanticInteraction, index: _ContextIndex):
    text = index.note_text.get(inter.subject, "")
    old = index.old_anchor((inter.before or {}).get("owner"))
    new = index.current_anchor((inter.after or {}).get("owner"))
    if old == new:
        return new, [_noop(new, f'The note "{text}" stays within this group; no text change.')]
    steps = _departure_steps(
        index, old, text, f'Remove the note "{text}" from its former section.'
    )
    steps.extend(_arrival_steps(index, new, note_sentence(text)))
    return new, steps


def _highlight_anchor(index: _ContextIndex, document_id: str) -> str:
    if document_id in index.doc_main:
        anchor = index.doc_main[document_id] or UNASSIGNED_ANCHOR
    else:
        anchor = UNASSIGNED_ANCHOR
    if anchor == UNASSIGNED_ANCHOR and not index.has_unassigned_paragraph():
        return TARGET_SUMMARY
    return anchor


def _rule_highlight_added(inter: SemanticInteraction, index: _ContextIndex):
    after = inter.after or {}
    text = after.get("text", "")
    anchor = _highlight_anchor(index, after.get("document", ""))
    if after.get("polarity") == POLARITY_EMPHASIZE:
        count = int(after.get("count", 1))
        return anchor, [
            _step(
                anchor,
                ACTION_EMPHASIZE,
                f'Emphasize the detail "{text}" (emphasis {count}).',
            )
        ]
    return anchor, [
        _step(anchor, ACTION_DEEMPHASIZE, f'Keep the detail "{text}" out of emphasis.')
    ]


def _rule_highlight_removed(inter: SemanticInteraction, index: _ContextIndex):
    before = inter.before or {}
    text = before.get("text", "")
    anchor = _highlight_anchor(index, before.get("document", ""))
    return anchor, [
        _step(anchor, ACTION_DEEMPHASIZE, f'Remove the emphasis on "{text}".')
    ]


def _rule_highlight_count(inter: SemanticInteraction, index: _ContextIndex):
    info = index.hl_by_id.get(inter.subject)
    if info is None:
        return TARGET_SUMMARY, [_noop(TARGET_SUMMARY, "Highlight no longer present; nothing to adjust.")]
    text, _, polarity, doc_id = info
    anchor = _highlight_anchor(index, doc_id)
    count = int((inter.after or {}).get("count", 1))
    if polarity == POLARITY_EMPHASIZE:
        return anchor, [
            _step(
                anchor,
                ACTION_EMPHASIZE,
                f'Adjust the emphasis of "{text}" (emphasis {count}).',
            )
        ]
    return anchor, [_noop(anchor, f'The detail "{text}" stays rejected; no text change.')]


def _rule_highlight_polarity(inter: SemanticInteraction, index: _ContextIndex):
    info = index.hl_by_id.get(inter.subject)
    if info is None:
        return TARGET_SUMMARY, [_noop(TARGET_SUMMARY, "Highlight no longer present; nothing to toggle.")]
    text, count, _, doc_id = info
    anchor = _highlight_anchor(index, doc_id)
    if (inter.after or {}).get("polarity") == POLARITY_EMPHASIZE:
        return anchor, [
            _step(
                anchor,
                ACTION_EMPHASIZE,
                f'Emphasize the detail "{text}" (emphasis {count}).',
            )
        ]
    return anchor, [
        _step(anchor, ACTION_DEEMPHASIZE, f'Exclude the detail "{text}" from emphasis.')
    ]


_RULES = {
    InteractionKind.FRAME_ADDED: _rule_frame_added,
    InteractionKind.FRAME_REMOVED: _rule_frame_removed,
    InteractionKind.FRAME_RENAMED: _rule_frame_renamed,
    InteractionKind.FRAME_MOVED: _rule_frame_moved,
    InteractionKind.FRAME_REPARENTED: _rule_frame_reparented,
    InteractionKind.DOCUMENT_REASSIGNED: _rule_document_reassigned,
    InteractionKind.DOCUMENT_MOVED: _rule_document_moved,
    InteractionKind.NOTE_ADDED: _rule_note_added,
    InteractionKind.NOTE_REMOVED: _rule_note_removed,
    InteractionKind.NOTE_EDITED: _rule_note_edited,
    InteractionKind.NOTE_REASSIGNED: _rule_note_reassigned,
    InteractionKind.HIGHLIGHT_ADDED: _rule_highlight_added,
    InteractionKind.HIGHLIGHT_REMOVED: _rule_highlight_removed,
    InteractionKind.HIGHLIGHT_COUNT_EDITED: _rule_highlight_count,
    InteractionKind.HIGHLIGHT_POLARITY_TOGGLED: _rule_highlight_polarity,
}


def _dedup_steps(steps: list[dict]) -> list[dict]:
    """Drop fine-grained steps on targets that get regenerated or removed
    wholesale, then collapse exact duplicates (first occurrence wins)."""
    paragraph_targets = {s["target"] for s in steps if s["action"] in _PARAGRAPH_ACTIONS}
    out: list[dict] = []
    seen: set[tuple[str, str, str]] = set()
    for s in steps:
        if s["action"] not in _PARAGRAPH_ACTIONS and s["target"] in paragraph_targets:
            continue
        key = (s["target"], s["action"], s["instruction"])
        if key in seen:
            continue
        seen.add(key)
        out.append(s)
    return out or steps[:1]


def infer_interactions_payload(payload: dict) -> list[dict]:
    delta = delta_from_payload(payload["delta"])
    context = context_from_payload(payload["context"])
    report = report_from_payload(payload["report"])
    index = _ContextIndex(context, delta, report)

    groups: dict[str, dict] = {}
    for inter in delta.interactions:
        anchor_key, steps = _RULES[inter.kind](inter, index)
        group = groups.setdefault(anchor_key, {"orders": [], "kinds": [], "steps": []})
        group["orders"].append(inter.order)
        group["kinds"].append(inter.kind)
        group["steps"].extend((inter.order, s) for s in steps)

    inferences = []
    for anchor_key, group in sorted(groups.items(), key=lambda kv: min(kv[1]["orders"])):
        ordered = [s for _, s in sorted(group["steps"], key=lambda pair: pair[0])]
        phrases = sorted({_KIND_PHRASES[k] for k in group["kinds"]})
        section = index.section_name(anchor_key)
        inferences.append(
            {
                "source": sorted(group["orders"]),
                "why": (
                    f"The user signalled {', '.join(phrases)} around "
                    f'"{section}"; update that part of the report.'
                ),
                "plan": _dedup_steps(ordered),
            }
        )
    return inferences


# ---------------------------------------------------------------------------
# settings -> plan rules


def infer_system_payload(payload: dict) -> list[dict]:
    adj = payload["adjustment"]
    steps: list[dict] = []
    why_parts: list[str] = []
    if adj.get("task_description_changed"):
        _, new_task = adj["task_description_changed"]
        steps.append(
            _step(
                TARGET_STRUCTURE,
                ACTION_MODIFY,
                f'Reframe the report for the revised task: "{new_task}".',
            )
        )
        why_parts.append("the task description changed")
    if adj.get("components_changed"):
        old_list = [tuple(c) for c in adj["components_changed"][0]]
        new_list = [tuple(c) for c in adj["components_changed"][1]]
        old_kinds = {kind for _, kind in old_list}
        new_kinds = {kind for _, kind in new_list}
        for idx, (name, kind) in enumerate(new_list):
            if idx >= len(old_list) or old_list[idx] != (name, kind):
                if kind == KIND_CONCLUSION and kind not in old_kinds:
                    steps.append(
                        _step(
                            TARGET_CONCLUSION,
                            ACTION_ADD_PARAGRAPH,
                            f'Add a closing "{name}" section.',
                        )
                    )
                    continue
                target = kind if kind in (KIND_SUMMARY, KIND_CONCLUSION) else TARGET_STRUCTURE
                steps.append(
                    _step(
                        target,
                        ACTION_RELOCATE,
                        f'Place the "{name}" section at position {idx + 1}.',
                    )
                )
        if KIND_CONCLUSION in old_kinds and KIND_CONCLUSION not in new_kinds:
            steps.append(
                _step(
                    TARGET_CONCLUSION,
                    ACTION_REMOVE_PARAGRAPH,
                    "Drop the closing section; the layout no longer asks for one.",
                )
            )
        why_parts.append("the section layout changed")
    if not steps:
        steps.append(_noop(TARGET_SUMMARY, "Settings change carries no narrative effect."))
        why_parts.append("the model settings changed")
    return [
        {
            "source": PROMPT_SOURCE,
            "why": f"The prompt settings changed: {'; '.join(why_parts)}.",
            "plan": steps,
        }
    ]


# ---------------------------------------------------------------------------
# plan execution


def _find_component(components: list[dict], target: str) -> dict | None:
    if target in (KIND_SUMMARY, KIND_CONCLUSION):
        for c in components:
            if c["kind"] == target:
                return c
        return None
    for c in components:
        if c["kind"] == KIND_BODY and c["anchor"] == target:
            return c
    return None


def _first_quoted(text: str) -> str | None:
    m = _QUOTED.search(text)
    return m.group(1) if m else None


def _regenerated_component(context: GenerationContext, target: str) -> dict | None:
    if target == UNASSIGNED_ANCHOR:
        return _unassigned_component(context)
    if target == KIND_CONCLUSION:
        for spec in context.components:
            if spec.kind == KIND_CONCLUSION:
                return {
                    "kind": KIND_CONCLUSION,
                    "anchor": None,
                    "heading": spec.name,
                    "sentences": [conclusion_sentence(context.fingerprint)],
                }
        return None
    for frame in context.frames:
        if frame.id == target:
            return _body_component(frame, context.fingerprint)
    return None


def _apply_step(components: list[dict], step: dict, context: GenerationContext) -> None:
    target, action, instruction = step["target"], step["action"], step["instruction"]
    if action == ACTION_RELOCATE:
        return  # ordering is canonicalized downstream
    if action == ACTION_ADD_PARAGRAPH:
        built = _regenerated_component(context, target)
        if built is None:
            return
        existing = _find_component(components, target)
        if existing is not None:
            existing.update(built)
        else:
            components.append(built)
        return
    if action == ACTION_REMOVE_PARAGRAPH:
        if target in (KIND_SUMMARY, KIND_CONCLUSION):
            components[:] = [c for c in components if c["kind"] != target]
        else:
            components[:] = [
                c
                for c in components
                if not (c["kind"] == KIND_BODY and c["anchor"] == target)
            ]
        return
    if action == ACTION_MODIFY and target == TARGET_STRUCTURE:
        summary = _find_component(components, KIND_SUMMARY)
        if summary is not None:
            lead = summary_lead(context.task_description, context.fingerprint)
            if summary["sentences"]:
                summary["sentences"][0] = lead
            else:
                summary["sentences"].append(lead)
        return

    component = _find_component(components, target)
    if component is None:
        return
    if action == ACTION_INSERT:
        component["sentences"].append(instruction)
    elif action == ACTION_DELETE:
        quoted = _first_quoted(instruction)
        if quoted:
            needle = f'"{quoted}"'
            component["sentences"] = [s for s in component["sentences"] if needle not in s]
    elif action == ACTION_DEEMPHASIZE:
        quoted = _first_quoted(instruction)
        if quoted:
            prefix = _emphasis_prefix(quoted)
            component["sentences"] = [
                s for s in component["sentences"] if not s.startswith(prefix)
            ]
    elif action == ACTION_EMPHASIZE:
        quoted = _first_quoted(instruction)
        if quoted:
            weight_match = _EMPHASIS_WEIGHT.search(instruction)
            count = int(weight_match.group(1)) if weight_match else 1
            prefix = _emphasis_prefix(quoted)
            component["sentences"] = [
                s for s in component["sentences"] if not s.startswith(prefix)
            ]
            component["sentences"].append(emphasis_sentence(quoted, count))
    elif action == ACTION_MODIFY:
        replace = _REPLACE.search(instruction)
        if replace:
            old, new = replace.group(1), replace.group(2)
            component["sentences"] = [
                s.replace(f'"{old}"', f'"{new}"') for s in component["sentences"]
            ]
    elif action == ACTION_RENAME_HEADING:
        quoted = _first_quoted(instruction)
        if quoted:
            component["heading"] = quoted


def refine_components(payload: dict) -> list[dict]:
    context = context_from_payload(payload["context"])
    components = [
        {**c, "sentences": list(c["sentences"])} for c in payload["report"]["components"]
    ]
    for inference in payload["inferences"]:
        for step in inference["plan"]:
            _apply_step(components, step, context)
    return components


# ---------------------------------------------------------------------------
# backend


class RuleBackend(LLMBackend):
    """Offline stand-in for a hosted model; see module docstring."""

    def complete(self, request: LLMRequest) -> LLMResponse:
        payload = self._payload_from(request)
        if request.schema_id == GENERATE_SCHEMA:
            result = {"components": generate_components(context_from_payload(payload["context"]))}
        elif request.schema_id == INTERACTION_INTENT_SCHEMA:
            result = {"inferences": infer_interactions_payload(payload)}
        elif request.schema_id == SYSTEM_INTENT_SCHEMA:
            result = {"inferences": infer_system_payload(payload)}
        elif request.schema_id == REFINE_SCHEMA:
            result = {"components": refine_components(payload)}
        else:
            raise BackendError(f"rule backend does not handle schema {request.schema_id!r}")
        raw = json.dumps(result, sort_keys=True)
        prompt_chars = sum(len(m.content) for m in request.messages)
        return LLMResponse(
            payload=result,
            raw_text=raw,
            prompt_tokens=prompt_chars // 4,
            completion_tokens=len(raw) // 4,
        )

    @staticmethod
    def _payload_from(request: LLMRequest) -> dict:
        # The task payload is the first user message; later user messages are
        # corrective notes from validation retries.
        for message in request.messages:
            if message.role != "user":
                continue
            try:
                parsed = json.loads(message.content)
            except json.JSONDecodeError:
                continue
            if isinstance(parsed, dict):
                return parsed
        raise BackendError("request carries no JSON task payload")
