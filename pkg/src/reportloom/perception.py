"""Typed deltas between workspace snapshots.

``perceive`` compares two snapshots of the same session and reduces the raw
state change to a small vocabulary of semantic interactions (the fifteen
``InteractionKind`` members) plus an optional prompt adjustment. ``apply``
replays a delta onto the older snapshot and serves as the correctness oracle:
for any change expressible in the vocabulary,
``apply(prev, perceive(prev, curr))`` is semantically equal to ``curr``.

Two classes of change are deliberately invisible here. Document titles,
bodies and highlight spans are immutable for the lifetime of a session, so
they are never compared. And a move that does not cross a frame boundary is
suppressed when its displacement stays under one workspace unit: that is drag
jitter, not intent. Notes have no same-owner move kind at all; a note's
placement only matters through the frame that owns it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

from .workspace import (
    DocumentCard,
    Frame,
    Highlight,
    Note,
    PromptSettings,
    WorkspaceSnapshot,
    distance,
    resolve_membership,
    settings_from_payload,
    settings_to_payload,
    validate,
)

DELTA_SCHEMA = 1

# Moves below this displacement (same owner, same size) are drag jitter.
JITTER_THRESHOLD = 1.0


class VersionOrderError(ValueError):
    """perceive() requires prev.version < curr.version."""


class ConflictError(ValueError):
    """A delta references entities the base snapshot does not have."""


class InteractionKind(str, Enum):
    FRAME_ADDED = "FRAME_ADDED"
    FRAME_REMOVED = "FRAME_REMOVED"
    FRAME_RENAMED = "FRAME_RENAMED"
    FRAME_MOVED = "FRAME_MOVED"
    FRAME_REPARENTED = "FRAME_REPARENTED"
    DOCUMENT_REASSIGNED = "DOCUMENT_REASSIGNED"
    DOCUMENT_MOVED = "DOCUMENT_MOVED"
    NOTE_ADDED = "NOTE_ADDED"
    NOTE_REMOVED = "NOTE_REMOVED"
    NOTE_EDITED = "NOTE_EDITED"
    NOTE_REASSIGNED = "NOTE_REASSIGNED"
    HIGHLIGHT_ADDED = "HIGHLIGHT_ADDED"
    HIGHLIGHT_REMOVED = "HIGHLIGHT_REMOVED"
    HIGHLIGHT_COUNT_EDITED = "HIGHLIGHT_COUNT_EDITED"
    HIGHLIGHT_POLARITY_TOGGLED = "HIGHLIGHT_POLARITY_TOGGLED"


ADD_KINDS = frozenset(
    {InteractionKind.FRAME_ADDED, InteractionKind.NOTE_ADDED, InteractionKind.HIGHLIGHT_ADDED}
)
REMOVE_KINDS = frozenset(
    {InteractionKind.FRAME_REMOVED, InteractionKind.NOTE_REMOVED, InteractionKind.HIGHLIGHT_REMOVED}
)
REASSIGN_KINDS = frozenset(
    {
        InteractionKind.FRAME_REPARENTED,
        InteractionKind.DOCUMENT_REASSIGNED,
        InteractionKind.NOTE_REASSIGNED,
    }
)
# Everything else carries both a before and an after payload.
EDIT_KINDS = frozenset(InteractionKind) - ADD_KINDS - REMOVE_KINDS - REASSIGN_KINDS

# Agreement with conflict precedence: removals dominate reassignments, which
# dominate edits, which dominate additions.
_CLASS_RANK = {}
for _k in InteractionKind:
    if _k in REMOVE_KINDS:
        _CLASS_RANK[_k] = 0
    elif _k in REASSIGN_KINDS:
        _CLASS_RANK[_k] = 1
    elif _k in EDIT_KINDS:
        _CLASS_RANK[_k] = 2
    else:
        _CLASS_RANK[_k] = 3


@dataclass(frozen=True)
class SemanticInteraction:
    """One perceived user action. Add kinds carry only ``after``, remove
    kinds only ``before``, every other kind carries both. ``order`` is the
    interaction's position in its delta and is the stable handle used by
    intent inference and evaluation markers."""

    kind: InteractionKind
    subject: str
    before: dict | None
    after: dict | None
    order: int


@dataclass(frozen=True)
class PromptAdjustment:
    """Settings changes, kept apart from spatial interactions. Each field is
    an (old, new) pair or None when untouched. A model_config-only change
    reconfigures the backend without implying any narrative intent."""

    task_description_changed: tuple[str, str] | None = None
    components_changed: tuple[tuple, tuple] | None = None
    model_config_changed: tuple[dict, dict] | None = None

    def is_empty(self) -> bool:
        return (
            self.task_description_changed is None
            and self.components_changed is None
            and self.model_config_changed is None
        )

    def has_narrative_change(self) -> bool:
        return self.task_description_changed is not None or self.components_changed is not None


@dataclass(frozen=True)
class InteractionDelta:
    from_version: int
    to_version: int
    interactions: tuple[SemanticInteraction, ...]
    prompt_adjustment: PromptAdjustment | None

    def is_empty(self) -> bool:
        return not self.interactions and self.prompt_adjustment is None


# ---------------------------------------------------------------------------
# payload helpers


def _frame_fields(f: Frame) -> dict:
    return {
        "name": f.name,
        "position": [f.position[0], f.position[1]],
        "size": [f.size[0], f.size[1]],
        "parent": f.parent,
        "created_seq": f.created_seq,
    }


def _note_fields(n: Note, owner: str | None) -> dict:
    return {
        "text": n.text,
        "position": [n.position[0], n.position[1]],
        "size": [n.size[0], n.size[1]],
        "owner": owner,
    }


def _highlight_fields(h: Highlight) -> dict:
    return {
        "document": h.document,
        "span": [h.span[0], h.span[1]],
        "text": h.text,
        "count": h.count,
        "polarity": h.polarity,
    }


def _geometry(position, size) -> dict:
    return {"position": [position[0], position[1]], "size": [size[0], size[1]]}


# ---------------------------------------------------------------------------
# perceive


def perceive(prev: WorkspaceSnapshot, curr: WorkspaceSnapshot) -> InteractionDelta:
    """Minimal explanatory delta between two snapshots of one session.

    Raises :class:`VersionOrderError` unless prev.version < curr.version and
    :class:`workspace.ValidationError` when either snapshot is invalid.
    Interactions are ordered by (class rank, kind, subject id), so two calls
    on equal inputs serialize byte-identically.
    """
    if prev.version >= curr.version:
        raise VersionOrderError(
            f"expected prev.version < curr.version, got {prev.version} >= {curr.version}"
        )
    from .workspace import ValidationError

    for snap, label in ((prev, "prev"), (curr, "curr")):
        violations = validate(snap)
        if violations:
            raise ValidationError([replace(v, subject=f"{label}:{v.subject}") for v in violations])

    own_prev = resolve_membership(prev)
    own_curr = resolve_membership(curr)
    found: list[tuple[InteractionKind, str, dict | None, dict | None]] = []

    prev_frames = {f.id: f for f in prev.frames}
    curr_frames = {f.id: f for f in curr.frames}
    for fid in curr_frames.keys() - prev_frames.keys():
        found.append((InteractionKind.FRAME_ADDED, fid, None, _frame_fields(curr_frames[fid])))
    for fid in prev_frames.keys() - curr_frames.keys():
        found.append((InteractionKind.FRAME_REMOVED, fid, _frame_fields(prev_frames[fid]), None))
    for fid in prev_frames.keys() & curr_frames.keys():
        a, b = prev_frames[fid], curr_frames[fid]
        if a.name != b.name:
            found.append((InteractionKind.FRAME_RENAMED, fid, {"name": a.name}, {"name": b.name}))
        if a.position != b.position or a.size != b.size:
            found.append(
                (
                    InteractionKind.FRAME_MOVED,
                    fid,
                    _geometry(a.position, a.size),
                    _geometry(b.position, b.size),
                )
            )
        if a.parent != b.parent:
            found.append(
                (InteractionKind.FRAME_REPARENTED, fid, {"parent": a.parent}, {"parent": b.parent})
            )

    prev_docs = {d.id: d for d in prev.documents}
    curr_docs = {d.id: d for d in curr.documents}
    for did in prev_docs.keys() & curr_docs.keys():
        a, b = prev_docs[did], curr_docs[did]
        if own_prev[did] != own_curr[did]:
            before = _geometry(a.position, a.size)
            before["owner"] = own_prev[did]
            after = _geometry(b.position, b.size)
            after["owner"] = own_curr[did]
            found.append((InteractionKind.DOCUMENT_REASSIGNED, did, before, after))
        elif a.position != b.position or a.size != b.size:
            if distance(a.position, b.position) >= JITTER_THRESHOLD or a.size != b.size:
                found.append(
                    (
                        InteractionKind.DOCUMENT_MOVED,
                        did,
                        _geometry(a.position, a.size),
                        _geometry(b.position, b.size),
                    )
                )

    prev_notes = {n.id: n for n in prev.notes}
    curr_notes = {n.id: n for n in curr.notes}
    for nid in curr_notes.keys() - prev_notes.keys():
        found.append(
            (InteractionKind.NOTE_ADDED, nid, None, _note_fields(curr_notes[nid], own_curr[nid]))
        )
    for nid in prev_notes.keys() - curr_notes.keys():
        found.append(
            (InteractionKind.NOTE_REMOVED, nid, _note_fields(prev_notes[nid], own_prev[nid]), None)
        )
    for nid in prev_notes.keys() & curr_notes.keys():
        a, b = prev_notes[nid], curr_notes[nid]
        if a.text != b.text:
            found.append((InteractionKind.NOTE_EDITED, nid, {"text": a.text}, {"text": b.text}))
        if own_prev[nid] != own_curr[nid]:
            before = _geometry(a.position, a.size)
            before["owner"] = own_prev[nid]
            after = _geometry(b.position, b.size)
            after["owner"] = own_curr[nid]
            found.append((InteractionKind.NOTE_REASSIGNED, nid, before, after))

    prev_hl = {h.id: h for h in prev.highlights}
    curr_hl = {h.id: h for h in curr.highlights}
    for hid in curr_hl.keys() - prev_hl.keys():
        found.append((InteractionKind.HIGHLIGHT_ADDED, hid, None, _highlight_fields(curr_hl[hid])))
    for hid in prev_hl.keys() - curr_hl.keys():
        found.append((InteractionKind.HIGHLIGHT_REMOVED, hid, _highlight_fields(prev_hl[hid]), None))
    for hid in prev_hl.keys() & curr_hl.keys():
        a, b = prev_hl[hid], curr_hl[hid]
        if a.count != b.count:
            found.append(
                (InteractionKind.HIGHLIGHT_COUNT_EDITED, hid, {"count": a.count}, {"count": b.count})
            )
        if a.polarity != b.polarity:
            found.append(
                (
                    InteractionKind.HIGHLIGHT_POLARITY_TOGGLED,
                    hid,
                    {"polarity": a.polarity},
                    {"polarity": b.polarity},
                )
            )

    found.sort(key=lambda item: (_CLASS_RANK[item[0]], item[0].value, item[1]))
    interactions = tuple(
        SemanticInteraction(kind=k, subject=s, before=b, after=a, order=i)
        for i, (k, s, b, a) in enumerate(found)
    )
    adjustment = _perceive_settings(prev.prompt_settings, curr.prompt_settings)
    return InteractionDelta(
        from_version=prev.version,
        to_version=curr.version,
        interactions=interactions,
        prompt_adjustment=adjustment,
    )


def _perceive_settings(prev: PromptSettings, curr: PromptSettings) -> PromptAdjustment | None:
    task = None
    if prev.task_description != curr.task_description:
        task = (prev.task_description, curr.task_description)
    components = None
    if prev.components != curr.components:
        components = (
            tuple((c.name, c.kind) for c in prev.components),
            tuple((c.name, c.kind) for c in curr.components),
        )
    model = None
    if prev.model_config != curr.model_config:
        prev_payload = settings_to_payload(prev)["model_config"]
        curr_payload = settings_to_payload(curr)["model_config"]
        model = (prev_payload, curr_payload)
    if task is None and components is None and model is None:
        return None
    return PromptAdjustment(
        task_description_changed=task,
        components_changed=components,
        model_config_changed=model,
    )


# ---------------------------------------------------------------------------
# apply


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConflictError(message)


def apply(prev: WorkspaceSnapshot, delta: InteractionDelta) -> WorkspaceSnapshot:
    """Replay ``delta`` on top of ``prev``.

    Raises :class:`ConflictError` when the delta references ids that do not
    exist in ``prev`` (or re-adds ids that already do). The result carries
    ``delta.to_version`` and prev's timestamp; membership needs no explicit
    handling because it is derived from the replayed geometry.
    """
    frames = {f.id: f for f in prev.frames}
    documents = {d.id: d for d in prev.documents}
    highlights = {h.id: h for h in prev.highlights}
    notes = {n.id: n for n in prev.notes}

    for inter in sorted(delta.interactions, key=lambda i: i.order):
        kind, subject = inter.kind, inter.subject
        if kind is InteractionKind.FRAME_ADDED:
            _require(subject not in frames, f"frame {subject!r} already exists")
            a = inter.after or {}
            frames[subject] = Frame(
                id=subject,
                name=a["name"],
                position=(float(a["position"][0]), float(a["position"][1])),
                size=(float(a["size"][0]), float(a["size"][1])),
                parent=a.get("parent"),
                created_seq=int(a["created_seq"]),
            )
        elif kind is InteractionKind.FRAME_REMOVED:
            _require(subject in frames, f"frame {subject!r} does not exist")
            del frames[subject]
        elif kind is InteractionKind.FRAME_RENAMED:
            _require(subject in frames, f"frame {subject!r} does not exist")
            frames[subject] = replace(frames[subject], name=(inter.after or {})["name"])
        elif kind is InteractionKind.FRAME_MOVED:
            _require(subject in frames, f"frame {subject!r} does not exist")
            a = inter.after or {}
            frames[subject] = replace(
                frames[subject],
                position=(float(a["position"][0]), float(a["position"][1])),
                size=(float(a["size"][0]), float(a["size"][1])),
            )
        elif kind is InteractionKind.FRAME_REPARENTED:
            _require(subject in frames, f"frame {subject!r} does not exist")
            frames[subject] = replace(frames[subject], parent=(inter.after or {}).get("parent"))
        elif kind in (InteractionKind.DOCUMENT_REASSIGNED, InteractionKind.DOCUMENT_MOVED):
            _require(subject in documents, f"document {subject!r} does not exist")
            a = inter.after or {}
            documents[subject] = replace(
                documents[subject],
                position=(float(a["position"][0]), float(a["position"][1])),
                size=(float(a["size"][0]), float(a["size"][1])),
            )
        elif kind is InteractionKind.NOTE_ADDED:
            _require(subject not in notes, f"note {subject!r} already exists")
            a = inter.after or {}
            notes[subject] = Note(
                id=subject,
                text=a["text"],
                position=(float(a["position"][0]), float(a["position"][1])),
                size=(float(a["size"][0]), float(a["size"][1])),
            )
        elif kind is InteractionKind.NOTE_REMOVED:
            _require(subject in notes, f"note {subject!r} does not exist")
            del notes[subject]
        elif kind is InteractionKind.NOTE_EDITED:
            _require(subject in notes, f"note {subject!r} does not exist")
            notes[subject] = replace(notes[subject], text=(inter.after or {})["text"])
        elif kind is InteractionKind.NOTE_REASSIGNED:
            _require(subject in notes, f"note {subject!r} does not exist")
            a = inter.after or {}
            notes[subject] = replace(
                notes[subject],
                position=(float(a["position"][0]), float(a["position"][1])),
                size=(float(a["size"][0]), float(a["size"][1])),
            )
        elif kind is InteractionKind.HIGHLIGHT_ADDED:
            _require(subject not in highlights, f"highlight {subject!r} already exists")
            a = inter.after or {}
            _require(a["document"] in documents, f"document {a.get('document')!r} does not exist")
            highlights[subject] = Highlight(
                id=subject,
                document=a["document"],
                span=(int(a["span"][0]), int(a["span"][1])),
                text=a["text"],
                count=int(a["count"]),
                polarity=a["polarity"],
            )
            doc = documents[a["document"]]
            documents[doc.id] = replace(doc, highlights=doc.highlights + (subject,))
        elif kind is InteractionKind.HIGHLIGHT_REMOVED:
            _require(subject in highlights, f"highlight {subject!r} does not exist")
            owner = highlights[subject].document
            del highlights[subject]
            if owner in documents:
                doc = documents[owner]
                documents[owner] = replace(
                    doc, highlights=tuple(h for h in doc.highlights if h != subject)
                )
        elif kind is InteractionKind.HIGHLIGHT_COUNT_EDITED:
            _require(subject in highlights, f"highlight {subject!r} does not exist")
            highlights[subject] = replace(highlights[subject], count=int((inter.after or {})["count"]))
        elif kind is InteractionKind.HIGHLIGHT_POLARITY_TOGGLED:
            _require(subject in highlights, f"highlight {subject!r} does not exist")
            highlights[subject] = replace(highlights[subject], polarity=(inter.after or {})["polarity"])
        else:  # pragma: no cover - the enum is closed
            raise ConflictError(f"unknown interaction kind {kind!r}")

    settings = prev.prompt_settings
    adj = delta.prompt_adjustment
    if adj is not None:
        if adj.task_description_changed is not None:
            settings = replace(settings, task_description=adj.task_description_changed[1])
        if adj.components_changed is not None:
            from .workspace import ComponentSpec

            settings = replace(
                settings,
                components=tuple(ComponentSpec(name, kind) for name, kind in adj.components_changed[1]),
            )
        if adj.model_config_changed is not None:
            from .workspace import ModelConfig

            mc = adj.model_config_changed[1]
            settings = replace(
                settings,
                model_config=ModelConfig(
                    model_name=mc["model_name"],
                    temperature=float(mc["temperature"]),
                    max_tokens=int(mc["max_tokens"]),
                ),
            )

    return WorkspaceSnapshot(
        version=delta.to_version,
        timestamp=prev.timestamp,
        frames=tuple(frames.values()),
        documents=tuple(documents.values()),
        highlights=tuple(highlights.values()),
        notes=tuple(notes.values()),
        prompt_settings=settings,
    )


# ---------------------------------------------------------------------------
# serialization


def interaction_to_payload(inter: SemanticInteraction) -> dict:
    return {
        "order": inter.order,
        "kind": inter.kind.value,
        "subject": inter.subject,
        "before": inter.before,
        "after": inter.after,
    }


def adjustment_to_payload(adj: PromptAdjustment) -> dict:
    return {
        "task_description_changed": list(adj.task_description_changed)
        if adj.task_description_changed is not None
        else None,
        "components_changed": [
            [list(c) for c in adj.components_changed[0]],
            [list(c) for c in adj.components_changed[1]],
        ]
        if adj.components_changed is not None
        else None,
        "model_config_changed": list(adj.model_config_changed)
        if adj.model_config_changed is not None
        else None,
    }


def adjustment_from_payload(payload: dict) -> PromptAdjustment:
    task = payload.get("task_description_changed")
    components = payload.get("components_changed")
    model = payload.get("model_config_changed")
    return PromptAdjustment(
        task_description_changed=tuple(task) if task is not None else None,
        components_changed=(
            tuple(tuple(c) for c in components[0]),
            tuple(tuple(c) for c in components[1]),
        )
        if components is not None
        else None,
        model_config_changed=tuple(model) if model is not None else None,
    )


def delta_to_payload(delta: InteractionDelta) -> dict:
    return {
        "delta_schema": DELTA_SCHEMA,
        "from_version": delta.from_version,
        "to_version": delta.to_version,
        "interactions": [interaction_to_payload(i) for i in delta.interactions],
        "prompt_adjustment": adjustment_to_payload(delta.prompt_adjustment)
        if delta.prompt_adjustment is not None
        else None,
    }


def delta_from_payload(payload: dict) -> InteractionDelta:
    if payload.get("delta_schema") != DELTA_SCHEMA:
        raise ValueError(f"unsupported delta_schema: {payload.get('delta_schema')!r}")
    adjustment = payload.get("prompt_adjustment")
    return InteractionDelta(
        from_version=int(payload["from_version"]),
        to_version=int(payload["to_version"]),
        interactions=tuple(
            SemanticInteraction(
                kind=InteractionKind(i["kind"]),
                subject=i["subject"],
                before=i.get("before"),
                after=i.get("after"),
                order=int(i["order"]),
            )
            for i in payload["interactions"]
        ),
        prompt_adjustment=adjustment_from_payload(adjustment) if adjustment is not None else None,
    )


def delta_to_json(delta: InteractionDelta) -> str:
    return json.dumps(delta_to_payload(delta), indent=2) + "\n"


def delta_from_json(text: str) -> InteractionDelta:
    return delta_from_payload(json.loads(text))
