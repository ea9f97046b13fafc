"""Random but well-behaved workspaces for tests and demos.

Snapshots built here place everything on a fixed slot grid: top-level frames
occupy 840x840 cells spaced 1000 units apart, child frames sit in two 240x240
sub-slots per parent, items snap to per-frame item slots, and unassigned
items live on a shelf far below any frame. The grid guarantees three things
the tests lean on: containment is never ambiguous, child frames always fit
inside their parents, and every move covers far more than the jitter
threshold.

``mutate`` applies only changes expressible in the interaction vocabulary
(no document edits, no frame resizes, no same-owner note moves), so
``perceive``/``apply`` round-trips hold for any pair it produces.
"""

from __future__ import annotations

import random
from dataclasses import replace
from datetime import datetime, timedelta, timezone

from .workspace import (
    ComponentSpec,
    DocumentCard,
    Frame,
    Highlight,
    ModelConfig,
    Note,
    PromptSettings,
    WorkspaceSnapshot,
    resolve_membership,
)

TOP_SLOT_COUNT = 12
TOP_FRAME_SIZE = (840.0, 840.0)
CHILD_FRAME_SIZE = (240.0, 240.0)
DOC_SIZE = (120.0, 80.0)
NOTE_SIZE = (100.0, 60.0)

_SUB_SLOT_OFFSETS = ((-200.0, -200.0), (200.0, -200.0))
_TOP_ITEM_OFFSETS = tuple(
    (-350.0 + 100.0 * k, y) for y in (250.0, 350.0) for k in range(8)
)
_CHILD_ITEM_OFFSETS = tuple((-70.0 + 70.0 * k, y) for y in (-60.0, 20.0) for k in range(3))
_SHELF_SLOTS = tuple((100.0 * k + 50.0, 2000.0 + 100.0 * row) for row in range(3) for k in range(12))

_WORDS = (
    "ridge", "geyser", "meadow", "permit", "shuttle", "culvert", "campfire",
    "station", "survey", "closure", "wildlife", "basin", "boardwalk", "creek",
    "trailhead", "funding", "staffing", "repair", "sighting", "interval",
)
_FRAME_NAMES = (
    "Safety", "Infrastructure", "Visitors", "Operations", "Geology",
    "Wildlife", "Access", "Budget", "Staffing", "Outreach",
)
_TASKS = (
    "Synthesize the workspace into a concise operations report.",
    "Draft an incident overview for the regional office.",
    "Prepare a seasonal readiness briefing from the grouped material.",
)


def _started(version: int) -> datetime:
    return datetime(2026, 1, 1, tzinfo=timezone.utc) + timedelta(minutes=version)


def _body(rng: random.Random, i: int) -> str:
    words = [rng.choice(_WORDS) for _ in range(8)]
    return f"Synthetic record {i} covers " + " ".join(words) + " for this season."


def _top_slot(i: int) -> tuple[float, float]:
    return (1000.0 * i + 500.0, 500.0)


def _offset(center: tuple[float, float], off: tuple[float, float]) -> tuple[float, float]:
    return (center[0] + off[0], center[1] + off[1])


class _State:
    """Mutable working copy of a snapshot, plus slot bookkeeping."""

    def __init__(self, snapshot: WorkspaceSnapshot):
        self.frames = {f.id: f for f in snapshot.frames}
        self.documents = {d.id: d for d in snapshot.documents}
        self.highlights = {h.id: h for h in snapshot.highlights}
        self.notes = {n.id: n for n in snapshot.notes}
        self.settings = snapshot.prompt_settings
        self.version = snapshot.version
        self._used_ids = (
            set(self.frames) | set(self.documents) | set(self.highlights) | set(self.notes)
        )

    # -- ids ----------------------------------------------------------------
    def next_id(self, prefix: str) -> str:
        # Ids are never reused, even after removals: a remove+add pair under
        # one id would look like an inexpressible in-place mutation.
        n = 0
        while f"{prefix}-{n}" in self._used_ids:
            n += 1
        new = f"{prefix}-{n}"
        self._used_ids.add(new)
        return new

    def next_seq(self) -> int:
        return max((f.created_seq for f in self.frames.values()), default=0) + 1

    # -- slots --------------------------------------------------------------
    def occupied_positions(self) -> set[tuple[float, float]]:
        out = {f.position for f in self.frames.values()}
        out |= {d.position for d in self.documents.values()}
        out |= {n.position for n in self.notes.values()}
        return out

    def free_top_slots(self) -> list[tuple[float, float]]:
        taken = {f.position for f in self.frames.values() if f.parent is None}
        return [p for i in range(TOP_SLOT_COUNT) if (p := _top_slot(i)) not in taken]

    def free_sub_slots(self, parent: Frame) -> list[tuple[float, float]]:
        taken = {f.position for f in self.frames.values() if f.parent == parent.id}
        return [
            p for off in _SUB_SLOT_OFFSETS if (p := _offset(parent.position, off)) not in taken
        ]

    def free_item_slots(self, frame: Frame | None) -> list[tuple[float, float]]:
        taken = self.occupied_positions()
        if frame is None:
            slots = _SHELF_SLOTS
            return [p for p in slots if p not in taken]
        offsets = _TOP_ITEM_OFFSETS if frame.size == TOP_FRAME_SIZE else _CHILD_ITEM_OFFSETS
        return [p for off in offsets if (p := _offset(frame.position, off)) not in taken]

    # -- assembly -----------------------------------------------------------
    def snapshot(self) -> WorkspaceSnapshot:
        order = lambda d: tuple(d[k] for k in sorted(d))
        return WorkspaceSnapshot(
            version=self.version,
            timestamp=_started(self.version),
            frames=order(self.frames),
            documents=order(self.documents),
            highlights=order(self.highlights),
            notes=order(self.notes),
            prompt_settings=self.settings,
        )

    def membership(self) -> dict[str, str | None]:
        return resolve_membership(self.snapshot())


def default_settings(with_conclusion: bool = True) -> PromptSettings:
    components = [ComponentSpec("Summary", "summary"), ComponentSpec("Findings", "body")]
    if with_conclusion:
        components.append(ComponentSpec("Conclusion", "conclusion"))
    return PromptSettings(
        task_description=_TASKS[0],
        components=tuple(components),
        model_config=ModelConfig(model_name="offline-mock", temperature=0.2, max_tokens=1024),
    )


def base_snapshot(rng: random.Random, version: int = 1) -> WorkspaceSnapshot:
    """A small valid snapshot: a handful of frames, documents, notes and
    highlights, totalling at most twenty entities."""
    state = _State(
        WorkspaceSnapshot(
            version=version,
            timestamp=_started(version),
            frames=(),
            documents=(),
            highlights=(),
            notes=(),
            prompt_settings=default_settings(with_conclusion=rng.random() < 0.7),
        )
    )
    names = list(_FRAME_NAMES)
    rng.shuffle(names)
    for _ in range(rng.randint(2, 4)):
        slot = rng.choice(state.free_top_slots())
        fid = state.next_id("frame")
        state.frames[fid] = Frame(
            id=fid, name=names.pop(), position=slot, size=TOP_FRAME_SIZE,
            parent=None, created_seq=state.next_seq(),
        )
    tops = [f for f in state.frames.values() if f.parent is None]
    for _ in range(rng.randint(0, 2)):
        parent = rng.choice(tops)
        subs = state.free_sub_slots(parent)
        if not subs:
            continue
        fid = state.next_id("frame")
        state.frames[fid] = Frame(
            id=fid, name=names.pop(), position=rng.choice(subs), size=CHILD_FRAME_SIZE,
            parent=parent.id, created_seq=state.next_seq(),
        )
    frame_pool: list[Frame | None] = list(state.frames.values()) + [None]
    for i in range(rng.randint(3, 6)):
        target = rng.choice(frame_pool)
        slots = state.free_item_slots(target)
        if not slots:
            target = None
            slots = state.free_item_slots(None)
        did = state.next_id("doc")
        state.documents[did] = DocumentCard(
            id=did, title=f"Record {i}", body=_body(rng, i),
            position=rng.choice(slots), size=DOC_SIZE,
        )
    for _ in range(rng.randint(0, 3)):
        target = rng.choice(frame_pool)
        slots = state.free_item_slots(target)
        if not slots:
            continue
        nid = state.next_id("note")
        text = " ".join(rng.choice(_WORDS) for _ in range(3))
        state.notes[nid] = Note(id=nid, text=text, position=rng.choice(slots), size=NOTE_SIZE)
    docs = list(state.documents.values())
    for _ in range(rng.randint(0, 3)):
        doc = rng.choice(docs)
        span = _pick_span(rng, doc.body)
        if span is None:
            continue
        hid = state.next_id("hl")
        state.highlights[hid] = Highlight(
            id=hid, document=doc.id, span=span, text=doc.body[span[0]:span[1]],
            count=rng.randint(1, 3),
            polarity="emphasize" if rng.random() < 0.8 else "reject",
        )
        doc = state.documents[doc.id]
        state.documents[doc.id] = replace(doc, highlights=doc.highlights + (hid,))
        docs = list(state.documents.values())
    return state.snapshot()


def _pick_span(rng: random.Random, body: str) -> tuple[int, int] | None:
    words = body.split(" ")
    if len(words) < 2:
        return None
    idx = rng.randrange(len(words))
    start = sum(len(w) + 1 for w in words[:idx])
    end = start + len(words[idx])
    if start >= end or end > len(body):
        return None
    return (start, end)


# ---------------------------------------------------------------------------
# mutations


def _subtree_ids(state: _State, frame: Frame) -> set[str]:
    group = {frame.id}
    changed = True
    while changed:
        changed = False
        for f in state.frames.values():
            if f.parent in group and f.id not in group:
                group.add(f.id)
                changed = True
    return group


def _subtree_owns_note(state: _State, frame: Frame) -> bool:
    group = _subtree_ids(state, frame)
    return any(
        owner in group and item_id in state.notes
        for item_id, owner in state.membership().items()
    )


def _translate_subtree(state: _State, frame: Frame, delta: tuple[float, float]) -> None:
    """Move a frame, its descendant frames, and every item they own.

    Never call this when the subtree owns a note: a same-owner note move has
    no interaction kind, so the resulting pair would not round-trip."""
    owned_by: dict[str, str | None] = state.membership()
    group = _subtree_ids(state, frame)
    for fid in group:
        f = state.frames[fid]
        state.frames[fid] = replace(f, position=(f.position[0] + delta[0], f.position[1] + delta[1]))
    for did, owner in owned_by.items():
        if owner in group:
            if did in state.documents:
                d = state.documents[did]
                state.documents[did] = replace(
                    d, position=(d.position[0] + delta[0], d.position[1] + delta[1])
                )
            elif did in state.notes:
                n = state.notes[did]
                state.notes[did] = replace(
                    n, position=(n.position[0] + delta[0], n.position[1] + delta[1])
                )


def _op_add_top_frame(rng: random.Random, state: _State) -> bool:
    slots = state.free_top_slots()
    if not slots:
        return False
    fid = state.next_id("frame")
    used = {f.name for f in state.frames.values()}
    pool = [n for n in _FRAME_NAMES if n not in used] or [f"Cluster {fid}"]
    state.frames[fid] = Frame(
        id=fid, name=rng.choice(pool), position=rng.choice(slots),
        size=TOP_FRAME_SIZE, parent=None, created_seq=state.next_seq(),
    )
    return True


def _op_add_child_frame(rng: random.Random, state: _State) -> bool:
    tops = [f for f in state.frames.values() if f.parent is None and f.size == TOP_FRAME_SIZE]
    rng.shuffle(tops)
    for parent in tops:
        subs = state.free_sub_slots(parent)
        if subs:
            fid = state.next_id("frame")
            used = {f.name for f in state.frames.values()}
            pool = [n for n in _FRAME_NAMES if n not in used] or [f"Subcluster {fid}"]
            state.frames[fid] = Frame(
                id=fid, name=rng.choice(pool), position=rng.choice(subs),
                size=CHILD_FRAME_SIZE, parent=parent.id, created_seq=state.next_seq(),
            )
            return True
    return False


def _op_remove_leaf_frame(rng: random.Random, state: _State) -> bool:
    parents = {f.parent for f in state.frames.values() if f.parent is not None}
    leaves = [f for f in state.frames.values() if f.id not in parents]
    if not leaves:
        return False
    del state.frames[rng.choice(leaves).id]
    return True


def _op_rename_frame(rng: random.Random, state: _State) -> bool:
    if not state.frames:
        return False
    frame = rng.choice(list(state.frames.values()))
    used = {f.name for f in state.frames.values()}
    pool = [n for n in _FRAME_NAMES if n not in used]
    new_name = rng.choice(pool) if pool else frame.name + " II"
    state.frames[frame.id] = replace(frame, name=new_name)
    return True


def _op_move_top_frame(rng: random.Random, state: _State) -> bool:
    tops = [f for f in state.frames.values() if f.parent is None and f.size == TOP_FRAME_SIZE]
    slots = state.free_top_slots()
    if not tops or not slots:
        return False
    frame = rng.choice(tops)
    target = rng.choice(slots)
    delta = (target[0] - frame.position[0], target[1] - frame.position[1])
    has_children = any(f.parent == frame.id for f in state.frames.values())
    if _subtree_owns_note(state, frame):
        if has_children:
            return False
        # Leave the note behind; its owner change is a NOTE_REASSIGNED.
        state.frames[frame.id] = replace(frame, position=target)
        return True
    if has_children or rng.random() < 0.6:
        _translate_subtree(state, frame, delta)
    else:
        state.frames[frame.id] = replace(frame, position=target)
    return True


def _op_reparent_child(rng: random.Random, state: _State) -> bool:
    parents = {f.parent for f in state.frames.values() if f.parent is not None}
    movable = [
        f for f in state.frames.values()
        if f.size == CHILD_FRAME_SIZE and f.id not in parents
    ]
    if not movable:
        return False
    frame = rng.choice(movable)
    if _subtree_owns_note(state, frame):
        return False
    choices: list[tuple[str | None, tuple[float, float]]] = []
    for top in state.frames.values():
        if top.parent is None and top.size == TOP_FRAME_SIZE and top.id != frame.parent:
            for slot in state.free_sub_slots(top):
                choices.append((top.id, slot))
    if frame.parent is not None:
        for slot in state.free_top_slots():
            choices.append((None, slot))
    if not choices:
        return False
    new_parent, target = rng.choice(choices)
    delta = (target[0] - frame.position[0], target[1] - frame.position[1])
    _translate_subtree(state, frame, delta)
    state.frames[frame.id] = replace(state.frames[frame.id], parent=new_parent)
    return True


def _op_move_item(rng: random.Random, state: _State) -> bool:
    owned = state.membership()
    items = list(state.documents.values()) + list(state.notes.values())
    if not items:
        return False
    rng.shuffle(items)
    frame_pool: list[Frame | None] = list(state.frames.values()) + [None]
    for item in items:
        is_note = item.id in state.notes
        rng.shuffle(frame_pool)
        for target in frame_pool:
            target_id = target.id if target is not None else None
            if is_note and target_id == owned[item.id]:
                continue  # notes have no same-owner move in the vocabulary
            slots = state.free_item_slots(target)
            if not slots:
                continue
            pos = rng.choice(slots)
            if is_note:
                state.notes[item.id] = replace(state.notes[item.id], position=pos)
            else:
                state.documents[item.id] = replace(state.documents[item.id], position=pos)
            return True
    return False


def _op_add_note(rng: random.Random, state: _State) -> bool:
    frame_pool: list[Frame | None] = list(state.frames.values()) + [None]
    rng.shuffle(frame_pool)
    for target in frame_pool:
        slots = state.free_item_slots(target)
        if slots:
            nid = state.next_id("note")
            text = " ".join(rng.choice(_WORDS) for _ in range(3))
            state.notes[nid] = Note(id=nid, text=text, position=rng.choice(slots), size=NOTE_SIZE)
            return True
    return False


def _op_remove_note(rng: random.Random, state: _State) -> bool:
    if not state.notes:
        return False
    del state.notes[rng.choice(list(state.notes))]
    return True


def _op_edit_note(rng: random.Random, state: _State) -> bool:
    if not state.notes:
        return False
    note = rng.choice(list(state.notes.values()))
    new_text = note.text + " " + rng.choice(_WORDS)
    state.notes[note.id] = replace(note, text=new_text)
    return True


def _op_add_highlight(rng: random.Random, state: _State) -> bool:
    if not state.documents:
        return False
    doc = rng.choice(list(state.documents.values()))
    span = _pick_span(rng, doc.body)
    if span is None:
        return False
    existing = {state.highlights[h].span for h in doc.highlights if h in state.highlights}
    if span in existing:
        return False
    hid = state.next_id("hl")
    state.highlights[hid] = Highlight(
        id=hid, document=doc.id, span=span, text=doc.body[span[0]:span[1]],
        count=rng.randint(1, 3),
        polarity="emphasize" if rng.random() < 0.8 else "reject",
    )
    state.documents[doc.id] = replace(doc, highlights=doc.highlights + (hid,))
    return True


def _op_remove_highlight(rng: random.Random, state: _State) -> bool:
    if not state.highlights:
        return False
    hl = rng.choice(list(state.highlights.values()))
    del state.highlights[hl.id]
    doc = state.documents[hl.document]
    state.documents[doc.id] = replace(doc, highlights=tuple(h for h in doc.highlights if h != hl.id))
    return True


def _op_edit_highlight_count(rng: random.Random, state: _State) -> bool:
    if not state.highlights:
        return False
    hl = rng.choice(list(state.highlights.values()))
    new_count = rng.choice([c for c in (1, 2, 3, 4) if c != hl.count])
    state.highlights[hl.id] = replace(hl, count=new_count)
    return True


def _op_toggle_polarity(rng: random.Random, state: _State) -> bool:
    if not state.highlights:
        return False
    hl = rng.choice(list(state.highlights.values()))
    flipped = "reject" if hl.polarity == "emphasize" else "emphasize"
    state.highlights[hl.id] = replace(hl, polarity=flipped)
    return True


def _op_change_task(rng: random.Random, state: _State) -> bool:
    pool = [t for t in _TASKS if t != state.settings.task_description]
    state.settings = replace(state.settings, task_description=rng.choice(pool))
    return True


def _op_reorder_components(rng: random.Random, state: _State) -> bool:
    components = list(state.settings.components)
    if len(components) < 2:
        return False
    for _ in range(8):
        shuffled = components[:]
        rng.shuffle(shuffled)
        if shuffled != components:
            state.settings = replace(state.settings, components=tuple(shuffled))
            return True
    return False


def _op_change_model(rng: random.Random, state: _State) -> bool:
    mc = state.settings.model_config
    new_temp = round(rng.choice([t for t in (0.0, 0.2, 0.5, 1.0) if t != mc.temperature]), 2)
    state.settings = replace(state.settings, model_config=replace(mc, temperature=new_temp))
    return True


_OPS = (
    _op_add_top_frame,
    _op_add_child_frame,
    _op_remove_leaf_frame,
    _op_rename_frame,
    _op_move_top_frame,
    _op_reparent_child,
    _op_move_item,
    _op_move_item,
    _op_add_note,
    _op_remove_note,
    _op_edit_note,
    _op_add_highlight,
    _op_remove_highlight,
    _op_edit_highlight_count,
    _op_toggle_polarity,
    _op_change_task,
    _op_reorder_components,
    _op_change_model,
)


def _note_endpoint_violation(state: _State, base_notes: dict) -> bool:
    """Per-op guards keep each edit expressible, but ops compose: a note can
    leave a frame and the frame can then move under the note's new slot, so
    the endpoints show same-owner/different-position, which no kind carries.
    Expressibility is an endpoint property, so it gets checked there."""
    owned = state.membership()
    for note_id, (owner0, pos0) in base_notes.items():
        note = state.notes.get(note_id)
        if note is not None and owned.get(note_id) == owner0 and note.position != pos0:
            return True
    return False


def mutate(rng: random.Random, snapshot: WorkspaceSnapshot, ops: int) -> WorkspaceSnapshot:
    """A successor snapshot reachable through ``ops`` vocabulary-expressible
    edits (fewer when the workspace runs out of applicable moves)."""
    state = _State(snapshot)
    base_owned = resolve_membership(snapshot)
    base_notes = {n.id: (base_owned.get(n.id), n.position) for n in snapshot.notes}
    applied = 0
    attempts = 0
    while applied < ops and attempts < ops * 12 + 12:
        attempts += 1
        saved = (
            dict(state.frames),
            dict(state.documents),
            dict(state.highlights),
            dict(state.notes),
            state.settings,
        )
        if not _OPS[rng.randrange(len(_OPS))](rng, state):
            continue
        if _note_endpoint_violation(state, base_notes):
            state.frames, state.documents, state.highlights, state.notes, state.settings = saved
            continue
        applied += 1
    state.version = snapshot.version + 1
    return state.snapshot()


def random_pair(rng: random.Random, max_ops: int = 6) -> tuple[WorkspaceSnapshot, WorkspaceSnapshot]:
    prev = base_snapshot(rng)
    curr = mutate(rng, prev, rng.randint(0, max_ops))
    return prev, curr
