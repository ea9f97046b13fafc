"""Spatial workspace model: frames, document cards, highlights, and notes.

All geometry lives in abstract workspace units, and a ``position`` is always
the center point of the entity it belongs to. Frame membership is never
stored on an entity: it is derived from geometry by ``resolve_membership``
(center-point containment, smallest containing frame wins), which keeps
overlapping and nested frames decidable.

Snapshots are immutable values. A session evolves only by appending a new
snapshot with a higher version; that discipline lives in the service layer,
so everything in this module is safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone

SNAPSHOT_SCHEMA = 1

KIND_SUMMARY = "summary"
KIND_BODY = "body"
KIND_CONCLUSION = "conclusion"
COMPONENT_KINDS = (KIND_SUMMARY, KIND_BODY, KIND_CONCLUSION)

POLARITY_EMPHASIZE = "emphasize"
POLARITY_REJECT = "reject"
POLARITIES = (POLARITY_EMPHASIZE, POLARITY_REJECT)

Point = tuple[float, float]
Size = tuple[float, float]


@dataclass(frozen=True)
class Violation:
    """One failed well-formedness rule, attributed to the offending entity."""

    subject: str
    reason: str


class ValidationError(ValueError):
    """A snapshot (or snapshot pair) failed validation."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        detail = "; ".join(f"{v.subject}: {v.reason}" for v in self.violations)
        super().__init__(detail or "invalid snapshot")


@dataclass(frozen=True)
class DocumentCard:
    """A source document placed on the canvas. The corpus is fixed for a
    session: cards move and collect highlights, but title and body never
    change once the session starts."""

    id: str
    title: str
    body: str
    position: Point
    size: Size
    highlights: tuple[str, ...] = ()


@dataclass(frozen=True)
class Highlight:
    """A marked span of a document body. ``text`` duplicates the span content
    so downstream consumers never need to re-slice the body. ``count`` is the
    user-tuned emphasis weight; ``polarity`` flips emphasis into rejection."""

    id: str
    document: str
    span: tuple[int, int]
    text: str
    count: int = 1
    polarity: str = POLARITY_EMPHASIZE


@dataclass(frozen=True)
class Frame:
    """A named rectangular region used to cluster cards. Frames form a forest
    via ``parent``; ``created_seq`` is a session-monotonic counter that fixes
    narrative ordering of top-level frames."""

    id: str
    name: str
    position: Point
    size: Size
    parent: str | None = None
    created_seq: int = 0


@dataclass(frozen=True)
class Note:
    """A free-text annotation card."""

    id: str
    text: str
    position: Point
    size: Size


@dataclass(frozen=True)
class ModelConfig:
    model_name: str
    temperature: float = 0.2
    max_tokens: int = 1024


@dataclass(frozen=True)
class ComponentSpec:
    """One slot in the configured report layout. ``kind`` is one of
    ``summary``, ``body`` or ``conclusion``; the body slot expands into one
    paragraph per top-level frame."""

    name: str
    kind: str


@dataclass(frozen=True)
class PromptSettings:
    task_description: str
    components: tuple[ComponentSpec, ...]
    model_config: ModelConfig


@dataclass(frozen=True)
class WorkspaceSnapshot:
    version: int
    timestamp: datetime
    frames: tuple[Frame, ...]
    documents: tuple[DocumentCard, ...]
    highlights: tuple[Highlight, ...]
    notes: tuple[Note, ...]
    prompt_settings: PromptSettings


# ---------------------------------------------------------------------------
# geometry


def bounds(position: Point, size: Size) -> tuple[float, float, float, float]:
    """Axis-aligned bounds (x0, y0, x1, y1) of a centered rectangle."""
    x, y = position
    w, h = size
    return (x - w / 2.0, y - h / 2.0, x + w / 2.0, y + h / 2.0)


def contains_point(rect: tuple[float, float, float, float], point: Point) -> bool:
    x0, y0, x1, y1 = rect
    x, y = point
    return x0 <= x <= x1 and y0 <= y <= y1


def rect_inside(inner: tuple[float, float, float, float], outer: tuple[float, float, float, float]) -> bool:
    return inner[0] >= outer[0] and inner[1] >= outer[1] and inner[2] <= outer[2] and inner[3] <= outer[3]


def _area(size: Size) -> float:
    return size[0] * size[1]


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


# ---------------------------------------------------------------------------
# derived structure


def resolve_membership(snapshot: WorkspaceSnapshot) -> dict[str, str | None]:
    """Owning frame for every document and note, or ``None`` if unframed.

    An item belongs to the smallest-area frame whose bounds contain the
    item's center point. Ties break on (created_seq, id) so the result is
    deterministic for any geometry.
    """
    frame_bounds = [(f, bounds(f.position, f.size)) for f in snapshot.frames]
    out: dict[str, str | None] = {}
    items: list[tuple[str, Point]] = [(d.id, d.position) for d in snapshot.documents]
    items += [(n.id, n.position) for n in snapshot.notes]
    for item_id, pos in items:
        containing = [f for f, rect in frame_bounds if contains_point(rect, pos)]
        if not containing:
            out[item_id] = None
        else:
            best = min(containing, key=lambda f: (_area(f.size), f.created_seq, f.id))
            out[item_id] = best.id
    return out


def main_frames(snapshot: WorkspaceSnapshot) -> list[Frame]:
    """Top-level frames in creation order. This ordering is load-bearing:
    it fixes the order of body paragraphs in generated reports."""
    tops = [f for f in snapshot.frames if f.parent is None]
    return sorted(tops, key=lambda f: (f.created_seq, f.id))


def children_of(snapshot: WorkspaceSnapshot, frame_id: str) -> list[Frame]:
    kids = [f for f in snapshot.frames if f.parent == frame_id]
    return sorted(kids, key=lambda f: (f.created_seq, f.id))


def main_anchor_of(snapshot: WorkspaceSnapshot, frame_id: str) -> str | None:
    """Top-level ancestor of a frame, i.e. the body paragraph it reports to."""
    by_id = {f.id: f for f in snapshot.frames}
    cur = by_id.get(frame_id)
    seen = set()
    while cur is not None and cur.parent is not None:
        if cur.id in seen:
            return None
        seen.add(cur.id)
        cur = by_id.get(cur.parent)
    return cur.id if cur is not None else None


# ---------------------------------------------------------------------------
# validation


def validate(snapshot: WorkspaceSnapshot) -> list[Violation]:
    """All well-formedness violations, empty when the snapshot is valid.

    Never raises; callers that require validity wrap the result in
    :class:`ValidationError`.
    """
    violations: list[Violation] = []
    seen: dict[str, str] = {}
    collections = (
        ("frame", snapshot.frames),
        ("document", snapshot.documents),
        ("highlight", snapshot.highlights),
        ("note", snapshot.notes),
    )
    for label, entities in collections:
        for entity in entities:
            if entity.id in seen:
                violations.append(Violation(entity.id, f"duplicate id (already used by a {seen[entity.id]})"))
            else:
                seen[entity.id] = label

    frames = {f.id: f for f in snapshot.frames}
    documents = {d.id: d for d in snapshot.documents}
    highlights = {h.id: h for h in snapshot.highlights}

    cyclic: set[str] = set()
    for f in snapshot.frames:
        if f.size[0] <= 0 or f.size[1] <= 0:
            violations.append(Violation(f.id, "frame size must be positive"))
        if not f.name.strip():
            violations.append(Violation(f.id, "frame name must be non-empty"))
        if f.parent is not None and f.parent not in frames:
            violations.append(Violation(f.id, f"parent frame {f.parent!r} does not exist"))
        walked = {f.id}
        cur = f
        while cur.parent is not None and cur.parent in frames:
            cur = frames[cur.parent]
            if cur.id in walked:
                violations.append(Violation(f.id, "frame parent chain contains a cycle"))
                cyclic.add(f.id)
                break
            walked.add(cur.id)
    for f in snapshot.frames:
        if f.parent is None or f.parent not in frames or f.id in cyclic:
            continue
        parent = frames[f.parent]
        if not rect_inside(bounds(f.position, f.size), bounds(parent.position, parent.size)):
            violations.append(Violation(f.id, f"frame bounds extend outside parent {parent.id!r}"))

    for d in snapshot.documents:
        if d.size[0] <= 0 or d.size[1] <= 0:
            violations.append(Violation(d.id, "document size must be positive"))
        for hid in d.highlights:
            if hid not in highlights:
                violations.append(Violation(d.id, f"references missing highlight {hid!r}"))
            elif highlights[hid].document != d.id:
                violations.append(Violation(d.id, f"lists highlight {hid!r} owned by another document"))

    for h in snapshot.highlights:
        doc = documents.get(h.document)
        if doc is None:
            violations.append(Violation(h.id, f"document {h.document!r} does not exist"))
        else:
            start, end = h.span
            if not (0 <= start < end <= len(doc.body)):
                violations.append(Violation(h.id, f"span {h.span} out of range for document body"))
            elif doc.body[start:end] != h.text:
                violations.append(Violation(h.id, "text does not match the document span"))
            if h.id not in doc.highlights:
                violations.append(Violation(h.id, f"not listed on document {doc.id!r}"))
        if h.count < 1:
            violations.append(Violation(h.id, "count must be >= 1"))
        if h.polarity not in POLARITIES:
            violations.append(Violation(h.id, f"unknown polarity {h.polarity!r}"))

    for n in snapshot.notes:
        if not n.text.strip():
            violations.append(Violation(n.id, "note text must be non-empty"))
        if n.size[0] <= 0 or n.size[1] <= 0:
            violations.append(Violation(n.id, "note size must be positive"))

    violations.extend(validate_settings(snapshot.prompt_settings))
    return violations


def validate_settings(settings: PromptSettings) -> list[Violation]:
    violations: list[Violation] = []
    kinds = [c.kind for c in settings.components]
    for c in settings.components:
        if c.kind not in COMPONENT_KINDS:
            violations.append(Violation("prompt_settings", f"unknown component kind {c.kind!r}"))
    if kinds.count(KIND_SUMMARY) != 1:
        violations.append(Violation("prompt_settings", "exactly one summary component is required"))
    if kinds.count(KIND_BODY) != 1:
        violations.append(Violation("prompt_settings", "exactly one body slot is required"))
    if kinds.count(KIND_CONCLUSION) > 1:
        violations.append(Violation("prompt_settings", "at most one conclusion component is allowed"))
    if not (0.0 <= settings.model_config.temperature <= 2.0):
        violations.append(Violation("prompt_settings", "temperature must be within [0, 2]"))
    if settings.model_config.max_tokens <= 0:
        violations.append(Violation("prompt_settings", "max_tokens must be positive"))
    return violations


def require_valid(snapshot: WorkspaceSnapshot) -> None:
    violations = validate(snapshot)
    if violations:
        raise ValidationError(violations)


# ---------------------------------------------------------------------------
# serialization
#
# Payload dicts are built with a fixed key order so serialized snapshots are
# byte-stable: parse -> serialize -> parse is the identity on values, and
# serialize(parse(serialize(s))) == serialize(s) byte for byte.


def _point(value) -> Point:
    x, y = value
    return (float(x), float(y))


def _frame_payload(f: Frame) -> dict:
    return {
        "id": f.id,
        "name": f.name,
        "position": [f.position[0], f.position[1]],
        "size": [f.size[0], f.size[1]],
        "parent": f.parent,
        "created_seq": f.created_seq,
    }


def _document_payload(d: DocumentCard) -> dict:
    return {
        "id": d.id,
        "title": d.title,
        "body": d.body,
        "position": [d.position[0], d.position[1]],
        "size": [d.size[0], d.size[1]],
        "highlights": list(d.highlights),
    }


def _highlight_payload(h: Highlight) -> dict:
    return {
        "id": h.id,
        "document": h.document,
        "span": [h.span[0], h.span[1]],
        "text": h.text,
        "count": h.count,
        "polarity": h.polarity,
    }


def _note_payload(n: Note) -> dict:
    return {
        "id": n.id,
        "text": n.text,
        "position": [n.position[0], n.position[1]],
        "size": [n.size[0], n.size[1]],
    }


def settings_to_payload(settings: PromptSettings) -> dict:
    return {
        "task_description": settings.task_description,
        "components": [{"name": c.name, "kind": c.kind} for c in settings.components],
        "model_config": {
            "model_name": settings.model_config.model_name,
            "temperature": settings.model_config.temperature,
            "max_tokens": settings.model_config.max_tokens,
        },
    }


def settings_from_payload(payload: dict) -> PromptSettings:
    mc = payload["model_config"]
    return PromptSettings(
        task_description=payload["task_description"],
        components=tuple(ComponentSpec(c["name"], c["kind"]) for c in payload["components"]),
        model_config=ModelConfig(
            model_name=mc["model_name"],
            temperature=float(mc["temperature"]),
            max_tokens=int(mc["max_tokens"]),
        ),
    )


def snapshot_to_payload(snapshot: WorkspaceSnapshot) -> dict:
    return {
        "snapshot_schema": SNAPSHOT_SCHEMA,
        "version": snapshot.version,
        "timestamp": snapshot.timestamp.isoformat(),
        "frames": [_frame_payload(f) for f in snapshot.frames],
        "documents": [_document_payload(d) for d in snapshot.documents],
        "highlights": [_highlight_payload(h) for h in snapshot.highlights],
        "notes": [_note_payload(n) for n in snapshot.notes],
        "prompt_settings": settings_to_payload(snapshot.prompt_settings),
    }


def snapshot_from_payload(payload: dict) -> WorkspaceSnapshot:
    if payload.get("snapshot_schema") != SNAPSHOT_SCHEMA:
        raise ValueError(f"unsupported snapshot_schema: {payload.get('snapshot_schema')!r}")
    return WorkspaceSnapshot(
        version=int(payload["version"]),
        timestamp=datetime.fromisoformat(payload["timestamp"]),
        frames=tuple(
            Frame(
                id=f["id"],
                name=f["name"],
                position=_point(f["position"]),
                size=_point(f["size"]),
                parent=f.get("parent"),
                created_seq=int(f["created_seq"]),
            )
            for f in payload["frames"]
        ),
        documents=tuple(
            DocumentCard(
                id=d["id"],
                title=d["title"],
                body=d["body"],
                position=_point(d["position"]),
                size=_point(d["size"]),
                highlights=tuple(d.get("highlights", ())),
            )
            for d in payload["documents"]
        ),
        highlights=tuple(
            Highlight(
                id=h["id"],
                document=h["document"],
                span=(int(h["span"][0]), int(h["span"][1])),
                text=h["text"],
                count=int(h["count"]),
                polarity=h["polarity"],
            )
            for h in payload["highlights"]
        ),
        notes=tuple(
            Note(
                id=n["id"],
                text=n["text"],
                position=_point(n["position"]),
                size=_point(n["size"]),
            )
            for n in payload["notes"]
        ),
        prompt_settings=settings_from_payload(payload["prompt_settings"]),
    )


def snapshot_to_json(snapshot: WorkspaceSnapshot) -> str:
    return json.dumps(snapshot_to_payload(snapshot), indent=2) + "\n"


def snapshot_from_json(text: str) -> WorkspaceSnapshot:
    return snapshot_from_payload(json.loads(text))


def canonical_payload(snapshot: WorkspaceSnapshot) -> dict:
    """Order-insensitive form used for semantic comparison. Entity lists are
    sorted by id, a document's highlight list is sorted, and the timestamp is
    dropped (it is bookkeeping, not workspace state)."""
    payload = snapshot_to_payload(snapshot)
    del payload["timestamp"]
    for key in ("frames", "documents", "highlights", "notes"):
        payload[key] = sorted(payload[key], key=lambda e: e["id"])
    for doc in payload["documents"]:
        doc["highlights"] = sorted(doc["highlights"])
    return payload


def canonical_json(snapshot: WorkspaceSnapshot) -> str:
    return json.dumps(canonical_payload(snapshot), sort_keys=True, separators=(",", ":"))


def semantic_equal(a: WorkspaceSnapshot, b: WorkspaceSnapshot) -> bool:
    """Content equality. The version counter is bookkeeping like the
    timestamp: a bump with no other change perceives as an empty delta and
    must compare equal here."""
    pa, pb = canonical_payload(a), canonical_payload(b)
    del pa["version"], pb["version"]
    return pa == pb


def bump_version(snapshot: WorkspaceSnapshot, **changes) -> WorkspaceSnapshot:
    """Copy with version + 1; keyword overrides are applied on top."""
    merged = {"version": snapshot.version + 1}
    merged.update(changes)
    return replace(snapshot, **merged)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
