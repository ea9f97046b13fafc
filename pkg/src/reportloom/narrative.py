"""Report structure, generation context, and sentence-level diffing.

A report is an ordered list of components: exactly one summary, one body
paragraph per top-level frame (each anchored to its frame id), and at most
one conclusion. Anchors are what make refinement targeted; ``diff_reports``
aligns components by anchor (body) or kind (summary/conclusion) so that
reordering alone never counts as a content change.

``serialize_context`` reduces a snapshot to the structured brief handed to
the generation and refinement backends. The context carries a fingerprint of
the canonical snapshot, so any workspace change, even a pure repositioning,
yields a distinct context.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from difflib import SequenceMatcher

from .workspace import (
    ComponentSpec,
    ModelConfig,
    Violation,
    WorkspaceSnapshot,
    ValidationError,
    canonical_payload,
    children_of,
    main_frames,
    resolve_membership,
    settings_to_payload,
    validate,
    KIND_BODY,
    KIND_CONCLUSION,
    KIND_SUMMARY,
)

REPORT_SCHEMA = 1

# Reserved anchor for the degenerate paragraph that collects unframed
# documents when the workspace has no top-level frames at all.
UNASSIGNED_ANCHOR = "unassigned"
UNASSIGNED_HEADING = "Unassigned"

CHANGE_INSERTED = "inserted"
CHANGE_DELETED = "deleted"
CHANGE_MODIFIED = "modified"

# Index used for the heading pseudo-sentence in diff records.
HEADING_INDEX = -1


@dataclass(frozen=True)
class ReportComponent:
    """One report building block. ``anchor`` is the owning top-level frame id
    for body paragraphs (or the unassigned sentinel) and None otherwise."""

    kind: str
    heading: str
    sentences: tuple[str, ...]
    anchor: str | None = None

    def label(self) -> str:
        """Alignment key: the anchor for body components, else the kind."""
        return self.anchor if self.kind == KIND_BODY and self.anchor is not None else self.kind


@dataclass(frozen=True)
class Report:
    version: int
    components: tuple[ReportComponent, ...]


@dataclass(frozen=True)
class SentenceChange:
    """One atomic revision. ``component`` and ``sentence`` index into the new
    report for inserted/modified changes and into the old report for deleted
    ones; a ``sentence`` of -1 addresses the component heading."""

    component: int
    sentence: int
    change: str
    before: str | None
    after: str | None


@dataclass(frozen=True)
class RevisionDiff:
    changes: tuple[SentenceChange, ...]
    changed_anchors: frozenset[str]

    def is_empty(self) -> bool:
        return not self.changes


# ---------------------------------------------------------------------------
# generation context


@dataclass(frozen=True)
class ContextHighlight:
    id: str
    text: str
    count: int
    polarity: str


@dataclass(frozen=True)
class ContextDocument:
    id: str
    title: str
    body: str
    highlights: tuple[ContextHighlight, ...]


@dataclass(frozen=True)
class ContextNote:
    id: str
    text: str


@dataclass(frozen=True)
class ContextFrame:
    id: str
    name: str
    documents: tuple[ContextDocument, ...]
    notes: tuple[ContextNote, ...]
    children: tuple[ContextFrame, ...]


@dataclass(frozen=True)
class GenerationContext:
    """Everything the backends may see about the workspace: the frame tree in
    narrative order, per-frame material, unframed material, and the prompt
    settings. ``fingerprint`` hashes the canonical snapshot, making contexts
    of distinct snapshots distinct."""

    frames: tuple[ContextFrame, ...]
    unassigned_documents: tuple[ContextDocument, ...]
    unassigned_notes: tuple[ContextNote, ...]
    task_description: str
    components: tuple[ComponentSpec, ...]
    model_config: ModelConfig
    fingerprint: str


def serialize_context(snapshot: WorkspaceSnapshot) -> GenerationContext:
    violations = validate(snapshot)
    if violations:
        raise ValidationError(violations)
    membership = resolve_membership(snapshot)
    hl_by_id = {h.id: h for h in snapshot.highlights}

    def ctx_document(doc) -> ContextDocument:
        hls = sorted(
            (hl_by_id[h] for h in doc.highlights),
            key=lambda h: (h.span[0], h.span[1], h.id),
        )
        return ContextDocument(
            id=doc.id,
            title=doc.title,
            body=doc.body,
            highlights=tuple(
                ContextHighlight(h.id, h.text, h.count, h.polarity) for h in hls
            ),
        )

    def owned_documents(frame_id: str | None) -> tuple[ContextDocument, ...]:
        docs = [d for d in snapshot.documents if membership[d.id] == frame_id]
        return tuple(ctx_document(d) for d in sorted(docs, key=lambda d: d.id))

    def owned_notes(frame_id: str | None) -> tuple[ContextNote, ...]:
        notes = [n for n in snapshot.notes if membership[n.id] == frame_id]
        return tuple(ContextNote(n.id, n.text) for n in sorted(notes, key=lambda n: n.id))

    def build(frame) -> ContextFrame:
        return ContextFrame(
            id=frame.id,
            name=frame.name,
            documents=owned_documents(frame.id),
            notes=owned_notes(frame.id),
            children=tuple(build(c) for c in children_of(snapshot, frame.id)),
        )

    return GenerationContext(
        frames=tuple(build(f) for f in main_frames(snapshot)),
        unassigned_documents=owned_documents(None),
        unassigned_notes=owned_notes(None),
        task_description=snapshot.prompt_settings.task_description,
        components=snapshot.prompt_settings.components,
        model_config=snapshot.prompt_settings.model_config,
        fingerprint=workspace_fingerprint(snapshot),
    )


def workspace_fingerprint(snapshot: WorkspaceSnapshot) -> str:
    """Short content hash: equal for snapshots that differ only in version or
    timestamp, distinct otherwise. Keeping the save counter out means
    regenerating an unchanged workspace reproduces the same report."""
    payload = canonical_payload(snapshot)
    del payload["version"]
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def _ctx_frame_payload(frame: ContextFrame) -> dict:
    return {
        "id": frame.id,
        "name": frame.name,
        "documents": [
            {
                "id": d.id,
                "title": d.title,
                "body": d.body,
                "highlights": [
                    {"id": h.id, "text": h.text, "count": h.count, "polarity": h.polarity}
                    for h in d.highlights
                ],
            }
            for d in frame.documents
        ],
        "notes": [{"id": n.id, "text": n.text} for n in frame.notes],
        "children": [_ctx_frame_payload(c) for c in frame.children],
    }


def context_to_payload(context: GenerationContext) -> dict:
    return {
        "frames": [_ctx_frame_payload(f) for f in context.frames],
        "unassigned_documents": [
            {
                "id": d.id,
                "title": d.title,
                "body": d.body,
                "highlights": [
                    {"id": h.id, "text": h.text, "count": h.count, "polarity": h.polarity}
                    for h in d.highlights
                ],
            }
            for d in context.unassigned_documents
        ],
        "unassigned_notes": [{"id": n.id, "text": n.text} for n in context.unassigned_notes],
        "task_description": context.task_description,
        "components": [{"name": c.name, "kind": c.kind} for c in context.components],
        "model_config": {
            "model_name": context.model_config.model_name,
            "temperature": context.model_config.temperature,
            "max_tokens": context.model_config.max_tokens,
        },
        "fingerprint": context.fingerprint,
    }


def context_from_payload(payload: dict) -> GenerationContext:
    def frame(f: dict) -> ContextFrame:
        return ContextFrame(
            id=f["id"],
            name=f["name"],
            documents=tuple(doc(d) for d in f["documents"]),
            notes=tuple(ContextNote(n["id"], n["text"]) for n in f["notes"]),
            children=tuple(frame(c) for c in f["children"]),
        )

    def doc(d: dict) -> ContextDocument:
        return ContextDocument(
            id=d["id"],
            title=d["title"],
            body=d["body"],
            highlights=tuple(
                ContextHighlight(h["id"], h["text"], int(h["count"]), h["polarity"])
                for h in d["highlights"]
            ),
        )

    mc = payload["model_config"]
    return GenerationContext(
        frames=tuple(frame(f) for f in payload["frames"]),
        unassigned_documents=tuple(doc(d) for d in payload["unassigned_documents"]),
        unassigned_notes=tuple(
            ContextNote(n["id"], n["text"]) for n in payload["unassigned_notes"]
        ),
        task_description=payload["task_description"],
        components=tuple(ComponentSpec(c["name"], c["kind"]) for c in payload["components"]),
        model_config=ModelConfig(mc["model_name"], float(mc["temperature"]), int(mc["max_tokens"])),
        fingerprint=payload["fingerprint"],
    )


# ---------------------------------------------------------------------------
# sentence segmentation

_TERMINALS = ".!?"
_CLOSERS = "\"')]’”"
_ABBREVIATIONS = frozenset(
    a.lower()
    for a in (
        "e.g.", "i.e.", "etc.", "cf.", "vs.", "al.",
        "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "no.", "fig.",
        "u.s.", "u.k.", "a.m.", "p.m.",
    )
)


def _token_ending_at(text: str, index: int) -> str:
    start = index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start : index + 1]


def segment_sentences(paragraph_text: str) -> list[str]:
    """Split prose into sentences.

    A boundary is a run of terminal punctuation (plus trailing quotes or
    brackets) followed by whitespace and an uppercase letter, or the end of
    the text. Tokens on the abbreviation list never end a sentence.
    Concatenating the result reproduces the input modulo the whitespace
    between sentences.
    """
    text = paragraph_text
    n = len(text)
    sentences: list[str] = []
    start = 0
    i = 0
    while i < n:
        if text[i] not in _TERMINALS:
            i += 1
            continue
        run_end = i + 1
        while run_end < n and text[run_end] in _TERMINALS:
            run_end += 1
        close_end = run_end
        while close_end < n and text[close_end] in _CLOSERS:
            close_end += 1
        if _token_ending_at(text, run_end - 1).lower() in _ABBREVIATIONS:
            i = close_end
            continue
        after_ws = close_end
        while after_ws < n and text[after_ws].isspace():
            after_ws += 1
        at_end = after_ws == n
        next_is_capital = after_ws < n and after_ws > close_end and text[after_ws].isupper()
        if at_end or next_is_capital:
            piece = text[start:close_end].strip()
            if piece:
                sentences.append(piece)
            start = after_ws
            i = after_ws
        else:
            i = close_end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# ---------------------------------------------------------------------------
# diffing

_WORD_RE = re.compile(r"[a-z0-9']+")


def _word_overlap(a: str, b: str) -> float:
    """Jaccard overlap between the word sets of two sentences."""
    wa = set(_WORD_RE.findall(a.lower()))
    wb = set(_WORD_RE.findall(b.lower()))
    if not wa and not wb:
        return 1.0
    union = wa | wb
    return len(wa & wb) / len(union)


# A deleted sentence followed by an inserted one collapses into a single
# modification when they still share at least half their words.
MODIFY_OVERLAP = 0.5


def diff_reports(old: Report, new: Report) -> RevisionDiff:
    """Sentence-level diff aligned by component label.

    Surviving components diff their headings (pseudo-sentence index -1) and
    sentences via longest-common-subsequence with exact equality; replaced
    pairs with word overlap >= 0.5 collapse into ``modified`` records.
    Components present on only one side contribute pure insertions or
    deletions. ``changed_anchors`` is exactly the set of labels of components
    with at least one change.
    """
    changes: list[tuple[str, SentenceChange]] = []
    old_by_label = {c.label(): (i, c) for i, c in enumerate(old.components)}
    new_by_label = {c.label(): (i, c) for i, c in enumerate(new.components)}

    for label, (old_idx, comp) in old_by_label.items():
        if label in new_by_label:
            continue
        changes.append(
            (label, SentenceChange(old_idx, HEADING_INDEX, CHANGE_DELETED, comp.heading, None))
        )
        for j, sentence in enumerate(comp.sentences):
            changes.append((label, SentenceChange(old_idx, j, CHANGE_DELETED, sentence, None)))

    for new_idx, comp in enumerate(new.components):
        label = comp.label()
        if label not in old_by_label:
            changes.append(
                (label, SentenceChange(new_idx, HEADING_INDEX, CHANGE_INSERTED, None, comp.heading))
            )
            for j, sentence in enumerate(comp.sentences):
                changes.append((label, SentenceChange(new_idx, j, CHANGE_INSERTED, None, sentence)))
            continue
        old_idx, old_comp = old_by_label[label]
        if old_comp.heading != comp.heading:
            changes.append(
                (
                    label,
                    SentenceChange(
                        new_idx, HEADING_INDEX, CHANGE_MODIFIED, old_comp.heading, comp.heading
                    ),
                )
            )
        changes.extend(
            (label, change)
            for change in _diff_sentences(old_idx, new_idx, old_comp.sentences, comp.sentences)
        )

    return RevisionDiff(
        changes=tuple(change for _, change in changes),
        changed_anchors=frozenset(label for label, _ in changes),
    )


def _diff_sentences(
    old_idx: int, new_idx: int, old: tuple[str, ...], new: tuple[str, ...]
) -> list[SentenceChange]:
    out: list[SentenceChange] = []
    matcher = SequenceMatcher(a=list(old), b=list(new), autojunk=False)
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        if tag == "delete":
            out.extend(
                SentenceChange(old_idx, i, CHANGE_DELETED, old[i], None) for i in range(i1, i2)
            )
        elif tag == "insert":
            out.extend(
                SentenceChange(new_idx, j, CHANGE_INSERTED, None, new[j]) for j in range(j1, j2)
            )
        else:  # replace: pair up, collapse near matches into modifications
            width = max(i2 - i1, j2 - j1)
            for k in range(width):
                has_old = i1 + k < i2
                has_new = j1 + k < j2
                if has_old and has_new:
                    if _word_overlap(old[i1 + k], new[j1 + k]) >= MODIFY_OVERLAP:
                        out.append(
                            SentenceChange(
                                new_idx, j1 + k, CHANGE_MODIFIED, old[i1 + k], new[j1 + k]
                            )
                        )
                    else:
                        out.append(SentenceChange(old_idx, i1 + k, CHANGE_DELETED, old[i1 + k], None))
                        out.append(SentenceChange(new_idx, j1 + k, CHANGE_INSERTED, None, new[j1 + k]))
                elif has_old:
                    out.append(SentenceChange(old_idx, i1 + k, CHANGE_DELETED, old[i1 + k], None))
                else:
                    out.append(SentenceChange(new_idx, j1 + k, CHANGE_INSERTED, None, new[j1 + k]))
    return out


# ---------------------------------------------------------------------------
# anchoring


def check_anchor_ids(report: Report, main_frame_ids: list[str]) -> list[Violation]:
    """Anchoring violations of ``report`` against a list of top-level frame
    ids: every main frame needs exactly one body paragraph, anchors must
    resolve (the unassigned sentinel is always admissible), and no anchor may
    repeat. Non-body components must not carry anchors."""
    violations: list[Violation] = []
    wanted = set(main_frame_ids)
    seen: set[str] = set()
    for comp in report.components:
        if comp.kind != KIND_BODY:
            if comp.anchor is not None:
                violations.append(
                    Violation(comp.kind, f"{comp.kind} component must not carry an anchor")
                )
            continue
        if comp.anchor is None:
            violations.append(Violation(comp.heading or "body", "body paragraph lacks an anchor"))
            continue
        if comp.anchor in seen:
            violations.append(Violation(comp.anchor, "duplicate body anchor"))
        seen.add(comp.anchor)
        if comp.anchor not in wanted and comp.anchor != UNASSIGNED_ANCHOR:
            violations.append(
                Violation(comp.anchor, "anchor does not resolve to a top-level frame")
            )
    for frame_id in main_frame_ids:
        if frame_id not in seen:
            violations.append(Violation(frame_id, "no body paragraph anchored to this frame"))
    return violations


def check_anchoring(report: Report, snapshot: WorkspaceSnapshot) -> list[Violation]:
    return check_anchor_ids(report, [f.id for f in main_frames(snapshot)])


def check_anchoring_context(report: Report, context: GenerationContext) -> list[Violation]:
    return check_anchor_ids(report, [f.id for f in context.frames])


# ---------------------------------------------------------------------------
# serialization


def component_to_payload(comp: ReportComponent) -> dict:
    return {
        "kind": comp.kind,
        "anchor": comp.anchor,
        "heading": comp.heading,
        "sentences": list(comp.sentences),
    }


def component_from_payload(payload: dict) -> ReportComponent:
    kind = payload["kind"]
    if kind not in (KIND_SUMMARY, KIND_BODY, KIND_CONCLUSION):
        raise ValueError(f"unknown component kind {kind!r}")
    return ReportComponent(
        kind=kind,
        anchor=payload.get("anchor"),
        heading=payload["heading"],
        sentences=tuple(payload["sentences"]),
    )


def report_to_payload(report: Report) -> dict:
    return {
        "report_schema": REPORT_SCHEMA,
        "version": report.version,
        "components": [component_to_payload(c) for c in report.components],
    }


def report_from_payload(payload: dict) -> Report:
    if payload.get("report_schema") != REPORT_SCHEMA:
        raise ValueError(f"unsupported report_schema: {payload.get('report_schema')!r}")
    return Report(
        version=int(payload["version"]),
        components=tuple(component_from_payload(c) for c in payload["components"]),
    )


def report_to_json(report: Report) -> str:
    return json.dumps(report_to_payload(report), indent=2) + "\n"


def report_from_json(text: str) -> Report:
    return report_from_payload(json.loads(text))


def diff_to_payload(diff: RevisionDiff) -> dict:
    return {
        "changes": [
            {
                "component": c.component,
                "sentence": c.sentence,
                "change": c.change,
                "before": c.before,
                "after": c.after,
            }
            for c in diff.changes
        ],
        "changed_anchors": sorted(diff.changed_anchors),
    }


def diff_from_payload(payload: dict) -> RevisionDiff:
    return RevisionDiff(
        changes=tuple(
            SentenceChange(
                component=int(c["component"]),
                sentence=int(c["sentence"]),
                change=c["change"],
                before=c.get("before"),
                after=c.get("after"),
            )
            for c in payload["changes"]
        ),
        changed_anchors=frozenset(payload["changed_anchors"]),
    )
