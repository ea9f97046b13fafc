"""Evaluation case model and on-disk format.

A case is a before/after snapshot pair plus ground truth: which components
are allowed to change (``target_anchors``) and which semantics the revision
must realize (``expected``, see metrics.match_change for the vocabulary).
Cases live one per file as pretty-printed JSON so diffs review well.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..perception import perceive
from ..workspace import (
    WorkspaceSnapshot,
    snapshot_from_payload,
    snapshot_to_payload,
)
from .metrics import EXPECTATION_TYPES

CASE_SCHEMA = 1


@dataclass(frozen=True)
class EvalCase:
    id: str
    title: str
    kinds: tuple[str, ...]  # interaction kinds the pair must exhibit
    before: WorkspaceSnapshot
    after: WorkspaceSnapshot
    target_anchors: tuple[str, ...]
    expected: tuple[dict, ...]


def case_to_payload(case: EvalCase) -> dict:
    return {
        "case_schema": CASE_SCHEMA,
        "id": case.id,
        "title": case.title,
        "kinds": list(case.kinds),
        "before": snapshot_to_payload(case.before),
        "after": snapshot_to_payload(case.after),
        "target_anchors": list(case.target_anchors),
        "expected": [dict(e) for e in case.expected],
    }


def case_from_payload(payload: dict) -> EvalCase:
    schema = payload.get("case_schema")
    if schema != CASE_SCHEMA:
        raise ValueError(f"unsupported case_schema {schema!r}, expected {CASE_SCHEMA}")
    return EvalCase(
        id=payload["id"],
        title=payload["title"],
        kinds=tuple(payload["kinds"]),
        before=snapshot_from_payload(payload["before"]),
        after=snapshot_from_payload(payload["after"]),
        target_anchors=tuple(payload["target_anchors"]),
        expected=tuple(payload["expected"]),
    )


def save_case(case: EvalCase, directory: Path) -> Path:
    path = Path(directory) / f"{case.id}.json"
    path.write_text(
        json.dumps(case_to_payload(case), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return path


def load_case(path: Path) -> EvalCase:
    return case_from_payload(json.loads(Path(path).read_text(encoding="utf-8")))


def load_suite(directory: Path) -> list[EvalCase]:
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no case files under {directory}")
    return [load_case(p) for p in paths]


def verify_case(case: EvalCase) -> list[str]:
    """Consistency problems with a case; empty means usable.

    Checks that the snapshot pair actually produces the declared interaction
    kinds and that expectations use known types. Does not check that any
    particular backend realizes the expectations; that is the measurement.
    """
    problems: list[str] = []
    delta = perceive(case.before, case.after)
    seen_kinds = sorted({i.kind.value for i in delta.interactions})
    declared = sorted(set(case.kinds))
    if seen_kinds != declared:
        problems.append(
            f"declared kinds {declared} but the pair produces {seen_kinds}"
        )
    if delta.is_empty():
        problems.append("before/after pair produces an empty delta")
    for expectation in case.expected:
        etype = expectation.get("type")
        if etype not in EXPECTATION_TYPES:
            problems.append(f"unknown expectation type {etype!r}")
    if len(set(case.target_anchors)) != len(case.target_anchors):
        problems.append("duplicate target anchors")
    return problems
