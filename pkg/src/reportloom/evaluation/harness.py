"""Evaluation harness.

Runs a case suite through the full pipeline in one of two modes:

* ``refinement``: generate the initial report from the before snapshot,
  perceive the delta, infer intent, refine. The system under test.
* ``regeneration``: generate from before, then generate again from after
  and diff the two. The baseline, which by construction rewrites freely.

Results are deterministic for a deterministic backend; two runs over the
same suite write byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..agents.pipeline import generate_initial, infer_interactions, infer_system, refine
from ..agents.types import IntentInference, TARGET_STRUCTURE
from ..narrative import diff_reports, serialize_context
from ..perception import perceive
from .cases import EvalCase
from .metrics import (
    MetricCounts,
    MetricResult,
    aggregate,
    evaluate_revision,
    result_to_payload,
    score_counts,
)

MODE_REFINEMENT = "refinement"
MODE_REGENERATION = "regeneration"
MODES = (MODE_REFINEMENT, MODE_REGENERATION)


@dataclass(frozen=True)
class CaseRun:
    case_id: str
    counts: MetricCounts
    scores: MetricResult
    changed_anchors: tuple[str, ...]
    scope_ok: bool | None  # None when the mode has no scope contract
    scope_violations: tuple[str, ...]


@dataclass(frozen=True)
class HarnessResult:
    mode: str
    runs: tuple[CaseRun, ...]
    aggregate: MetricResult


def run_case(case: EvalCase, backend, mode: str) -> CaseRun:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    context_before = serialize_context(case.before)
    report = generate_initial(context_before, backend)
    context_after = serialize_context(case.after)

    scope_ok: bool | None
    scope_violations: tuple[str, ...] = ()
    if mode == MODE_REGENERATION:
        new_report = generate_initial(context_after, backend)
        diff = diff_reports(report, new_report)
        scope_ok = None
    else:
        delta = perceive(case.before, case.after)
        inferences: list[IntentInference] = []
        if delta.interactions:
            inferences.extend(infer_interactions(delta, context_after, report, backend))
        adjustment = delta.prompt_adjustment
        if adjustment is not None and adjustment.has_narrative_change():
            inferences.append(infer_system(adjustment, context_after, report, backend))
        actionable = tuple(inf for inf in inferences if inf.plan)
        if actionable:
            refinement = refine(report, actionable, context_after, backend)
            new_report = refinement.new_report
            diff = refinement.diff
            scope_violations = refinement.scope_violations
            allowed = {step.target for inf in actionable for step in inf.plan}
            scope_ok = not scope_violations and (
                TARGET_STRUCTURE in allowed or set(diff.changed_anchors) <= allowed
            )
        else:
            new_report = report
            diff = diff_reports(report, report)
            scope_ok = True

    counts = evaluate_revision(
        report, new_report, diff, case.target_anchors, case.expected
    )
    return CaseRun(
        case_id=case.id,
        counts=counts,
        scores=score_counts(counts),
        changed_anchors=tuple(sorted(diff.changed_anchors)),
        scope_ok=scope_ok,
        scope_violations=scope_violations,
    )


def run_harness(cases, backend, mode: str) -> HarnessResult:
    ordered = sorted(cases, key=lambda c: c.id)
    runs = tuple(run_case(case, backend, mode) for case in ordered)
    return HarnessResult(
        mode=mode,
        runs=runs,
        aggregate=aggregate(run.counts for run in runs),
    )


# ---------------------------------------------------------------------------
# reporting


def results_to_payload(result: HarnessResult) -> dict:
    return {
        "mode": result.mode,
        "cases": [
            {
                "id": run.case_id,
                "scores": result_to_payload(run.scores),
                "changed_anchors": list(run.changed_anchors),
                "scope_ok": run.scope_ok,
                "scope_violations": list(run.scope_violations),
            }
            for run in result.runs
        ],
        "aggregate": result_to_payload(result.aggregate),
    }


def _scope_cell(scope_ok: bool | None) -> str:
    if scope_ok is None:
        return "-"
    return "ok" if scope_ok else "VIOLATION"


def format_results(result: HarnessResult) -> str:
    width = max([len("aggregate (micro)")] + [len(r.case_id) for r in result.runs])
    header = (
        f"{'case':<{width}}  {'P_tr':>6} {'R_tr':>6} {'F1_tr':>6} "
        f"{'P_sf':>6} {'R_sf':>6} {'F1_sf':>6}  scope"
    )
    lines = [
        f"revision evaluation - mode: {result.mode}",
        f"cases: {len(result.runs)}",
        "",
        header,
    ]

    def row(label: str, scores: MetricResult, scope: str) -> str:
        return (
            f"{label:<{width}}  "
            f"{scores.precision_tr:>6.3f} {scores.recall_tr:>6.3f} {scores.f1_tr:>6.3f} "
            f"{scores.precision_sf:>6.3f} {scores.recall_sf:>6.3f} {scores.f1_sf:>6.3f}"
            f"  {scope}"
        )

    for run in result.runs:
        lines.append(row(run.case_id, run.scores, _scope_cell(run.scope_ok)))
    lines.append("")
    lines.append(row("aggregate (micro)", result.aggregate, ""))
    return "\n".join(lines).rstrip() + "\n"


def write_results(result: HarnessResult, out_dir: Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "results.json"
    txt_path = out / "results.txt"
    json_path.write_text(
        json.dumps(results_to_payload(result), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    txt_path.write_text(format_results(result), encoding="utf-8")
    return json_path, txt_path
