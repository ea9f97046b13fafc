"""Measurement: metrics, case model, corpus, and the evaluation harness."""

from .cases import CASE_SCHEMA, EvalCase, case_from_payload, case_to_payload, load_case, load_suite, save_case, verify_case
from .corpus import base_snapshot, build_suite
from .harness import (
    MODE_REFINEMENT,
    MODE_REGENERATION,
    MODES,
    CaseRun,
    HarnessResult,
    format_results,
    results_to_payload,
    run_case,
    run_harness,
    write_results,
)
from .metrics import (
    MetricCounts,
    MetricResult,
    aggregate,
    evaluate_revision,
    f1_score,
    match_change,
    result_to_payload,
    safe_ratio,
    score_counts,
)

__all__ = [
    "CASE_SCHEMA",
    "CaseRun",
    "EvalCase",
    "HarnessResult",
    "MODES",
    "MODE_REFINEMENT",
    "MODE_REGENERATION",
    "MetricCounts",
    "MetricResult",
    "aggregate",
    "base_snapshot",
    "build_suite",
    "case_from_payload",
    "case_to_payload",
    "evaluate_revision",
    "f1_score",
    "format_results",
    "load_case",
    "load_suite",
    "match_change",
    "result_to_payload",
    "results_to_payload",
    "run_case",
    "run_harness",
    "safe_ratio",
    "save_case",
    "score_counts",
    "verify_case",
    "write_results",
]
