import json
from dataclasses import replace
from pathlib import Path

import pytest

from reportloom.agents import RuleBackend
from reportloom.evaluation import (
    EvalCase,
    MetricCounts,
    aggregate,
    build_suite,
    case_from_payload,
    case_to_payload,
    evaluate_revision,
    f1_score,
    load_case,
    load_suite,
    match_change,
    run_case,
    run_harness,
    safe_ratio,
    save_case,
    score_counts,
    verify_case,
    write_results,
)
from reportloom.evaluation.harness import MODE_REFINEMENT, MODE_REGENERATION, format_results
from reportloom.narrative import diff_reports
from reportloom.perception import InteractionKind
from reportloom.workspace import bump_version

from oracles import ORACLES

CASES_DIR = Path(__file__).resolve().parent.parent / "cases"


# -- hand-computed oracles -----------------------------------------------------


@pytest.mark.parametrize("oracle", ORACLES, ids=[o.name for o in ORACLES])
def test_metric_oracle(oracle):
    diff = diff_reports(oracle.old, oracle.new)
    counts = evaluate_revision(oracle.old, oracle.new, diff, oracle.targets, oracle.expectations)
    assert (
        counts.n_pp,
        counts.n_tpp,
        counts.n_tp,
        counts.n_s,
        counts.n_tps,
        counts.n_si,
        counts.n_rsi,
    ) == oracle.counts
    result = score_counts(counts)
    got = (
        result.precision_tr,
        result.recall_tr,
        result.f1_tr,
        result.precision_sf,
        result.recall_sf,
        result.f1_sf,
    )
    for value, expected in zip(got, oracle.scores):
        assert value == pytest.approx(expected, abs=1e-9)


def test_oracle_list_has_ten_distinct_cases():
    assert len(ORACLES) == 10
    assert len({o.name for o in ORACLES}) == 10


def test_aggregation_is_micro_not_macro():
    collateral = next(o for o in ORACLES if o.name == "collateral_edit")
    partial = next(o for o in ORACLES if o.name == "partial_recall_with_emphasis")
    per_case = []
    for oracle in (collateral, partial):
        diff = diff_reports(oracle.old, oracle.new)
        per_case.append(
            evaluate_revision(oracle.old, oracle.new, diff, oracle.targets, oracle.expectations)
        )
    pooled = aggregate(per_case)
    assert pooled.counts == MetricCounts(n_pp=3, n_tpp=2, n_tp=3, n_s=3, n_tps=2, n_si=3, n_rsi=2)
    assert pooled.precision_tr == pytest.approx(2 / 3, abs=1e-9)
    # the macro mean of the same two cases would be (0.5 + 1.0) / 2
    assert pooled.precision_tr != pytest.approx(0.75, abs=1e-9)


def test_ratio_and_f1_edge_cases():
    assert safe_ratio(0, 0) == 1.0
    assert safe_ratio(3, 4) == 0.75
    assert f1_score(0.0, 0.0) == 0.0
    assert f1_score(1.0, 1.0) == 1.0
    zero = score_counts(MetricCounts())
    assert zero.precision_tr == 1.0 and zero.f1_tr == 1.0


def test_unknown_expectation_type_rejected():
    oracle = ORACLES[0]
    diff = diff_reports(oracle.old, oracle.new)
    with pytest.raises(ValueError):
        match_change({"type": "sentence_sung"}, diff.changes[0], oracle.old, oracle.new)


# -- corpus --------------------------------------------------------------------


@pytest.fixture(scope="module")
def suite():
    return build_suite()


def test_suite_shape(suite):
    assert len(suite) == 21
    assert len({case.id for case in suite}) == 21
    for case in suite:
        assert verify_case(case) == [], case.id


def test_suite_covers_every_interaction_kind(suite):
    declared = {kind for case in suite for kind in case.kinds}
    assert declared == {kind.value for kind in InteractionKind}


def test_case_payload_round_trip(suite):
    for case in suite:
        payload = case_to_payload(case)
        assert case_to_payload(case_from_payload(payload)) == payload


def test_case_save_load(tmp_path, suite):
    path = save_case(suite[0], tmp_path)
    assert load_case(path).id == suite[0].id
    with pytest.raises(FileNotFoundError):
        load_suite(tmp_path / "empty")


def test_verify_case_reports_problems(suite):
    case = suite[0]
    wrong_kinds = replace(case, kinds=("frame_added",))
    assert any("declared kinds" in p for p in verify_case(wrong_kinds))
    vacuous = replace(case, after=bump_version(case.before), kinds=())
    assert any("empty delta" in p for p in verify_case(vacuous))
    bad_expectation = replace(case, expected=case.expected + ({"type": "wishful"},))
    assert any("unknown expectation type" in p for p in verify_case(bad_expectation))
    doubled = replace(case, target_anchors=case.target_anchors * 2)
    assert any("duplicate target anchors" in p for p in verify_case(doubled))


def test_committed_cases_match_builders(suite):
    committed = sorted(CASES_DIR.glob("*.json"))
    assert len(committed) == len(suite)
    by_id = {case.id: case for case in suite}
    for path in committed:
        case = by_id[path.stem]
        expected = json.dumps(case_to_payload(case), indent=2, sort_keys=True) + "\n"
        assert path.read_text(encoding="utf-8") == expected, path.name


# -- harness -------------------------------------------------------------------


@pytest.fixture(scope="module")
def refinement(suite):
    return run_harness(suite, RuleBackend(), MODE_REFINEMENT)


@pytest.fixture(scope="module")
def regeneration(suite):
    return run_harness(suite, RuleBackend(), MODE_REGENERATION)


def test_refinement_mode_is_exact(refinement):
    agg = refinement.aggregate
    for value in (
        agg.precision_tr,
        agg.recall_tr,
        agg.f1_tr,
        agg.precision_sf,
        agg.recall_sf,
        agg.f1_sf,
    ):
        assert value == 1.0
    assert all(run.scope_ok for run in refinement.runs)
    assert all(run.scope_violations == () for run in refinement.runs)


def test_regeneration_trades_precision_for_recall(refinement, regeneration):
    assert regeneration.aggregate.recall_tr == 1.0
    assert regeneration.aggregate.precision_tr < refinement.aggregate.precision_tr
    assert all(run.scope_ok is None for run in regeneration.runs)


def test_unknown_mode_rejected(suite):
    with pytest.raises(ValueError):
        run_case(suite[0], RuleBackend(), "vibes")


def test_harness_runs_are_reproducible(suite, refinement, tmp_path):
    again = run_harness(suite, RuleBackend(), MODE_REFINEMENT)
    dir_a = tmp_path / "a"
    dir_b = tmp_path / "b"
    paths_a = write_results(refinement, dir_a)
    paths_b = write_results(again, dir_b)
    for first, second in zip(paths_a, paths_b):
        assert first.read_bytes() == second.read_bytes()


def test_format_results_lists_every_case(suite, refinement):
    table = format_results(refinement)
    for case in suite:
        assert case.id in table
    assert "aggregate" in table
    assert "mode: refinement" in table
