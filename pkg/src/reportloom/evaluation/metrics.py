"""Revision quality metrics.

Two precision/recall pairs, both computed from a revision diff against a
case's expectations:

* Targeting: of the paragraphs (components) that changed, how many were
  supposed to change (precision), and how many of the paragraphs that were
  supposed to change did (recall). Unit: component labels.
* Semantic fidelity: of the new or modified sentences (headings included),
  how many realize an expected semantic (precision), and how many of the
  expected semantics got realized (recall). Deleted sentences never count
  toward the sentence total but can realize removal expectations.

Empty denominators score 1.0: a revision that was supposed to change
nothing and changed nothing is perfect, not undefined. F1 is 0.0 when both
sides are 0. Aggregation is micro (sum counts, then score).

Expectations are small dicts; see ``match_change`` for the vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from ..narrative import (
    CHANGE_DELETED,
    CHANGE_INSERTED,
    CHANGE_MODIFIED,
    HEADING_INDEX,
    Report,
    RevisionDiff,
    SentenceChange,
)

EXPECTATION_TYPES = frozenset(
    {
        "sentence_added",
        "sentence_contains",
        "sentence_removed",
        "text_replaced",
        "paragraph_added",
        "paragraph_removed",
        "heading_renamed",
        "emphasis_set",
        "component_order",
    }
)

_COUNTABLE = (CHANGE_INSERTED, CHANGE_MODIFIED)


@dataclass(frozen=True)
class MetricCounts:
    n_pp: int = 0  # paragraphs changed
    n_tpp: int = 0  # changed paragraphs that were targets
    n_tp: int = 0  # target paragraphs
    n_s: int = 0  # new or modified sentences
    n_tps: int = 0  # of those, sentences realizing an expectation
    n_si: int = 0  # expected semantics
    n_rsi: int = 0  # realized expected semantics

    def __add__(self, other: "MetricCounts") -> "MetricCounts":
        return MetricCounts(
            **{
                f.name: getattr(self, f.name) + getattr(other, f.name)
                for f in fields(MetricCounts)
            }
        )


@dataclass(frozen=True)
class MetricResult:
    precision_tr: float
    recall_tr: float
    f1_tr: float
    precision_sf: float
    recall_sf: float
    f1_sf: float
    counts: MetricCounts


def safe_ratio(numerator: int, denominator: int) -> float:
    """numerator/denominator with the empty-denominator-is-perfect rule."""
    if denominator == 0:
        return 1.0
    return numerator / denominator


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score_counts(counts: MetricCounts) -> MetricResult:
    p_tr = safe_ratio(counts.n_tpp, counts.n_pp)
    r_tr = safe_ratio(counts.n_tpp, counts.n_tp)
    p_sf = safe_ratio(counts.n_tps, counts.n_s)
    r_sf = safe_ratio(counts.n_rsi, counts.n_si)
    return MetricResult(
        precision_tr=p_tr,
        recall_tr=r_tr,
        f1_tr=f1_score(p_tr, r_tr),
        precision_sf=p_sf,
        recall_sf=r_sf,
        f1_sf=f1_score(p_sf, r_sf),
        counts=counts,
    )


def aggregate(counts_list) -> MetricResult:
    total = MetricCounts()
    for counts in counts_list:
        total = total + counts
    return score_counts(total)


def result_to_payload(result: MetricResult) -> dict:
    return {
        "precision_tr": result.precision_tr,
        "recall_tr": result.recall_tr,
        "f1_tr": result.f1_tr,
        "precision_sf": result.precision_sf,
        "recall_sf": result.recall_sf,
        "f1_sf": result.f1_sf,
        "counts": {
            "n_pp": result.counts.n_pp,
            "n_tpp": result.counts.n_tpp,
            "n_tp": result.counts.n_tp,
            "n_s": result.counts.n_s,
            "n_tps": result.counts.n_tps,
            "n_si": result.counts.n_si,
            "n_rsi": result.counts.n_rsi,
        },
    }


# ---------------------------------------------------------------------------
# expectation matching


def _change_label(change: SentenceChange, old_report: Report, new_report: Report) -> str:
    report = old_report if change.change == CHANGE_DELETED else new_report
    return report.components[change.component].label()


def match_change(
    expectation: dict,
    change: SentenceChange,
    old_report: Report,
    new_report: Report,
) -> bool:
    """Does this atomic change (partially) realize the expectation?

    Vocabulary:
      sentence_added    {component, text}        exact new sentence
      sentence_contains {component, text}        fragment of a new/modified sentence
      sentence_removed  {component, text}        fragment that must leave the text
      text_replaced     {component, old, new}    in-place rewording
      emphasis_set      {component, text, mentions}  detail mentioned >= N times
      paragraph_added   {anchor}                 any change in the new component
      paragraph_removed {anchor}                 any deletion in the old component
      heading_renamed   {component, to}          heading pseudo-sentence change
      component_order   {labels}                 structural only, never matches
    """
    kind = expectation["type"]
    if kind not in EXPECTATION_TYPES:
        raise ValueError(f"unknown expectation type {kind!r}")
    label = _change_label(change, old_report, new_report)
    if kind == "paragraph_added":
        return change.change in _COUNTABLE and label == expectation["anchor"]
    if kind == "paragraph_removed":
        return change.change == CHANGE_DELETED and label == expectation["anchor"]
    if kind == "component_order":
        return False
    if label != expectation["component"]:
        return False
    if kind == "sentence_added":
        return change.change in _COUNTABLE and change.after == expectation["text"]
    if kind == "sentence_contains":
        return (
            change.change in _COUNTABLE
            and change.after is not None
            and expectation["text"] in change.after
        )
    if kind == "sentence_removed":
        if change.change not in (CHANGE_DELETED, CHANGE_MODIFIED):
            return False
        if change.before is None or expectation["text"] not in change.before:
            return False
        return change.after is None or expectation["text"] not in change.after
    if kind == "text_replaced":
        return (
            change.change == CHANGE_MODIFIED
            and change.before is not None
            and expectation["old"] in change.before
            and change.after is not None
            and expectation["new"] in change.after
        )
    if kind == "heading_renamed":
        return change.sentence == HEADING_INDEX and change.after == expectation["to"]
    if kind == "emphasis_set":
        if change.change not in _COUNTABLE or change.after is None:
            return False
        return change.after.count(expectation["text"]) >= int(expectation.get("mentions", 1))
    raise AssertionError(kind)


def _structural_realized(expectation: dict, old_report: Report, new_report: Report):
    """Realization verdict for expectations checkable on the reports alone;
    None means marker-based (realized iff some change matched)."""
    kind = expectation["type"]
    old_labels = [c.label() for c in old_report.components]
    new_labels = [c.label() for c in new_report.components]
    if kind == "paragraph_added":
        return expectation["anchor"] in new_labels and expectation["anchor"] not in old_labels
    if kind == "paragraph_removed":
        return expectation["anchor"] in old_labels and expectation["anchor"] not in new_labels
    if kind == "heading_renamed":
        for comp in new_report.components:
            if comp.label() == expectation["component"]:
                return comp.heading == expectation["to"]
        return False
    if kind == "component_order":
        return new_labels == list(expectation["labels"])
    return None


def evaluate_revision(
    old_report: Report,
    new_report: Report,
    diff: RevisionDiff,
    target_anchors,
    expectations,
) -> MetricCounts:
    targets = set(target_anchors)
    changed = set(diff.changed_anchors)

    countable = [c for c in diff.changes if c.change in _COUNTABLE]
    matched = [False] * len(expectations)
    n_tps = 0
    for change in countable:
        hit = False
        for i, expectation in enumerate(expectations):
            if match_change(expectation, change, old_report, new_report):
                matched[i] = True
                hit = True
        if hit:
            n_tps += 1
    # Deletions do not count as produced sentences but do realize removals.
    for change in diff.changes:
        if change.change != CHANGE_DELETED:
            continue
        for i, expectation in enumerate(expectations):
            if not matched[i] and match_change(expectation, change, old_report, new_report):
                matched[i] = True

    n_rsi = 0
    for i, expectation in enumerate(expectations):
        verdict = _structural_realized(expectation, old_report, new_report)
        realized = matched[i] if verdict is None else verdict
        if realized:
            n_rsi += 1

    return MetricCounts(
        n_pp=len(changed),
        n_tpp=len(changed & targets),
        n_tp=len(targets),
        n_s=len(countable),
        n_tps=n_tps,
        n_si=len(expectations),
        n_rsi=n_rsi,
    )
