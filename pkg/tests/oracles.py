"""Hand-computed metric oracles.

Each oracle pins a tiny report revision whose seven raw counts and six
scores were worked out on paper, independent of the scoring code. The
evaluation tests and the acceptance gate both consume this list; the
numbers here must never be regenerated from the implementation.
"""

from dataclasses import dataclass

from reportloom.narrative import Report, ReportComponent

TWO_THIRDS = 2.0 / 3.0


def _body(anchor, heading, *sentences):
    return ReportComponent(kind="body", anchor=anchor, heading=heading, sentences=sentences)


def _summary(*sentences):
    return ReportComponent(kind="summary", anchor=None, heading="Summary", sentences=sentences)


@dataclass(frozen=True)
class MetricOracle:
    name: str
    old: Report
    new: Report
    targets: tuple[str, ...]
    expectations: tuple[dict, ...]
    # (n_pp, n_tpp, n_tp, n_s, n_tps, n_si, n_rsi)
    counts: tuple[int, int, int, int, int, int, int]
    # (precision_tr, recall_tr, f1_tr, precision_sf, recall_sf, f1_sf)
    scores: tuple[float, float, float, float, float, float]


def _o(name, old_comps, new_comps, targets, expectations, counts, scores):
    return MetricOracle(
        name=name,
        old=Report(version=1, components=tuple(old_comps)),
        new=Report(version=2, components=tuple(new_comps)),
        targets=tuple(targets),
        expectations=tuple(expectations),
        counts=counts,
        scores=scores,
    )


ORACLES = (
    # One insert in the one targeted paragraph, realizing the one expectation.
    _o(
        "perfect_single_insert",
        [_summary("Base."), _body("f-a", "Alpha", "One.")],
        [_summary("Base."), _body("f-a", "Alpha", "One.", "Two.")],
        ["f-a"],
        [{"type": "sentence_added", "component": "f-a", "text": "Two."}],
        (1, 1, 1, 1, 1, 1, 1),
        (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    ),
    # A collateral rewording in an untargeted paragraph halves both precisions.
    _o(
        "collateral_edit",
        [_body("f-a", "Alpha", "One."), _body("f-b", "Beta", "Keep.")],
        [_body("f-a", "Alpha", "One.", "Two."), _body("f-b", "Beta", "Keep mostly.")],
        ["f-a"],
        [{"type": "sentence_added", "component": "f-a", "text": "Two."}],
        (2, 1, 1, 2, 1, 1, 1),
        (0.5, 1.0, TWO_THIRDS, 0.5, 1.0, TWO_THIRDS),
    ),
    # Nothing changed at all: precisions are vacuously perfect, recalls zero.
    _o(
        "missed_target",
        [_body("f-a", "Alpha", "One.")],
        [_body("f-a", "Alpha", "One.")],
        ["f-a"],
        [{"type": "sentence_added", "component": "f-a", "text": "Two."}],
        (0, 0, 1, 0, 0, 1, 0),
        (1.0, 0.0, 0.0, 1.0, 0.0, 0.0),
    ),
    # A pure deletion realizes the removal but never counts as a produced
    # sentence, so the sentence precision denominator stays empty.
    _o(
        "clean_removal",
        [_body("f-a", "Alpha", "One.", "Drop this now.")],
        [_body("f-a", "Alpha", "One.")],
        ["f-a"],
        [{"type": "sentence_removed", "component": "f-a", "text": "Drop this"}],
        (1, 1, 1, 0, 0, 1, 1),
        (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    ),
    # In-place rewording matched by old/new fragments.
    _o(
        "inplace_replacement",
        [_body("f-a", "Alpha", "The fee is 10 dollars.")],
        [_body("f-a", "Alpha", "The fee is 12 dollars.")],
        ["f-a"],
        [{"type": "text_replaced", "component": "f-a", "old": "10", "new": "12"}],
        (1, 1, 1, 1, 1, 1, 1),
        (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    ),
    # A padding sentence next to the realized one costs sentence precision only.
    _o(
        "noisy_insert",
        [_body("f-a", "Alpha", "One.")],
        [_body("f-a", "Alpha", "One.", "Two.", "Padding galore.")],
        ["f-a"],
        [{"type": "sentence_added", "component": "f-a", "text": "Two."}],
        (1, 1, 1, 2, 1, 1, 1),
        (1.0, 1.0, 1.0, 0.5, 1.0, TWO_THIRDS),
    ),
    # A new paragraph: its heading and sentence both count and both realize
    # the addition; the structural verdict comes from the reports.
    _o(
        "paragraph_addition",
        [_summary("Base."), _body("f-a", "Alpha", "One.")],
        [
            _summary("Base."),
            _body("f-a", "Alpha", "One."),
            _body("f-b", "Beta", "Fresh start here."),
        ],
        ["f-b"],
        [{"type": "paragraph_added", "anchor": "f-b"}],
        (1, 1, 1, 2, 2, 1, 1),
        (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    ),
    # A removed paragraph plus an ordering expectation, both structural.
    _o(
        "paragraph_removal_and_order",
        [_summary("Base."), _body("f-a", "Alpha", "One."), _body("f-b", "Beta", "Two.")],
        [_summary("Base."), _body("f-b", "Beta", "Two.")],
        ["f-a"],
        [
            {"type": "paragraph_removed", "anchor": "f-a"},
            {"type": "component_order", "labels": ["summary", "f-b"]},
        ],
        (1, 1, 1, 0, 0, 2, 2),
        (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    ),
    # The right paragraph changed, but with the wrong content.
    _o(
        "unrealized_change",
        [_body("f-a", "Alpha", "One.")],
        [_body("f-a", "Alpha", "One.", "Unrelated padding.")],
        ["f-a"],
        [{"type": "sentence_added", "component": "f-a", "text": "Two."}],
        (1, 1, 1, 1, 0, 1, 0),
        (1.0, 1.0, 1.0, 0.0, 0.0, 0.0),
    ),
    # Two targets, one served; the served insert satisfies a three-mention
    # emphasis expectation.
    _o(
        "partial_recall_with_emphasis",
        [
            _body("f-a", "Alpha", "Gate checks happen daily."),
            _body("f-b", "Beta", "Vendors rotate weekly."),
        ],
        [
            _body(
                "f-a",
                "Alpha",
                "Gate checks happen daily.",
                "Add gate staff because gate queues block the gate lane.",
            ),
            _body("f-b", "Beta", "Vendors rotate weekly."),
        ],
        ["f-a", "f-b"],
        [
            {"type": "emphasis_set", "component": "f-a", "text": "gate", "mentions": 3},
            {"type": "sentence_added", "component": "f-b", "text": "Vendor audits resume."},
        ],
        (1, 1, 2, 1, 1, 2, 1),
        (1.0, 0.5, TWO_THIRDS, 1.0, 0.5, TWO_THIRDS),
    ),
)
